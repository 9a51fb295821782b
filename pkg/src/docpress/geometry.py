"""Page geometry: crop grids, bounding-box math, and OCR-to-crop assignment.

All coordinates are normalized fractions of the page, so every operation
is resolution independent. Functions here are pure and thread-safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OVERLAP_MODES = ("iou", "intersection", "token_coverage")


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in normalized page coordinates, x0<x1 and y0<y1."""

    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (0.0 <= self.x0 < self.x1 <= 1.0):
            raise ValueError(f"x range must satisfy 0 <= x0 < x1 <= 1, got [{self.x0}, {self.x1}]")
        if not (0.0 <= self.y0 < self.y1 <= 1.0):
            raise ValueError(f"y range must satisfy 0 <= y0 < y1 <= 1, got [{self.y0}, {self.y1}]")

    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def intersection_area(self, other: "BBox") -> float:
        iw = min(self.x1, other.x1) - max(self.x0, other.x0)
        ih = min(self.y1, other.y1) - max(self.y0, other.y0)
        return max(0.0, iw) * max(0.0, ih)


@dataclass(frozen=True)
class OcrToken:
    """A recognized word with its box and recognition confidence."""

    text: str
    bbox: BBox
    conf: float

    def __post_init__(self):
        if not self.text:
            raise ValueError("OCR token text must be non-empty")
        if not (0.0 <= self.conf <= 1.0):
            raise ValueError(f"OCR confidence must be in [0, 1], got {self.conf}")


@dataclass(frozen=True)
class GridConfig:
    """Knobs for grid selection and OCR assignment.

    Any positive intersection ("intersection" mode with tau_overlap 0) is
    the default assignment rule; a word box against a much larger crop box
    makes IoU tiny and threshold-fragile, while positive intersection is
    robust and naturally one-to-many for words spanning crop boundaries.
    IoU and token-coverage modes are kept for experiments.
    """

    crop_px: int = 384
    min_crops: int = 4
    max_crops: int = 18
    overlap_mode: str = "intersection"
    tau_overlap: float = 0.0

    def __post_init__(self):
        if self.crop_px < 1:
            raise ValueError(f"crop_px must be >= 1, got {self.crop_px}")
        if self.min_crops < 1:
            raise ValueError(f"min_crops must be >= 1, got {self.min_crops}")
        if self.max_crops < self.min_crops:
            raise ValueError(
                f"max_crops ({self.max_crops}) must be >= min_crops ({self.min_crops})"
            )
        if self.overlap_mode not in OVERLAP_MODES:
            raise ValueError(
                f"overlap_mode must be one of {OVERLAP_MODES}, got {self.overlap_mode!r}"
            )
        if self.tau_overlap < 0.0:
            raise ValueError(f"tau_overlap must be >= 0, got {self.tau_overlap}")


@dataclass(frozen=True)
class CropGrid:
    """An R x C tiling of the resized page into square crops."""

    rows: int
    cols: int
    crop_px: int
    target_w: int
    target_h: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.rows}x{self.cols}")
        if self.target_w != self.cols * self.crop_px or self.target_h != self.rows * self.crop_px:
            raise ValueError("target dims must be (cols*crop_px, rows*crop_px)")

    @property
    def crop_count(self) -> int:
        return self.rows * self.cols


def select_grid(width_px: int, height_px: int, cfg: GridConfig) -> CropGrid:
    """Pick the (rows, cols) whose shape best matches the page aspect ratio.

    Among all grids with min_crops <= rows*cols <= max_crops, minimizes
    |rows/cols - height/width|, breaking ties by fewer crops and then fewer
    rows. Total and deterministic: every aspect ratio admits some grid.
    """
    if width_px < 1 or height_px < 1:
        raise ValueError(f"page dims must be >= 1, got {width_px}x{height_px}")
    ratio = height_px / width_px
    best = None
    best_key = None
    for rows in range(1, cfg.max_crops + 1):
        for cols in range(1, cfg.max_crops + 1):
            n = rows * cols
            if n < cfg.min_crops or n > cfg.max_crops:
                continue
            key = (abs(rows / cols - ratio), n, rows)
            if best_key is None or key < best_key:
                best_key = key
                best = (rows, cols)
    rows, cols = best
    return CropGrid(rows=rows, cols=cols, crop_px=cfg.crop_px,
                    target_w=cols * cfg.crop_px, target_h=rows * cfg.crop_px)


def crop_bbox(grid: CropGrid, i: int, j: int) -> BBox:
    """Normalized box of crop (i, j); crops tile the unit square exactly."""
    if not (0 <= i < grid.rows):
        raise IndexError(f"row index {i} out of range for {grid.rows}x{grid.cols} grid")
    if not (0 <= j < grid.cols):
        raise IndexError(f"col index {j} out of range for {grid.rows}x{grid.cols} grid")
    return BBox(j / grid.cols, i / grid.rows, (j + 1) / grid.cols, (i + 1) / grid.rows)


def overlap(b1: BBox, b2: BBox, mode: str) -> float:
    """Overlap score between two boxes under the given mode.

    iou: intersection over union; intersection: raw intersection area;
    token_coverage: fraction of b1 covered by b2.
    """
    if mode not in OVERLAP_MODES:
        raise ValueError(f"overlap mode must be one of {OVERLAP_MODES}, got {mode!r}")
    inter = b1.intersection_area(b2)
    if mode == "intersection":
        return inter
    if inter == 0.0:
        return 0.0
    if mode == "iou":
        return inter / (b1.area() + b2.area() - inter)
    return inter / b1.area()


def filter_ocr(tokens: list[OcrToken], tau_conf: float) -> list[OcrToken]:
    """Keep tokens with confidence >= tau_conf, preserving order."""
    if not (0.0 <= tau_conf <= 1.0):
        raise ValueError(f"tau_conf must be in [0, 1], got {tau_conf}")
    return [t for t in tokens if t.conf >= tau_conf]


def assign_ocr(tokens: list[OcrToken], grid: CropGrid,
               cfg: GridConfig) -> list[list[list[OcrToken]]]:
    """Assign OCR tokens to crops by bounding-box overlap.

    Token k lands in cell (i, j) iff overlap(k.bbox, crop_bbox(i, j),
    cfg.overlap_mode) > cfg.tau_overlap. A word spanning crop boundaries is
    assigned to every crop it overlaps; crops may end up empty. The scoring
    is computed vectorized but matches `overlap` bit for bit.
    """
    cells: list[list[list[OcrToken]]] = [
        [[] for _ in range(grid.cols)] for _ in range(grid.rows)
    ]
    if not tokens:
        return cells
    boxes = np.array([[t.bbox.x0, t.bbox.y0, t.bbox.x1, t.bbox.y1] for t in tokens])
    areas = (boxes[:, 2] - boxes[:, 0]) * (boxes[:, 3] - boxes[:, 1])
    for i in range(grid.rows):
        cy0, cy1 = i / grid.rows, (i + 1) / grid.rows
        for j in range(grid.cols):
            cx0, cx1 = j / grid.cols, (j + 1) / grid.cols
            iw = np.minimum(boxes[:, 2], cx1) - np.maximum(boxes[:, 0], cx0)
            ih = np.minimum(boxes[:, 3], cy1) - np.maximum(boxes[:, 1], cy0)
            inter = np.maximum(0.0, iw) * np.maximum(0.0, ih)
            if cfg.overlap_mode == "intersection":
                score = inter
            elif cfg.overlap_mode == "iou":
                cell_area = (cx1 - cx0) * (cy1 - cy0)
                score = np.where(inter == 0.0, 0.0,
                                 inter / (areas + cell_area - inter))
            else:
                score = np.where(inter == 0.0, 0.0, inter / areas)
            for k in np.nonzero(score > cfg.tau_overlap)[0]:
                cells[i][j].append(tokens[int(k)])
    return cells
