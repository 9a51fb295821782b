"""Two-stage page compression to a fixed per-page token budget.

A page is tiled into crops, each crop's synthetic visual tokens absorb the
OCR embeddings assigned to that crop (local fusion), and a small set of
global tokens per region then absorbs the fused local tokens (global
fusion). Concatenating the global tokens in row-major crop order gives the
page embedding. Its length is rows * cols * global_tokens_per_region and
never depends on how many OCR tokens the page carries.

The visual and text encoders here are deterministic hash mocks: every
feature value is a pure function of identifying indices plus a seed. They
stand in for real pretrained encoders so that the structural properties
(fixed budgets, locality, memory behavior) are exactly testable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import hashing
from .attention import AttentionParams, cross_attention
from .geometry import CropGrid, GridConfig, OcrToken, assign_ocr, filter_ocr, select_grid

_SALT_VISUAL = 0x56495355
_SALT_TEXT = 0x54455854
_ROLE_LOCAL = 1
_ROLE_GLOBAL = 2


@dataclass(frozen=True)
class EncoderConfig:
    """Shape and seed of the mock encoders.

    patches_per_crop is the local token count per crop;
    global_tokens_per_region is the per-crop share of the page budget.
    """

    d_model: int = 32
    patches_per_crop: int = 16
    global_tokens_per_region: int = 4
    seed: int = 0

    def __post_init__(self):
        for label, v in (("d_model", self.d_model),
                         ("patches_per_crop", self.patches_per_crop),
                         ("global_tokens_per_region", self.global_tokens_per_region)):
            if v < 1:
                raise ValueError(f"{label} must be >= 1, got {v}")


@dataclass(frozen=True)
class Page:
    """One document page: pixel dims plus its OCR tokens."""

    page_id: int
    width_px: int
    height_px: int
    ocr: tuple[OcrToken, ...] = ()

    def __post_init__(self):
        if self.width_px < 1 or self.height_px < 1:
            raise ValueError(
                f"page {self.page_id}: dims must be >= 1, got "
                f"{self.width_px}x{self.height_px}"
            )


@dataclass(frozen=True, eq=False)
class PageFeatures:
    """Per-crop feature blocks: local patches and global region tokens."""

    local: tuple[tuple[np.ndarray, ...], ...]
    global_regions: tuple[tuple[np.ndarray, ...], ...]


@dataclass(frozen=True, eq=False)
class PageEmbedding:
    """Fixed-length compressed page representation."""

    tokens: np.ndarray
    page_id: int

    @property
    def token_count(self) -> int:
        return self.tokens.shape[0]


def page_budget(grid: CropGrid, cfg: EncoderConfig) -> int:
    """Output tokens per page under this grid and config."""
    return grid.crop_count * cfg.global_tokens_per_region


def encode_page_visual(page: Page, grid: CropGrid, cfg: EncoderConfig) -> PageFeatures:
    """Synthesize deterministic visual features for every crop.

    Each entry is a pure function of (seed, page_id, stream, crop index,
    token index, dim index), with values in [-1, 1). The global stream
    plays the role of features from a downsampled whole-page view,
    partitioned into one small block per crop region.
    """
    local_rows = []
    global_rows = []
    for i in range(grid.rows):
        local_row = []
        global_row = []
        for j in range(grid.cols):
            crop_idx = i * grid.cols + j
            local_key = hashing.chain(_SALT_VISUAL, cfg.seed, page.page_id,
                                      _ROLE_LOCAL, crop_idx)
            global_key = hashing.chain(_SALT_VISUAL, cfg.seed, page.page_id,
                                       _ROLE_GLOBAL, crop_idx)
            local_row.append(hashing.unit_grid(local_key, cfg.patches_per_crop, cfg.d_model))
            global_row.append(hashing.unit_grid(global_key, cfg.global_tokens_per_region,
                                                cfg.d_model))
        local_rows.append(tuple(local_row))
        global_rows.append(tuple(global_row))
    return PageFeatures(local=tuple(local_rows), global_regions=tuple(global_rows))


@lru_cache(maxsize=65536)
def _word_key(seed: int, folded_text: str) -> int:
    return hashing.chain(_SALT_TEXT, seed, hashing.text_key(folded_text))


def embed_ocr(tokens: list[OcrToken], cfg: EncoderConfig) -> np.ndarray:
    """Embed OCR words as unit-norm hash vectors, one row per token.

    Text is case-folded first, so "Berlin" and "berlin" share a row. An
    empty token list yields a (0, d_model) matrix.
    """
    if not tokens:
        return np.zeros((0, cfg.d_model))
    keys = np.array([_word_key(cfg.seed, t.text.casefold()) for t in tokens],
                    dtype=np.uint64)
    rows = hashing.unit_rows_for_keys(keys, cfg.d_model)
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return rows / norms


def local_ocr_compression(v_ij: np.ndarray, t_ij: np.ndarray,
                          params: AttentionParams) -> np.ndarray:
    """Fuse a crop's visual tokens with its OCR embeddings.

    The visual tokens query the OCR tokens and the result is residual
    added, so the sequence length never grows. With no OCR in the crop the
    visual tokens pass through unchanged.
    """
    return cross_attention(v_ij, t_ij, params)


def global_visual_compression(g_ij: np.ndarray, v_tilde_ij: np.ndarray,
                              params: AttentionParams) -> np.ndarray:
    """Let a region's global tokens absorb its fused local tokens."""
    return cross_attention(g_ij, v_tilde_ij, params)


def compress_page(page: Page, cfg: EncoderConfig, grid_cfg: GridConfig,
                  local_params: AttentionParams, global_params: AttentionParams,
                  *, ocr_conf_threshold: float = 0.0) -> PageEmbedding:
    """Run the full per-page pipeline and return the fixed-budget embedding.

    Steps: pick the crop grid, confidence-filter OCR, assign tokens to
    crops, synthesize visual features, embed each crop's OCR, fuse locally
    then globally, and concatenate the per-region outputs in row-major
    order. The output token count is page_budget(grid, cfg) regardless of
    OCR density.
    """
    grid = select_grid(page.width_px, page.height_px, grid_cfg)
    kept = filter_ocr(list(page.ocr), ocr_conf_threshold)
    assigned = assign_ocr(kept, grid, grid_cfg)
    feats = encode_page_visual(page, grid, cfg)
    blocks = []
    for i in range(grid.rows):
        for j in range(grid.cols):
            t_ij = embed_ocr(assigned[i][j], cfg)
            v_tilde = local_ocr_compression(feats.local[i][j], t_ij, local_params)
            blocks.append(global_visual_compression(feats.global_regions[i][j],
                                                    v_tilde, global_params))
    return PageEmbedding(tokens=np.vstack(blocks), page_id=page.page_id)


def token_reduction_ratio(baseline_tokens_per_page: int,
                          compressed_tokens_per_page: int) -> float:
    """How many times fewer tokens the compressed page uses."""
    if compressed_tokens_per_page <= 0:
        raise ValueError(
            f"compressed tokens per page must be > 0, got {compressed_tokens_per_page}"
        )
    return baseline_tokens_per_page / compressed_tokens_per_page


@dataclass(frozen=True)
class PageCompressor:
    """Bundles configs and attention weights into a page -> embedding callable.

    Immutable, so one instance can compress pages from any number of
    threads concurrently.
    """

    encoder: EncoderConfig
    grid: GridConfig
    local_params: AttentionParams
    global_params: AttentionParams
    ocr_conf_threshold: float = 0.0

    @classmethod
    def build(cls, encoder: EncoderConfig | None = None,
              grid: GridConfig | None = None,
              ocr_conf_threshold: float = 0.0) -> "PageCompressor":
        encoder = encoder if encoder is not None else EncoderConfig()
        grid = grid if grid is not None else GridConfig()
        return cls(
            encoder=encoder,
            grid=grid,
            local_params=AttentionParams.init(encoder.d_model,
                                              hashing.chain(encoder.seed, 1)),
            global_params=AttentionParams.init(encoder.d_model,
                                               hashing.chain(encoder.seed, 2)),
            ocr_conf_threshold=ocr_conf_threshold,
        )

    def __call__(self, page: Page) -> PageEmbedding:
        return compress_page(page, self.encoder, self.grid,
                             self.local_params, self.global_params,
                             ocr_conf_threshold=self.ocr_conf_threshold)

    def grid_for(self, page: Page) -> CropGrid:
        return select_grid(page.width_px, page.height_px, self.grid)

    def budget_for(self, page: Page) -> int:
        return page_budget(self.grid_for(page), self.encoder)
