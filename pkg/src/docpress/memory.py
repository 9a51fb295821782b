"""Peak-VRAM model and page-count sweeps.

Predicted peak memory is affine in the context length:

    vram_gb = params_billions * bytes_per_param + k_tokens * kv_gb_per_1k + overhead_gb

with k_tokens measured in units of 1k tokens. Dense models keep every
page's tokens resident, so k grows linearly with page count. Streaming
models hold at most one segment's tokens, so k saturates at
segment_len * tokens_per_page and the predicted memory plateaus.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass


@dataclass(frozen=True)
class MemoryModelParams:
    """Coefficients of the affine peak-memory model; all non-negative."""

    params_billions: float
    bytes_per_param: float
    kv_gb_per_1k_tokens: float
    overhead_gb: float

    def __post_init__(self):
        for label, v in (("params_billions", self.params_billions),
                         ("bytes_per_param", self.bytes_per_param),
                         ("kv_gb_per_1k_tokens", self.kv_gb_per_1k_tokens),
                         ("overhead_gb", self.overhead_gb)):
            if v < 0.0:
                raise ValueError(f"{label} must be >= 0, got {v}")


def predict_vram(params: MemoryModelParams, k_tokens: float) -> float:
    """Predicted peak VRAM in GB for a context of k_tokens (1k units)."""
    if k_tokens < 0.0:
        raise ValueError(f"k_tokens must be >= 0, got {k_tokens}")
    return (params.params_billions * params.bytes_per_param
            + k_tokens * params.kv_gb_per_1k_tokens
            + params.overhead_gb)


@dataclass(frozen=True)
class ModelSpec:
    """One model to sweep: its memory params plus how its context grows."""

    label: str
    params: MemoryModelParams
    tokens_per_page: int
    streaming: bool = False
    segment_len: int | None = None

    def __post_init__(self):
        if not self.label:
            raise ValueError("model label must be non-empty")
        if self.tokens_per_page < 1:
            raise ValueError(f"tokens_per_page must be >= 1, got {self.tokens_per_page}")
        if self.streaming and (self.segment_len is None or self.segment_len < 1):
            raise ValueError("streaming specs need segment_len >= 1")

    def k_tokens(self, pages: int) -> float:
        resident_pages = min(pages, self.segment_len) if self.streaming else pages
        return resident_pages * self.tokens_per_page / 1000.0


@dataclass(frozen=True)
class SweepRow:
    label: str
    pages: int
    k_tokens: float
    predicted_gb: float


@dataclass(frozen=True)
class SweepReport:
    """Rows of predicted memory, page counts ascending within each model."""

    rows: tuple[SweepRow, ...]

    def to_csv(self) -> str:
        """Byte-stable CSV: k_tokens with 3 decimals, GB with 1."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["label", "pages", "k_tokens", "predicted_gb"])
        for row in self.rows:
            writer.writerow([row.label, row.pages, f"{row.k_tokens:.3f}",
                             f"{row.predicted_gb:.1f}"])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        directory = os.path.dirname(os.fspath(path)) or "."
        fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(self.to_csv())
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def mem_sweep(model_specs: list[ModelSpec], page_counts: list[int]) -> SweepReport:
    """Predict peak memory for every (model, page count) pair."""
    if not model_specs:
        raise ValueError("mem_sweep needs at least one model spec")
    if not page_counts:
        raise ValueError("mem_sweep needs at least one page count")
    for n in page_counts:
        if n < 1:
            raise ValueError(f"page counts must be >= 1, got {n}")
    counts = sorted(page_counts)
    rows = []
    for spec in model_specs:
        for pages in counts:
            k = spec.k_tokens(pages)
            rows.append(SweepRow(label=spec.label, pages=pages, k_tokens=k,
                                 predicted_gb=predict_vram(spec.params, k)))
    return SweepReport(rows=tuple(rows))


def fit_two_point(params_billions: float, bytes_per_param: float,
                  tokens_per_page: int, segment_len: int | None,
                  point_a: tuple[int, float],
                  point_b: tuple[int, float]) -> MemoryModelParams:
    """Solve kv cost and overhead from two measured (pages, GB) points.

    Parameter memory is taken as given; the two measurements then pin the
    slope and intercept of the affine model exactly. segment_len of None
    means a dense model. Raises if the two points share a context length
    or force a negative coefficient.
    """
    def k_for(pages: int) -> float:
        resident = min(pages, segment_len) if segment_len is not None else pages
        return resident * tokens_per_page / 1000.0

    (pages_a, gb_a), (pages_b, gb_b) = point_a, point_b
    k_a, k_b = k_for(pages_a), k_for(pages_b)
    if k_a == k_b:
        raise ValueError(
            f"fit points must differ in context length, both give k={k_a}"
        )
    g = (gb_b - gb_a) / (k_b - k_a)
    overhead = gb_a - params_billions * bytes_per_param - k_a * g
    if g < 0.0 or overhead < 0.0:
        raise ValueError(
            f"fit produced negative coefficients (kv={g:.4f} GB/1k tokens, "
            f"overhead={overhead:.4f} GB); adjust the assumed parameter memory"
        )
    return MemoryModelParams(params_billions=params_billions,
                             bytes_per_param=bytes_per_param,
                             kv_gb_per_1k_tokens=g, overhead_gb=overhead)


def load_model_specs(path) -> list[ModelSpec]:
    """Read a JSON list of sweep specs.

    Each entry: label, params_billions, bytes_per_param, kv_gb_per_1k_tokens,
    overhead_gb, tokens_per_page, and optionally streaming plus segment_len.
    """
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list) or not data:
        raise ValueError(f"{path}: expected a non-empty JSON list of model specs")
    specs = []
    for n, raw in enumerate(data):
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: spec [{n}] must be an object")
        try:
            params = MemoryModelParams(
                params_billions=float(raw["params_billions"]),
                bytes_per_param=float(raw["bytes_per_param"]),
                kv_gb_per_1k_tokens=float(raw["kv_gb_per_1k_tokens"]),
                overhead_gb=float(raw["overhead_gb"]),
            )
            spec = ModelSpec(
                label=str(raw["label"]),
                params=params,
                tokens_per_page=int(raw["tokens_per_page"]),
                streaming=bool(raw.get("streaming", False)),
                segment_len=(int(raw["segment_len"])
                             if raw.get("segment_len") is not None else None),
            )
        except KeyError as exc:
            raise ValueError(f"{path}: spec [{n}] missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise ValueError(f"{path}: spec [{n}]: {exc}") from None
        specs.append(spec)
    return specs
