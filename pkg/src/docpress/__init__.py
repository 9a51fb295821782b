"""Fixed-budget page compression with constant-memory streaming QA.

The library compresses each document page to a fixed number of embedding
tokens (independent of OCR density), streams long documents segment by
segment under a flat memory ceiling, abstains on unsupported segments, and
selects the least-uncertain answer document-wide. A harness layer adds
document ingestion, a peak-memory model with sweep reports, and answer
scoring.
"""

from __future__ import annotations

from importlib.resources import files
from pathlib import Path

from .aggregate import AggregationResult, aggregate, filter_valid, select_answer
from .attention import AttentionParams, ShapeError, cross_attention, matmul, softmax_rows
from .compressor import (
    EncoderConfig,
    Page,
    PageCompressor,
    PageEmbedding,
    PageFeatures,
    compress_page,
    embed_ocr,
    encode_page_visual,
    global_visual_compression,
    local_ocr_compression,
    page_budget,
    token_reduction_ratio,
)
from .document import (
    Document,
    DocumentError,
    QaEntry,
    build_mock_slm,
    load_document,
    parse_document,
    save_document,
)
from .geometry import (
    BBox,
    CropGrid,
    GridConfig,
    OcrToken,
    assign_ocr,
    crop_bbox,
    filter_ocr,
    overlap,
    select_grid,
)
from .memory import (
    MemoryModelParams,
    ModelSpec,
    SweepReport,
    fit_two_point,
    mem_sweep,
    predict_vram,
)
from .metrics import anls, levenshtein, mean_anls, normalized_similarity
from .streaming import (
    NOT_ANSWERABLE,
    MockSlm,
    NtpLoss,
    ResidencyTrace,
    ScriptEntry,
    Segment,
    SegmentPrediction,
    StreamConfig,
    ntp_loss,
    run_segment,
    segment_document,
    stream_process,
    token_entropy,
)

__version__ = "0.1.0"


def corpus_paths() -> list[Path]:
    """Paths of the bundled synthetic documents, sorted by filename."""
    corpus = files("docpress") / "corpus"
    return sorted(Path(str(p)) for p in corpus.iterdir() if p.name.endswith(".json"))
