"""Segment-wise streaming inference with entropy-based abstention.

A document is split into equal-length page segments. Each segment is
compressed, handed to the (mock) language model together with the query,
and scored with a token-entropy uncertainty before its embeddings are
released. Only the answer text, the uncertainty, and the abstention flag
survive a segment, which is what keeps resident memory flat no matter how
long the document is. A ResidencyTrace records the resident embedding
token count over time so the bound can be asserted rather than assumed.

Sequential mode is the memory-bounded contract: at most one segment's
embeddings are alive at a time. Parallel mode runs segments on a small
thread pool; it relaxes the residency bound by the worker count but, since
segment processing is pure, produces the exact same prediction list.
"""

from __future__ import annotations

import math
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .compressor import Page, PageEmbedding

NOT_ANSWERABLE = "Not Answerable"

_PARALLEL_WORKERS = 4


def validate_distribution(probs, *, vocab_size: int | None = None,
                          context: str = "distribution") -> np.ndarray:
    """Check a token distribution: non-negative, sums to 1 within 1e-9."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"{context} must be a non-empty 1-d vector, got shape {p.shape}")
    if vocab_size is not None and p.size != vocab_size:
        raise ValueError(f"{context} has {p.size} entries but vocabulary has {vocab_size}")
    if not np.isfinite(p).all():
        raise ValueError(f"{context} contains non-finite entries")
    if (p < 0.0).any():
        raise ValueError(f"{context} contains negative probabilities")
    total = float(p.sum())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"{context} sums to {total!r}, expected 1 within 1e-9")
    return p


@dataclass(frozen=True)
class Segment:
    """A contiguous run of document pages processed as one inference unit."""

    index: int
    page_ids: tuple[int, ...]
    embeddings: tuple[PageEmbedding, ...]

    def __post_init__(self):
        if not self.page_ids or not self.embeddings:
            raise ValueError(f"segment {self.index} must contain at least one page")
        if list(self.page_ids) != sorted(self.page_ids):
            raise ValueError(f"segment {self.index} page ids must be ordered")

    @property
    def token_count(self) -> int:
        return sum(e.token_count for e in self.embeddings)


@dataclass(frozen=True)
class SegmentPrediction:
    """What a segment leaves behind: text, uncertainty, abstention flag.

    token_dists is populated by run_segment but stripped by stream_process
    once the uncertainty has been computed; keeping the distributions alive
    would defeat the release contract.
    """

    text: str
    token_dists: tuple[np.ndarray, ...]
    uncertainty: float
    abstained: bool
    segment_index: int

    def __post_init__(self):
        if not math.isfinite(self.uncertainty) or self.uncertainty < 0.0:
            raise ValueError(f"uncertainty must be finite and >= 0, got {self.uncertainty}")
        if self.abstained != (self.text.strip() == NOT_ANSWERABLE):
            raise ValueError(
                f"abstained flag must mirror the sentinel answer, got "
                f"abstained={self.abstained} for text {self.text!r}"
            )


@dataclass(frozen=True)
class ScriptEntry:
    """One scripted response: fires when its pages all sit in the segment."""

    query: str
    pages: frozenset[int]
    answer: str
    dists: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not self.query:
            raise ValueError("script entry query must be non-empty")
        if not self.pages:
            raise ValueError("script entry must name at least one page")
        if not self.answer:
            raise ValueError("script entry answer must be non-empty")
        if not self.dists:
            raise ValueError("script entry must provide at least one token distribution")


class MockSlm:
    """Deterministic stand-in for the language model.

    Holds a vocabulary, scripted (query, pages) -> (answer, distributions)
    entries, and default distributions used when nothing matches. An entry
    matches a segment when the query is equal and every one of the entry's
    pages is present in the segment; the first matching entry wins. With no
    match the model answers with the abstention sentinel.

    Instances are immutable after construction and safe to share across
    threads.
    """

    def __init__(self, vocab: Sequence[str],
                 script: Sequence[ScriptEntry] = (),
                 default_dists: Sequence = None):
        if not vocab:
            raise ValueError("vocabulary must be non-empty")
        self.vocab: tuple[str, ...] = tuple(vocab)
        entries = []
        for n, entry in enumerate(script):
            dists = tuple(
                validate_distribution(d, vocab_size=len(self.vocab),
                                      context=f"script entry {n} distribution {k}")
                for k, d in enumerate(entry.dists)
            )
            entries.append(replace(entry, dists=dists))
        self.script: tuple[ScriptEntry, ...] = tuple(entries)
        if default_dists is None:
            default_dists = [np.full(len(self.vocab), 1.0 / len(self.vocab))]
        self.default_dists: tuple[np.ndarray, ...] = tuple(
            validate_distribution(d, vocab_size=len(self.vocab),
                                  context=f"default distribution {k}")
            for k, d in enumerate(default_dists)
        )
        if not self.default_dists:
            raise ValueError("default_dists must contain at least one distribution")

    def respond(self, query: str, page_ids: Sequence[int]) -> tuple[str, tuple[np.ndarray, ...]]:
        present = set(page_ids)
        for entry in self.script:
            if entry.query == query and entry.pages <= present:
                return entry.answer, entry.dists
        return NOT_ANSWERABLE, self.default_dists


@dataclass(frozen=True)
class StreamConfig:
    """Pages per segment and the scheduling mode."""

    segment_len: int = 10
    parallel: bool = False

    def __post_init__(self):
        if self.segment_len < 1:
            raise ValueError(f"segment_len must be >= 1, got {self.segment_len}")


class ResidencyTrace:
    """Time series of resident embedding tokens during one stream run.

    Accumulation is single-writer: stream_process serializes updates (with
    a lock in parallel mode), so samples never interleave mid-update.
    """

    def __init__(self):
        self._samples: list[int] = []

    def record(self, resident_tokens: int) -> None:
        self._samples.append(resident_tokens)

    @property
    def samples(self) -> tuple[int, ...]:
        return tuple(self._samples)

    @property
    def peak(self) -> int:
        return max(self._samples, default=0)

    @property
    def final(self) -> int:
        return self._samples[-1] if self._samples else 0

    def __len__(self) -> int:
        return len(self._samples)


def segment_document(n_pages: int, segment_len: int) -> list[tuple[int, int]]:
    """Split page positions 1..n_pages into consecutive equal-length runs.

    Returns inclusive (start, end) position pairs. The final run keeps the
    remainder and may be shorter; together the runs cover every page
    exactly once.
    """
    if n_pages < 1:
        raise ValueError(f"n_pages must be >= 1, got {n_pages}")
    if segment_len < 1:
        raise ValueError(f"segment_len must be >= 1, got {segment_len}")
    return [(start, min(start + segment_len - 1, n_pages))
            for start in range(1, n_pages + 1, segment_len)]


def token_entropy(dists: Sequence) -> float:
    """Mean Shannon entropy (nats) over the generated token positions.

    Zero for one-hot distributions, at most ln(vocab size) for uniform
    ones. Undefined (an error) for an empty list.
    """
    if len(dists) == 0:
        raise ValueError("token_entropy is undefined for an empty distribution list")
    total = 0.0
    for d in dists:
        p = np.asarray(d, dtype=np.float64)
        nz = p[p > 0.0]
        total += float(-(nz * np.log(nz)).sum())
    return total / len(dists)


class NtpLoss(NamedTuple):
    """Next-token loss; saturated marks zero-probability targets clamped
    to the smallest positive float instead of producing infinity."""

    value: float
    saturated: bool


def ntp_loss(dists: Sequence, target_ids: Sequence[int]) -> NtpLoss:
    """Negative log likelihood of the target ids under the distributions."""
    if len(dists) != len(target_ids):
        raise ValueError(
            f"got {len(dists)} distributions but {len(target_ids)} targets"
        )
    if len(dists) == 0:
        raise ValueError("ntp_loss is undefined for an empty distribution list")
    floor = sys.float_info.min
    total = 0.0
    saturated = False
    for k, (d, t) in enumerate(zip(dists, target_ids)):
        p = np.asarray(d, dtype=np.float64)
        if not (0 <= t < p.size):
            raise ValueError(f"target id {t} out of range for position {k} (vocab {p.size})")
        prob = float(p[t])
        if prob <= 0.0:
            prob = floor
            saturated = True
        total += -math.log(prob)
    return NtpLoss(value=total, saturated=saturated)


def run_segment(segment: Segment, query: str, slm: MockSlm) -> SegmentPrediction:
    """Predict for one segment and score its uncertainty.

    The entropy is computed here, from the full distribution list, before
    the caller releases any buffers.
    """
    text, dists = slm.respond(query, segment.page_ids)
    dists = tuple(
        validate_distribution(d, vocab_size=len(slm.vocab),
                              context=f"segment {segment.index} distribution {k}")
        for k, d in enumerate(dists)
    )
    uncertainty = token_entropy(dists)
    return SegmentPrediction(
        text=text,
        token_dists=dists,
        uncertainty=uncertainty,
        abstained=text.strip() == NOT_ANSWERABLE,
        segment_index=segment.index,
    )


def stream_process(pages: Sequence[Page], query: str, slm: MockSlm,
                   cfg: StreamConfig,
                   compressor: Callable[[Page], PageEmbedding],
                   ) -> tuple[list[SegmentPrediction], ResidencyTrace]:
    """Compress and answer the document one segment at a time.

    Sequential mode compresses a segment, predicts, records only the
    (text, uncertainty, abstained) triple, and releases the segment's
    embeddings before touching the next one; the trace samples the
    resident token count after every acquire and release. Parallel mode
    runs segment jobs on a small thread pool and yields an identical
    prediction list, with the residency bound scaled by the worker count.
    """
    if not pages:
        raise ValueError("document must contain at least one page")
    ranges = segment_document(len(pages), cfg.segment_len)
    trace = ResidencyTrace()
    lock = threading.Lock()
    resident = 0

    def process(args: tuple[int, tuple[int, int]]) -> SegmentPrediction:
        nonlocal resident
        t, (start, end) = args
        seg_pages = pages[start - 1:end]
        embeddings = []
        for pg in seg_pages:
            emb = compressor(pg)
            embeddings.append(emb)
            with lock:
                resident += emb.token_count
                trace.record(resident)
        segment = Segment(index=t, page_ids=tuple(p.page_id for p in seg_pages),
                          embeddings=tuple(embeddings))
        prediction = run_segment(segment, query, slm)
        released = segment.token_count
        del segment, embeddings
        with lock:
            resident -= released
            trace.record(resident)
        return replace(prediction, token_dists=())

    jobs = list(enumerate(ranges, start=1))
    if cfg.parallel:
        with ThreadPoolExecutor(max_workers=_PARALLEL_WORKERS) as pool:
            predictions = list(pool.map(process, jobs))
    else:
        predictions = [process(job) for job in jobs]
    return predictions, trace
