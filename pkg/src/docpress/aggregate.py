"""Document-level answer selection over segment predictions.

Abstained segments are dropped, then the least-uncertain remaining answer
wins. Ties go to the earliest segment, and if everything abstained the
document-level answer is the abstention sentinel itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .streaming import NOT_ANSWERABLE, SegmentPrediction


@dataclass(frozen=True)
class AggregationResult:
    """The selected document-level answer and where it came from."""

    answer: str
    uncertainty: float
    source_segment: int
    all_abstained: bool

    def __post_init__(self):
        if self.all_abstained and self.answer != NOT_ANSWERABLE:
            raise ValueError("an all-abstained result must carry the sentinel answer")


def filter_valid(preds: list[SegmentPrediction]) -> list[SegmentPrediction]:
    """Drop abstained predictions, preserving order."""
    return [p for p in preds if not p.abstained]


def select_answer(valid: list[SegmentPrediction]) -> AggregationResult:
    """Pick the prediction with the lowest uncertainty.

    Ties break toward the lowest segment index, so the result is stable
    under any permutation of the input. An empty input means every segment
    abstained; the sentinel is the only coherent answer then.
    """
    if not valid:
        return AggregationResult(answer=NOT_ANSWERABLE, uncertainty=math.inf,
                                 source_segment=-1, all_abstained=True)
    best = min(valid, key=lambda p: (p.uncertainty, p.segment_index))
    return AggregationResult(answer=best.text, uncertainty=best.uncertainty,
                             source_segment=best.segment_index, all_abstained=False)


def aggregate(preds: list[SegmentPrediction]) -> AggregationResult:
    """filter_valid followed by select_answer."""
    return select_answer(filter_valid(preds))
