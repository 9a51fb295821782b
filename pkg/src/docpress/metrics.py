"""Answer-similarity scoring for document QA.

The score is normalized Levenshtein similarity with sub-threshold values
zeroed. Answers are normalized first: case-folded, trimmed, and with
internal whitespace runs collapsed to single spaces, the conventional
treatment for document QA answers.
"""

from __future__ import annotations


def normalize_answer(s: str) -> str:
    """Case-fold, trim, and collapse internal whitespace."""
    return " ".join(s.casefold().split())


def levenshtein(a: str, b: str) -> int:
    """Edit distance (insert, delete, substitute), iterative two-row DP."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1,
                           cur[j - 1] + 1,
                           prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def normalized_similarity(prediction: str, truth: str) -> float:
    """1 - edit_distance / max(len), after normalization; both empty -> 1."""
    p = normalize_answer(prediction)
    t = normalize_answer(truth)
    longest = max(len(p), len(t))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(p, t) / longest


def anls(prediction: str, truth: str, threshold: float = 0.5) -> float:
    """Normalized similarity, zeroed when it falls below the threshold."""
    score = normalized_similarity(prediction, truth)
    return score if score >= threshold else 0.0


def mean_anls(pairs: list[tuple[str, str]], threshold: float = 0.5) -> float:
    """Average score over (prediction, truth) pairs; empty input -> 0."""
    if not pairs:
        return 0.0
    return sum(anls(p, t, threshold) for p, t in pairs) / len(pairs)
