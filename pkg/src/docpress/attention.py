"""Minimal dense linear algebra and the residual cross-attention block.

Feature matrices are plain float64 numpy arrays of shape (tokens, dim).
All operations here are pure functions over immutable inputs and are safe
to call concurrently; nothing mutates its arguments.

Design choices, made once and relied on everywhere:
  * single-head attention with scale 1/sqrt(d);
  * no layer norm and no feed-forward block, only the attention term;
  * an empty key/value set contributes nothing, so the residual makes the
    output equal the queries exactly (this keeps textless regions well
    defined);
  * projection weights are a pure function of (seed, d), so runs are
    reproducible without weight files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import hashing

_SALT_PARAMS = 0x41545457  # namespaces attention weight derivation


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible."""


def as_features(data, *, name: str = "matrix") -> np.ndarray:
    """Coerce to a float64 (tokens, dim) matrix, enforcing the invariants.

    Zero rows are allowed, zero columns are not, and every entry must be
    finite.
    """
    m = np.asarray(data, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-d, got shape {m.shape}")
    if m.shape[1] < 1:
        raise ShapeError(f"{name} must have at least one column, got shape {m.shape}")
    if m.size and not np.isfinite(m).all():
        raise ValueError(f"{name} contains non-finite entries")
    return m


def matmul(a, b) -> np.ndarray:
    """Matrix product with an explicit shape check naming both operands."""
    a = as_features(a, name="left operand")
    b = as_features(b, name="right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}: "
            f"inner dimensions differ"
        )
    return a @ b


def softmax_rows(m) -> np.ndarray:
    """Row-wise softmax with max-subtraction for numerical stability.

    Each output row is non-negative and sums to 1. A matrix with zero rows
    is returned unchanged.
    """
    m = as_features(m, name="softmax input")
    if m.shape[0] == 0:
        return m.copy()
    shifted = m - m.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class AttentionParams:
    """Projection weights for one cross-attention block.

    All four projections are d_model x d_model. Instances are treated as
    immutable and may be shared freely across threads.
    """

    d_model: int
    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    w_o: np.ndarray
    seed: int = 0

    def __post_init__(self):
        if self.d_model < 1:
            raise ValueError(f"d_model must be >= 1, got {self.d_model}")
        for label, w in (("w_q", self.w_q), ("w_k", self.w_k),
                         ("w_v", self.w_v), ("w_o", self.w_o)):
            if w.shape != (self.d_model, self.d_model):
                raise ShapeError(
                    f"{label} must be {self.d_model}x{self.d_model}, got {w.shape}"
                )

    @classmethod
    def init(cls, d_model: int, seed: int) -> "AttentionParams":
        """Deterministic initialization, a pure function of (seed, d_model).

        Entries come from the hash generator scaled by 1/sqrt(d_model).
        """
        if d_model < 1:
            raise ValueError(f"d_model must be >= 1, got {d_model}")
        scale = 1.0 / math.sqrt(d_model)
        mats = [
            hashing.unit_grid(hashing.chain(_SALT_PARAMS, seed, role), d_model, d_model) * scale
            for role in range(4)
        ]
        return cls(d_model=d_model, w_q=mats[0], w_k=mats[1], w_v=mats[2],
                   w_o=mats[3], seed=seed)


def cross_attention(queries, keys_values, params: AttentionParams) -> np.ndarray:
    """Residual single-head cross-attention.

    Returns queries + softmax(Q K^T / sqrt(d)) V W_o, where Q, K, V are the
    projected queries and key/value tokens. The output always has the same
    shape as the queries, which is what keeps downstream token budgets
    fixed. If keys_values has zero rows the queries are returned unchanged
    (as a copy).
    """
    q = as_features(queries, name="queries")
    kv = as_features(keys_values, name="keys_values")
    if q.shape[1] != params.d_model:
        raise ShapeError(
            f"queries have dim {q.shape[1]} (shape {q.shape}) but params expect "
            f"d_model={params.d_model}"
        )
    if kv.shape[1] != params.d_model:
        raise ShapeError(
            f"keys_values have dim {kv.shape[1]} (shape {kv.shape}) but params expect "
            f"d_model={params.d_model}"
        )
    if kv.shape[0] == 0:
        return q.copy()
    qp = q @ params.w_q
    kp = kv @ params.w_k
    vp = kv @ params.w_v
    scores = (qp @ kp.T) / math.sqrt(params.d_model)
    weights = softmax_rows(scores)
    return q + (weights @ vp) @ params.w_o
