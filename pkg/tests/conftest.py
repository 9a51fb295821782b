"""Shared fixtures and independent reference implementations.

The reference functions here deliberately avoid the library's vectorized
code paths (pure-Python loops, painted pixel grids) so tests compare two
genuinely different routes to the same answer.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

import docpress as dp


@pytest.fixture(scope="session")
def corpus_docs():
    return [dp.load_document(p) for p in dp.corpus_paths()]


@pytest.fixture(scope="session")
def desk_compressor():
    return dp.PageCompressor.build()


# ---------------------------------------------------------------------------
# scalar attention reference


def scalar_cross_attention(queries, keys_values, params) -> list[list[float]]:
    """Element-by-element reference for the residual attention block."""
    q = np.asarray(queries, dtype=float).tolist()
    kv = np.asarray(keys_values, dtype=float).tolist()
    d = params.d_model

    def mat(a, b):
        rows, inner, cols = len(a), len(b), len(b[0])
        return [[sum(a[i][k] * b[k][j] for k in range(inner)) for j in range(cols)]
                for i in range(rows)]

    if not kv:
        return [row[:] for row in q]
    qp = mat(q, params.w_q.tolist())
    kp = mat(kv, params.w_k.tolist())
    vp = mat(kv, params.w_v.tolist())
    scale = 1.0 / math.sqrt(d)
    out = []
    for i in range(len(q)):
        scores = [sum(qp[i][x] * kp[j][x] for x in range(d)) * scale
                  for j in range(len(kv))]
        peak = max(scores)
        exps = [math.exp(s - peak) for s in scores]
        denom = sum(exps)
        weights = [e / denom for e in exps]
        ctx = [sum(weights[j] * vp[j][x] for j in range(len(kv))) for x in range(d)]
        proj = [sum(ctx[k] * params.w_o.tolist()[k][x] for k in range(d))
                for x in range(d)]
        out.append([q[i][x] + proj[x] for x in range(d)])
    return out


def scalar_attention_weights(queries, keys_values, params) -> list[list[float]]:
    """Just the softmax weights of the reference computation."""
    q = np.asarray(queries, dtype=float).tolist()
    kv = np.asarray(keys_values, dtype=float).tolist()
    d = params.d_model

    def mat(a, b):
        rows, inner, cols = len(a), len(b), len(b[0])
        return [[sum(a[i][k] * b[k][j] for k in range(inner)) for j in range(cols)]
                for i in range(rows)]

    qp = mat(q, params.w_q.tolist())
    kp = mat(kv, params.w_k.tolist())
    scale = 1.0 / math.sqrt(d)
    weights = []
    for i in range(len(q)):
        scores = [sum(qp[i][x] * kp[j][x] for x in range(d)) * scale
                  for j in range(len(kv))]
        peak = max(scores)
        exps = [math.exp(s - peak) for s in scores]
        denom = sum(exps)
        weights.append([e / denom for e in exps])
    return weights


# ---------------------------------------------------------------------------
# rasterized OCR assignment reference

_ID_MAPS: dict[tuple[int, int, int], np.ndarray] = {}


def rasterized_crop_hits(bbox, rows: int, cols: int, res: int = 1000) -> set[tuple[int, int]]:
    """Paint the token and the crop grid on a res x res pixel canvas and
    report which crops share a painted pixel with the token."""
    key = (rows, cols, res)
    id_map = _ID_MAPS.get(key)
    if id_map is None:
        ys = (np.arange(res) * rows) // res
        xs = (np.arange(res) * cols) // res
        id_map = (ys[:, None] * cols + xs[None, :]).astype(np.int32)
        _ID_MAPS[key] = id_map
    px0 = math.floor(bbox.x0 * res)
    px1 = math.ceil(bbox.x1 * res)
    py0 = math.floor(bbox.y0 * res)
    py1 = math.ceil(bbox.y1 * res)
    ids = np.unique(id_map[py0:py1, px0:px1])
    return {(int(v) // cols, int(v) % cols) for v in ids}


def random_clear_bbox(rng: np.random.Generator, rows: int, cols: int,
                      clearance: float = 2e-3) -> dp.BBox:
    """Random box whose edges stay `clearance` away from every gridline."""
    xlines = [j / cols for j in range(cols + 1)]
    ylines = [i / rows for i in range(rows + 1)]
    while True:
        x0 = rng.uniform(0.0, 0.93)
        y0 = rng.uniform(0.0, 0.93)
        x1 = x0 + rng.uniform(0.01, 0.3)
        y1 = y0 + rng.uniform(0.01, 0.3)
        if x1 > 1.0 or y1 > 1.0:
            continue
        edges_clear = all(
            abs(e - line) > clearance
            for e, lines in ((x0, xlines), (x1, xlines), (y0, ylines), (y1, ylines))
            for line in lines
        )
        if edges_clear:
            return dp.BBox(x0, y0, x1, y1)


# ---------------------------------------------------------------------------
# synthetic pages


WORDS = ["alpha", "bravo", "delta", "echo", "fable", "gamma", "harbor",
         "ivory", "jolt", "karst", "lumen", "copper"]


def random_page(rng: np.random.Generator, page_id: int, n_ocr: int,
                width: int | None = None, height: int | None = None) -> dp.Page:
    sizes = [(768, 1024), (1024, 768), (768, 768), (3000, 1000), (800, 1200)]
    if width is None or height is None:
        width, height = sizes[int(rng.integers(len(sizes)))]
    tokens = []
    if n_ocr:
        x0 = rng.uniform(0.02, 0.85, size=n_ocr)
        y0 = rng.uniform(0.02, 0.9, size=n_ocr)
        bw = rng.uniform(0.02, 0.12, size=n_ocr)
        bh = rng.uniform(0.01, 0.06, size=n_ocr)
        confs = rng.uniform(0.4, 1.0, size=n_ocr)
        words = rng.integers(len(WORDS), size=n_ocr)
        tokens = [
            dp.OcrToken(text=WORDS[words[k]],
                        bbox=dp.BBox(float(x0[k]), float(y0[k]),
                                     float(x0[k] + bw[k]), float(y0[k] + bh[k])),
                        conf=float(confs[k]))
            for k in range(n_ocr)
        ]
    return dp.Page(page_id=page_id, width_px=width, height_px=height,
                   ocr=tuple(tokens))


def uniform_dist(v: int) -> np.ndarray:
    return np.full(v, 1.0 / v)


def one_hot(v: int, idx: int) -> np.ndarray:
    d = np.zeros(v)
    d[idx] = 1.0
    return d
