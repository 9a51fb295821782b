#!/usr/bin/env python3
"""Regenerate the bundled synthetic corpus under src/docpress/corpus/.

The corpus is deterministic: rerunning this script reproduces the same
five documents byte for byte. Sizes span 3 to 120 pages so the eval and
streaming paths get exercised across short and long documents without any
downloads.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

CORPUS_DIR = Path(__file__).resolve().parents[1] / "src" / "docpress" / "corpus"

WORDS = [
    "revenue", "total", "figure", "table", "chart", "index", "budget",
    "north", "delta", "report", "summary", "margin", "sector", "output",
    "clause", "note", "audit", "metric", "quarterly", "annex",
]

PAGE_SIZES = [
    (768, 1024), (1024, 768), (768, 768), (1536, 1024), (3000, 1000), (800, 1200),
]

VOCAB = ["march", "july", "pilot", "annex", "wing", "ledger", "not", "answerable"]
V = len(VOCAB)
UNIFORM = [1.0 / V] * V


def peaked(idx: int, p: float = 0.97) -> list[float]:
    rest = (1.0 - p) / (V - 1)
    row = [rest] * V
    row[idx] = p
    return row


def spread() -> list[float]:
    return [0.2, 0.2, 0.2, 0.2, 0.05, 0.05, 0.05, 0.05]


def make_pages(rng: random.Random, n: int, tokens_per_page: tuple[int, int],
               size: tuple[int, int] | None = None) -> list[dict]:
    pages = []
    for pid in range(1, n + 1):
        w, h = size if size is not None else rng.choice(PAGE_SIZES)
        ocr = []
        for _ in range(rng.randint(*tokens_per_page)):
            x0 = round(rng.uniform(0.05, 0.78), 4)
            y0 = round(rng.uniform(0.05, 0.90), 4)
            x1 = round(x0 + rng.uniform(0.05, 0.15), 4)
            y1 = round(y0 + rng.uniform(0.02, 0.05), 4)
            ocr.append({
                "text": rng.choice(WORDS),
                "bbox": [x0, y0, min(x1, 1.0), min(y1, 1.0)],
                "conf": round(rng.uniform(0.55, 0.99), 3),
            })
        pages.append({"page_id": pid, "width_px": w, "height_px": h, "ocr": ocr})
    return pages


def entry(query: str, pages: list[int], answer: str, dists: list[list[float]]) -> dict:
    return {"query": query, "pages": pages, "answer": answer, "dists": dists}


def build_tri_evidence() -> dict:
    """Three-segment showcase at segment_len=2.

    Segment 1 answers correctly with low uncertainty, segment 2 has no
    evidence and abstains, segment 3 answers wrongly with high (but not
    maximal) uncertainty.
    """
    rng = random.Random(101)
    q = "What month does the pilot program start?"
    return {
        "doc_id": "tri-evidence",
        # uniform page size keeps the per-page token budget identical
        "pages": make_pages(rng, 6, (2, 4), size=(768, 1024)),
        "qa": [{"query": q, "answer": "March", "evidence_pages": [2]}],
        "slm_script": {
            "vocab": VOCAB,
            "default_dists": [UNIFORM],
            "entries": [
                entry(q, [1, 2], "March", [peaked(0), peaked(2)]),
                entry(q, [5, 6], "July", [spread(), spread()]),
            ],
        },
    }


def build_minutes() -> dict:
    rng = random.Random(202)
    q1 = "Who recorded the minutes?"
    q2 = "What was the attendance?"
    return {
        "doc_id": "minutes-3p",
        "pages": make_pages(rng, 3, (2, 5)),
        "qa": [
            {"query": q1, "answer": "the clerk", "evidence_pages": [2]},
            {"query": q2, "answer": "14", "evidence_pages": []},
        ],
        "slm_script": {
            "vocab": VOCAB,
            "default_dists": [UNIFORM],
            "entries": [
                entry(q1, [2], "the clerk", [peaked(5), peaked(1)]),
            ],
        },
    }


def build_survey() -> dict:
    rng = random.Random(303)
    q1 = "Which sector reported the largest margin?"
    q2 = "Where is the new reading room?"
    return {
        "doc_id": "survey-20p",
        "pages": make_pages(rng, 20, (2, 5)),
        "qa": [
            {"query": q1, "answer": "delta", "evidence_pages": [13]},
            {"query": q2, "answer": "North Wing", "evidence_pages": [3]},
        ],
        "slm_script": {
            "vocab": VOCAB,
            "default_dists": [UNIFORM],
            "entries": [
                entry(q1, [13], "delta", [peaked(3)]),
                entry(q2, [3], "North Wing Annex", [peaked(4), peaked(3), peaked(1)]),
            ],
        },
    }


def build_atlas() -> dict:
    rng = random.Random(404)
    q1 = "Which basin covers the annex plate?"
    q2 = "What is the survey datum?"
    return {
        "doc_id": "atlas-60p",
        "pages": make_pages(rng, 60, (1, 3)),
        "qa": [
            {"query": q1, "answer": "the delta basin", "evidence_pages": [47]},
            {"query": q2, "answer": "mean sea level", "evidence_pages": []},
        ],
        "slm_script": {
            "vocab": VOCAB,
            "default_dists": [UNIFORM],
            "entries": [
                entry(q1, [47], "the delta basin", [peaked(3), peaked(5)]),
            ],
        },
    }


def build_ledger() -> dict:
    rng = random.Random(505)
    q1 = "What closes the annual ledger?"
    q2 = "Which quarter shows the audit note?"
    return {
        "doc_id": "ledger-120p",
        "pages": make_pages(rng, 120, (1, 3)),
        "qa": [
            {"query": q1, "answer": "the final audit", "evidence_pages": [118]},
            {"query": q2, "answer": "the second quarter", "evidence_pages": [7]},
        ],
        "slm_script": {
            "vocab": VOCAB,
            "default_dists": [UNIFORM],
            "entries": [
                entry(q1, [118], "the final audit", [peaked(5), peaked(0)]),
                entry(q1, [31], "the march ledger", [spread(), spread()]),
                entry(q2, [7], "the second quarter", [peaked(1), peaked(4)]),
            ],
        },
    }


def main() -> None:
    CORPUS_DIR.mkdir(parents=True, exist_ok=True)
    docs = {
        "tri_evidence_6p.json": build_tri_evidence(),
        "minutes_3p.json": build_minutes(),
        "survey_20p.json": build_survey(),
        "atlas_60p.json": build_atlas(),
        "ledger_120p.json": build_ledger(),
    }
    for name, payload in docs.items():
        path = CORPUS_DIR / name
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
        print(f"wrote {path} ({len(payload['pages'])} pages)")


if __name__ == "__main__":
    main()
