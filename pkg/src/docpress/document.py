"""Document file ingestion, validation, and round-trip serialization.

Documents are UTF-8 JSON with this shape:

    {
      "doc_id": "demo",
      "pages": [
        {"page_id": 1, "width_px": 768, "height_px": 1024,
         "ocr": [{"text": "total", "bbox": [0.1, 0.2, 0.3, 0.25], "conf": 0.97}]}
      ],
      "qa": [
        {"query": "What is the total?", "answer": "42", "evidence_pages": [1]}
      ],
      "slm_script": {
        "vocab": ["42", "yes", "no"],
        "default_dists": [[0.34, 0.33, 0.33]],
        "entries": [
          {"query": "What is the total?", "pages": [1], "answer": "42",
           "dists": [[0.98, 0.01, 0.01]]}
        ]
      }
    }

Bounding boxes are normalized [x0, y0, x1, y1] fractions of the page.
"qa" and "slm_script" are optional. Validation errors name the exact
location in the file, e.g. pages[3].ocr[7].bbox.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .compressor import Page
from .geometry import BBox, OcrToken
from .streaming import MockSlm, ScriptEntry


class DocumentError(ValueError):
    """A document file failed validation; the message names the field."""


@dataclass(frozen=True)
class QaEntry:
    query: str
    answer: str
    evidence_pages: tuple[int, ...]


@dataclass(frozen=True)
class ScriptEntrySpec:
    query: str
    pages: tuple[int, ...]
    answer: str
    dists: tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class SlmScriptSpec:
    vocab: tuple[str, ...]
    default_dists: tuple[tuple[float, ...], ...] | None
    entries: tuple[ScriptEntrySpec, ...]


@dataclass(frozen=True)
class Document:
    doc_id: str
    pages: tuple[Page, ...]
    qa: tuple[QaEntry, ...] = ()
    slm_script: SlmScriptSpec | None = None

    @property
    def page_ids(self) -> tuple[int, ...]:
        return tuple(p.page_id for p in self.pages)


def _expect(value, kind, path: str, *, type_name: str):
    if not isinstance(value, kind) or isinstance(value, bool):
        raise DocumentError(f"{path}: expected {type_name}, got {type(value).__name__}")
    return value


def _expect_str(value, path: str, *, allow_empty: bool = False) -> str:
    if not isinstance(value, str):
        raise DocumentError(f"{path}: expected string, got {type(value).__name__}")
    if not allow_empty and not value:
        raise DocumentError(f"{path}: must be non-empty")
    return value


def _expect_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DocumentError(f"{path}: expected number, got {type(value).__name__}")
    return float(value)


def _get(obj: dict, key: str, path: str):
    if key not in obj:
        raise DocumentError(f"{path}.{key}: missing required field")
    return obj[key]


def _parse_bbox(raw, path: str) -> BBox:
    coords = _expect(raw, list, path, type_name="list of 4 numbers")
    if len(coords) != 4:
        raise DocumentError(f"{path}: expected 4 coordinates, got {len(coords)}")
    x0, y0, x1, y1 = (_expect_number(c, f"{path}[{n}]") for n, c in enumerate(coords))
    for n, c in enumerate((x0, y0, x1, y1)):
        if not (0.0 <= c <= 1.0):
            raise DocumentError(f"{path}: coordinate {n} is {c}, outside [0, 1]")
    if x1 <= x0:
        raise DocumentError(f"{path}: x1 ({x1}) must exceed x0 ({x0})")
    if y1 <= y0:
        raise DocumentError(f"{path}: y1 ({y1}) must exceed y0 ({y0})")
    return BBox(x0, y0, x1, y1)


def _parse_ocr_token(raw, path: str) -> OcrToken:
    obj = _expect(raw, dict, path, type_name="object")
    text = _expect_str(_get(obj, "text", path), f"{path}.text")
    bbox = _parse_bbox(_get(obj, "bbox", path), f"{path}.bbox")
    conf = _expect_number(_get(obj, "conf", path), f"{path}.conf")
    if not (0.0 <= conf <= 1.0):
        raise DocumentError(f"{path}.conf: {conf} outside [0, 1]")
    return OcrToken(text=text, bbox=bbox, conf=conf)


def _parse_page(raw, path: str) -> Page:
    obj = _expect(raw, dict, path, type_name="object")
    page_id = _expect(_get(obj, "page_id", path), int, f"{path}.page_id",
                      type_name="integer")
    for dim in ("width_px", "height_px"):
        v = _expect(_get(obj, dim, path), int, f"{path}.{dim}", type_name="integer")
        if v < 1:
            raise DocumentError(f"{path}.{dim}: must be >= 1, got {v}")
    ocr_raw = obj.get("ocr", [])
    _expect(ocr_raw, list, f"{path}.ocr", type_name="list")
    tokens = tuple(_parse_ocr_token(t, f"{path}.ocr[{k}]") for k, t in enumerate(ocr_raw))
    return Page(page_id=page_id, width_px=obj["width_px"],
                height_px=obj["height_px"], ocr=tokens)


def _parse_page_ids(raw, path: str, page_ids: set[int]) -> tuple[int, ...]:
    lst = _expect(raw, list, path, type_name="list of page ids")
    out = []
    for n, v in enumerate(lst):
        pid = _expect(v, int, f"{path}[{n}]", type_name="integer")
        if pid not in page_ids:
            raise DocumentError(f"{path}[{n}]: page id {pid} not present in pages")
        out.append(pid)
    return tuple(out)


def _parse_dists(raw, path: str, vocab_size: int) -> tuple[tuple[float, ...], ...]:
    lst = _expect(raw, list, path, type_name="list of distributions")
    if not lst:
        raise DocumentError(f"{path}: must contain at least one distribution")
    out = []
    for n, row in enumerate(lst):
        vec = _expect(row, list, f"{path}[{n}]", type_name="list of probabilities")
        if len(vec) != vocab_size:
            raise DocumentError(
                f"{path}[{n}]: has {len(vec)} entries but vocabulary has {vocab_size}"
            )
        probs = tuple(_expect_number(p, f"{path}[{n}][{k}]") for k, p in enumerate(vec))
        if any(p < 0.0 for p in probs):
            raise DocumentError(f"{path}[{n}]: contains negative probabilities")
        total = float(np.sum(probs))
        if abs(total - 1.0) > 1e-9:
            raise DocumentError(f"{path}[{n}]: sums to {total!r}, expected 1 within 1e-9")
        out.append(probs)
    return tuple(out)


def _parse_script(raw, path: str, page_ids: set[int]) -> SlmScriptSpec:
    obj = _expect(raw, dict, path, type_name="object")
    vocab_raw = _expect(_get(obj, "vocab", path), list, f"{path}.vocab",
                        type_name="list of strings")
    if not vocab_raw:
        raise DocumentError(f"{path}.vocab: must be non-empty")
    vocab = tuple(_expect_str(w, f"{path}.vocab[{n}]") for n, w in enumerate(vocab_raw))
    default_dists = None
    if obj.get("default_dists") is not None:
        default_dists = _parse_dists(obj["default_dists"], f"{path}.default_dists",
                                     len(vocab))
    entries_raw = obj.get("entries", [])
    _expect(entries_raw, list, f"{path}.entries", type_name="list")
    entries = []
    for n, e in enumerate(entries_raw):
        epath = f"{path}.entries[{n}]"
        eobj = _expect(e, dict, epath, type_name="object")
        entries.append(ScriptEntrySpec(
            query=_expect_str(_get(eobj, "query", epath), f"{epath}.query"),
            pages=_parse_page_ids(_get(eobj, "pages", epath), f"{epath}.pages", page_ids),
            answer=_expect_str(_get(eobj, "answer", epath), f"{epath}.answer"),
            dists=_parse_dists(_get(eobj, "dists", epath), f"{epath}.dists", len(vocab)),
        ))
    return SlmScriptSpec(vocab=vocab, default_dists=default_dists,
                         entries=tuple(entries))


def parse_document(data: dict) -> Document:
    """Validate an already-parsed JSON object and build a Document."""
    obj = _expect(data, dict, "document", type_name="object")
    doc_id = _expect_str(_get(obj, "doc_id", "document"), "document.doc_id")
    pages_raw = _expect(_get(obj, "pages", "document"), list, "pages", type_name="list")
    if not pages_raw:
        raise DocumentError("pages: must contain at least one page")
    pages = []
    seen: set[int] = set()
    last_id = None
    for n, p in enumerate(pages_raw):
        try:
            page = _parse_page(p, f"pages[{n}]")
        except DocumentError:
            raise
        except ValueError as exc:
            raise DocumentError(f"pages[{n}]: {exc}") from exc
        if page.page_id in seen:
            raise DocumentError(f"pages[{n}].page_id: duplicate page id {page.page_id}")
        if last_id is not None and page.page_id <= last_id:
            raise DocumentError(
                f"pages[{n}].page_id: ids must be strictly increasing "
                f"({page.page_id} after {last_id})"
            )
        seen.add(page.page_id)
        last_id = page.page_id
        pages.append(page)
    page_ids = set(seen)
    qa = []
    qa_raw = obj.get("qa", [])
    _expect(qa_raw, list, "qa", type_name="list")
    for n, q in enumerate(qa_raw):
        qpath = f"qa[{n}]"
        qobj = _expect(q, dict, qpath, type_name="object")
        qa.append(QaEntry(
            query=_expect_str(_get(qobj, "query", qpath), f"{qpath}.query"),
            answer=_expect_str(_get(qobj, "answer", qpath), f"{qpath}.answer",
                               allow_empty=True),
            evidence_pages=_parse_page_ids(qobj.get("evidence_pages", []),
                                           f"{qpath}.evidence_pages", page_ids),
        ))
    script = None
    if obj.get("slm_script") is not None:
        script = _parse_script(obj["slm_script"], "slm_script", page_ids)
    return Document(doc_id=doc_id, pages=tuple(pages), qa=tuple(qa), slm_script=script)


def load_document(path) -> Document:
    """Load and validate a document JSON file."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise DocumentError(f"document file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path}: not valid JSON ({exc})") from exc
    return parse_document(data)


def document_to_dict(doc: Document) -> dict:
    """Serialize a Document back to its JSON object form."""
    out: dict = {
        "doc_id": doc.doc_id,
        "pages": [
            {
                "page_id": p.page_id,
                "width_px": p.width_px,
                "height_px": p.height_px,
                "ocr": [
                    {"text": t.text,
                     "bbox": [t.bbox.x0, t.bbox.y0, t.bbox.x1, t.bbox.y1],
                     "conf": t.conf}
                    for t in p.ocr
                ],
            }
            for p in doc.pages
        ],
        "qa": [
            {"query": q.query, "answer": q.answer,
             "evidence_pages": list(q.evidence_pages)}
            for q in doc.qa
        ],
    }
    if doc.slm_script is not None:
        s = doc.slm_script
        out["slm_script"] = {
            "vocab": list(s.vocab),
            "default_dists": (None if s.default_dists is None
                              else [list(d) for d in s.default_dists]),
            "entries": [
                {"query": e.query, "pages": list(e.pages), "answer": e.answer,
                 "dists": [list(d) for d in e.dists]}
                for e in s.entries
            ],
        }
    return out


def save_document(doc: Document, path) -> None:
    """Write a document file atomically (temp file, then rename)."""
    payload = json.dumps(document_to_dict(doc), indent=2, sort_keys=True) + "\n"
    _atomic_write_text(path, payload)


def _atomic_write_text(path, text: str) -> None:
    directory = os.path.dirname(os.fspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def build_mock_slm(doc: Document) -> MockSlm:
    """Materialize the document's scripted model.

    Documents without a script get a model that abstains on everything
    (uniform default distributions over a placeholder vocabulary).
    """
    if doc.slm_script is None:
        return MockSlm(vocab=("n/a",))
    s = doc.slm_script
    entries = [
        ScriptEntry(query=e.query, pages=frozenset(e.pages), answer=e.answer,
                    dists=tuple(np.asarray(d, dtype=np.float64) for d in e.dists))
        for e in s.entries
    ]
    default = None
    if s.default_dists is not None:
        default = [np.asarray(d, dtype=np.float64) for d in s.default_dists]
    return MockSlm(vocab=s.vocab, script=entries, default_dists=default)
