"""Command-line interface.

Subcommands: compress, stream-qa, assign-ocr, mem-sweep, eval. Exit codes:
0 on success, 1 for any validation failure (bad arguments or bad input
files), 2 for internal errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .aggregate import aggregate
from .compressor import EncoderConfig, PageCompressor
from .document import Document, DocumentError, build_mock_slm, load_document
from .geometry import GridConfig, assign_ocr, crop_bbox, select_grid
from .memory import load_model_specs, mem_sweep
from .streaming import StreamConfig, segment_document, stream_process

DEFAULT_BASELINE_TOKENS = 3210


class UsageError(ValueError):
    """Bad command line; reported with exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_pipeline_config(path: str | None) -> tuple[PageCompressor, int]:
    """Build the page compressor (and ratio baseline) from a config file."""
    encoder_kwargs: dict = {}
    grid_kwargs: dict = {}
    threshold = 0.0
    baseline = DEFAULT_BASELINE_TOKENS
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except FileNotFoundError:
            raise UsageError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: not valid JSON ({exc})") from exc
        if not isinstance(raw, dict):
            raise UsageError(f"{path}: config must be a JSON object")
        encoder_kwargs = dict(raw.get("encoder", {}))
        grid_kwargs = dict(raw.get("grid", {}))
        threshold = float(raw.get("ocr_conf_threshold", 0.0))
        baseline = int(raw.get("baseline_tokens_per_page", DEFAULT_BASELINE_TOKENS))
    try:
        compressor = PageCompressor.build(
            encoder=EncoderConfig(**encoder_kwargs),
            grid=GridConfig(**grid_kwargs),
            ocr_conf_threshold=threshold,
        )
    except TypeError as exc:
        raise UsageError(f"bad config: {exc}") from exc
    return compressor, baseline


def _cmd_compress(args) -> int:
    doc = load_document(args.doc)
    compressor, baseline = _load_pipeline_config(args.config)
    print(f"doc {doc.doc_id}: {len(doc.pages)} pages")
    total = 0
    ok = True
    for page in doc.pages:
        grid = compressor.grid_for(page)
        emb = compressor(page)
        budget = compressor.budget_for(page)
        match = emb.token_count == budget
        ok = ok and match
        total += emb.token_count
        print(f"page {page.page_id}: grid {grid.rows}x{grid.cols} "
              f"({grid.crop_count} crops) tokens={emb.token_count} "
              f"budget={budget} {'ok' if match else 'MISMATCH'}")
    mean = total / len(doc.pages)
    print(f"total_tokens={total} mean_tokens_per_page={mean:.4f}")
    ratio = baseline / mean
    print(f"baseline_tokens_per_page={baseline} reduction_ratio={ratio:.4f}")
    if not ok:
        print("error: token budget violated", file=sys.stderr)
        return 2
    return 0


def _run_stream(doc: Document, query: str, segment_len: int, parallel: bool,
                compressor: PageCompressor):
    slm = build_mock_slm(doc)
    cfg = StreamConfig(segment_len=segment_len, parallel=parallel)
    return stream_process(doc.pages, query, slm, cfg, compressor)


def _cmd_stream_qa(args) -> int:
    doc = load_document(args.doc)
    compressor, _ = _load_pipeline_config(args.config)
    mode = "parallel" if args.parallel else "sequential"
    print(f"doc {doc.doc_id}: {len(doc.pages)} pages, "
          f"segment_len={args.segment_len}, mode={mode}")
    preds, trace = _run_stream(doc, args.query, args.segment_len, args.parallel,
                               compressor)
    page_ids = doc.page_ids
    ranges = segment_document(len(page_ids), args.segment_len)
    for pred, (start, end) in zip(preds, ranges):
        print(f"segment {pred.segment_index} pages {page_ids[start - 1]}-{page_ids[end - 1]}: "
              f"answer={pred.text!r} uncertainty={pred.uncertainty:.4f} "
              f"abstained={'yes' if pred.abstained else 'no'}")
    result = aggregate(preds)
    print(f"final: answer={result.answer!r} uncertainty={result.uncertainty:.4f} "
          f"source_segment={result.source_segment} "
          f"all_abstained={'yes' if result.all_abstained else 'no'}")
    print(f"residency: peak_tokens={trace.peak} final_tokens={trace.final} "
          f"events={len(trace)}")
    return 0


def _cmd_assign_ocr(args) -> int:
    doc = load_document(args.doc)
    compressor, _ = _load_pipeline_config(args.config)
    page = next((p for p in doc.pages if p.page_id == args.page), None)
    if page is None:
        raise UsageError(f"page {args.page} not present in {doc.doc_id} "
                         f"(has {list(doc.page_ids)})")
    grid = select_grid(page.width_px, page.height_px, compressor.grid)
    cells = assign_ocr(list(page.ocr), grid, compressor.grid)
    print(f"page {page.page_id}: {page.width_px}x{page.height_px}, "
          f"grid {grid.rows}x{grid.cols} (crop_px={grid.crop_px}), "
          f"{len(page.ocr)} OCR tokens")
    for i in range(grid.rows):
        for j in range(grid.cols):
            box = crop_bbox(grid, i, j)
            words = " ".join(repr(t.text) for t in cells[i][j]) or "(none)"
            print(f"crop ({i},{j}) [{box.x0:.3f},{box.y0:.3f},{box.x1:.3f},{box.y1:.3f}]: "
                  f"{words}")
    return 0


def _cmd_mem_sweep(args) -> int:
    try:
        specs = load_model_specs(args.spec)
    except FileNotFoundError:
        raise UsageError(f"spec file not found: {args.spec}") from None
    except (ValueError, json.JSONDecodeError) as exc:
        raise UsageError(str(exc)) from exc
    try:
        pages = [int(p) for p in args.pages.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"--pages must be a comma-separated list of ints, "
                         f"got {args.pages!r}") from None
    if not pages:
        raise UsageError("--pages must name at least one page count")
    report = mem_sweep(specs, pages)
    out = Path(args.out)
    report.write_csv(out)
    print(f"wrote {out} ({len(report.rows)} rows)")
    if not args.no_plot:
        from .report import render_sweep_figure

        plot_path = Path(args.plot) if args.plot else out.with_suffix(".png")
        render_sweep_figure(report, plot_path)
        print(f"wrote {plot_path}")
    return 0


def _cmd_eval(args) -> int:
    doc = load_document(args.doc)
    compressor, _ = _load_pipeline_config(args.config)
    if not doc.qa:
        print(f"doc {doc.doc_id}: no qa entries")
        return 0
    print(f"doc {doc.doc_id}: {len(doc.pages)} pages, {len(doc.qa)} queries, "
          f"segment_len={args.segment_len}")
    from .metrics import anls

    scores = []
    abstained = 0
    for n, entry in enumerate(doc.qa, start=1):
        preds, _ = _run_stream(doc, entry.query, args.segment_len, False, compressor)
        result = aggregate(preds)
        score = anls(result.answer, entry.answer)
        scores.append(score)
        abstained += int(result.all_abstained)
        print(f"qa {n}: predicted={result.answer!r} truth={entry.answer!r} "
              f"anls={score:.4f} abstained={'yes' if result.all_abstained else 'no'}")
    mean = sum(scores) / len(scores)
    print(f"mean_anls={mean:.4f} answered={len(scores) - abstained} "
          f"abstained={abstained} total={len(scores)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="docpress",
                     description="Fixed-budget page compression and streaming QA tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", help="compress every page and report token counts")
    p.add_argument("doc", help="document JSON file")
    p.add_argument("--config", help="pipeline config JSON")
    p.set_defaults(func=_cmd_compress)

    p = sub.add_parser("stream-qa", help="answer one query by streaming segments")
    p.add_argument("doc")
    p.add_argument("--query", required=True)
    p.add_argument("--segment-len", type=int, default=10)
    p.add_argument("--parallel", action="store_true")
    p.add_argument("--config", help="pipeline config JSON")
    p.set_defaults(func=_cmd_stream_qa)

    p = sub.add_parser("assign-ocr", help="dump the per-crop OCR assignment of a page")
    p.add_argument("doc")
    p.add_argument("--page", type=int, required=True)
    p.add_argument("--config", help="pipeline config JSON")
    p.set_defaults(func=_cmd_assign_ocr)

    p = sub.add_parser("mem-sweep", help="predict peak memory across page counts")
    p.add_argument("--spec", required=True, help="model spec JSON file")
    p.add_argument("--pages", required=True, help="comma-separated page counts")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--plot", help="figure path (default: CSV path with .png)")
    p.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    p.set_defaults(func=_cmd_mem_sweep)

    p = sub.add_parser("eval", help="run every qa entry and report mean ANLS")
    p.add_argument("doc")
    p.add_argument("--segment-len", type=int, default=10)
    p.add_argument("--config", help="pipeline config JSON")
    p.set_defaults(func=_cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (UsageError, DocumentError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - internal failures
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
