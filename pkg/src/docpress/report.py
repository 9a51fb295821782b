"""Figure rendering for sweep reports.

Uses the Agg backend so figures render in headless environments, and
writes files atomically like every other output path.
"""

from __future__ import annotations

import os
import tempfile

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .memory import SweepReport  # noqa: E402

_STYLE = {
    "figure.figsize": (6.0, 3.8),
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.35,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def render_sweep_figure(report: SweepReport, path) -> None:
    """Plot predicted peak memory against page count, one line per model."""
    series: dict[str, tuple[list[int], list[float]]] = {}
    for row in report.rows:
        xs, ys = series.setdefault(row.label, ([], []))
        xs.append(row.pages)
        ys.append(row.predicted_gb)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for label, (xs, ys) in series.items():
            ax.plot(xs, ys, marker="o", markersize=3.5, linewidth=1.2, label=label)
        ax.set_xlabel("Document pages")
        ax.set_ylabel("Predicted peak memory (GB)")
        ax.set_ylim(bottom=0)
        ax.legend(frameon=False)
        fig.tight_layout()
        _atomic_savefig(fig, path)
        plt.close(fig)


def _atomic_savefig(fig, path) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    suffix = os.path.splitext(path)[1].lstrip(".") or "png"
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fig.savefig(fh, format=suffix, dpi=150)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
