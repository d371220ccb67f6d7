"""Render evaluation results: a fixed-width text table (one method row,
relation and triple column groups, 4 decimals), a delimited metrics file,
and a bar-chart figure saved next to it.

The figure is drawn with matplotlib's object-oriented API so importing this
module never touches the global pyplot state.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Sequence

from .evaluation import EvalReport, _per_class
from .fileio import atomic_write_text


def _fmt(value: float) -> str:
    return f"{value:.4f}"


def render_table(rows: Sequence[tuple[str, EvalReport, EvalReport]]) -> str:
    """rows: (method label, relation report, triple report) per method."""
    header_cols = ["Method", "Precision", "Recall", "F1-score", "Precision", "Recall", "F1-score"]
    label_width = max([len("Method")] + [len(label) for label, _, _ in rows]) + 2
    col = 10

    def line(cells: list[str]) -> str:
        return cells[0].ljust(label_width) + "".join(c.rjust(col) for c in cells[1:])

    group = " " * label_width + "Relation".center(3 * col) + "Triple".center(3 * col)
    out = [group, line(header_cols), "-" * (label_width + 6 * col)]
    for label, rel, tri in rows:
        out.append(
            line(
                [
                    label,
                    _fmt(rel.macro_precision), _fmt(rel.macro_recall), _fmt(rel.macro_f1),
                    _fmt(tri.macro_precision), _fmt(tri.macro_recall), _fmt(tri.macro_f1),
                ]
            )
        )
    return "\n".join(out)


def write_metrics_csv(path: str | Path, label: str, rel: EvalReport, tri: EvalReport) -> None:
    """One row per (protocol, relation) plus a macro row per protocol."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["method", "protocol", "scope", "precision", "recall", "f1", "tp", "fp", "fn"])
    for report in (rel, tri):
        for name in sorted(report.counts.per_relation):
            counts = report.counts.per_relation[name]
            p, r, f1 = _per_class(counts)
            writer.writerow(
                [label, report.protocol.value, name, _fmt(p), _fmt(r), _fmt(f1),
                 counts.tp, counts.fp, counts.fn]
            )
        writer.writerow(
            [label, report.protocol.value, "macro",
             _fmt(report.macro_precision), _fmt(report.macro_recall), _fmt(report.macro_f1),
             "", "", ""]
        )
    atomic_write_text(path, buf.getvalue())


def write_metrics_figure(path: str | Path, label: str, rel: EvalReport, tri: EvalReport) -> None:
    """Grouped bar chart of macro precision/recall/F1 for both protocols."""
    from matplotlib.figure import Figure

    metrics = ("Precision", "Recall", "F1-score")
    values = {
        "Relation": (rel.macro_precision, rel.macro_recall, rel.macro_f1),
        "Triple": (tri.macro_precision, tri.macro_recall, tri.macro_f1),
    }
    fig = Figure(figsize=(6.0, 3.6))
    ax = fig.add_subplot(111)
    width = 0.35
    for offset, (protocol, vals) in enumerate(values.items()):
        xs = [i + (offset - 0.5) * width for i in range(len(metrics))]
        bars = ax.bar(xs, vals, width=width, label=protocol)
        ax.bar_label(bars, fmt="%.4f", fontsize=7)
    ax.set_xticks(range(len(metrics)))
    ax.set_xticklabels(metrics)
    ax.set_ylim(0.0, 1.1)
    ax.set_ylabel("macro score")
    ax.set_title(label)
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150)
