"""CSV and box-plot SVG output for experiment records."""

import csv
import html
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .experiments import ExperimentRecord

# numpy's default ("linear", type 7) percentile interpolation
PERCENTILE_METHOD = "linear"


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _atomic_write(path, write):
    """Write through a temporary file so a failure leaves no partial output."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise
    return path


def emit_csv(records, path):
    """One header row of record field names, then one row per record.

    Floats are written with ``repr`` so identical runs give identical bytes.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to write")
    names = ExperimentRecord.field_names()

    def write(fh):
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(names)
        for r in records:
            w.writerow([_cell(getattr(r, n)) for n in names])

    return _atomic_write(path, write)


def read_csv_records(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


# --------------------------------------------------------------------------
# box plots


def box_stats(values):
    """Median, quartiles, Tukey whiskers and outliers of ``values``.

    Quartiles use linear interpolation between order statistics (numpy's
    default percentile method). Whiskers end at the most extreme points
    within 1.5 IQR of the box.
    """
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise ValueError("cannot summarise an empty group")
    q1, med, q3 = np.percentile(v, [25, 50, 75], method=PERCENTILE_METHOD)
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    return {
        "median": float(med),
        "q1": float(q1),
        "q3": float(q3),
        "whisker_low": float(inside.min()),
        "whisker_high": float(inside.max()),
        "outliers": [float(t) for t in v[(v < lo_fence) | (v > hi_fence)]],
        "n": int(v.size),
    }


def _groups(records, group_by, value):
    out = {}
    for r in records:
        key = getattr(r, group_by) if group_by != "cell" else r.cell
        out.setdefault(key, [])
        val = getattr(r, value)
        if val is not None and math.isfinite(val):
            out[key].append(val)
    return out


def emit_boxplot_svg(records, path, group_by="cell", value="difference", title=None):
    """One box per distinct ``group_by`` value of the ``value`` column.

    Raises ``ValueError`` (and writes nothing) when there are no records or
    some group has no finite values.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to plot")
    groups = _groups(records, group_by, value)
    empty = [k for k, vals in groups.items() if not vals]
    if empty:
        raise ValueError(f"no finite '{value}' values for group(s) {empty}")
    stats = [(str(k), box_stats(vals)) for k, vals in groups.items()]
    svg = _render(stats, title or f"{value} by {group_by}")
    return _atomic_write(path, lambda fh: fh.write(svg))


def _render(stats, title):
    width = max(320, 90 * len(stats) + 120)
    height = 360
    left, right, top, bottom = 90, 20, 40, 60
    lo = min(min(s["whisker_low"], *s["outliers"]) if s["outliers"] else s["whisker_low"] for _, s in stats)
    hi = max(max(s["whisker_high"], *s["outliers"]) if s["outliers"] else s["whisker_high"] for _, s in stats)
    if hi == lo:
        pad = abs(hi) * 0.1 or 1.0
        lo, hi = lo - pad, hi + pad
    span = hi - lo
    lo, hi = lo - 0.05 * span, hi + 0.05 * span

    def y(v):
        return top + (hi - v) / (hi - lo) * (height - top - bottom)

    slot = (width - left - right) / len(stats)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="13">{html.escape(title)}</text>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" stroke="black"/>',
    ]
    for k in range(5):
        v = lo + (hi - lo) * k / 4
        out.append(f'<line x1="{left - 4}" y1="{y(v):.2f}" x2="{left}" y2="{y(v):.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 6}" y="{y(v) + 4:.2f}" text-anchor="end">{v:.2e}</text>')
    if lo < 0 < hi:
        out.append(
            f'<line x1="{left}" y1="{y(0):.2f}" x2="{width - right}" y2="{y(0):.2f}" '
            'stroke="#999" stroke-dasharray="4 3"/>'
        )
    for i, (label, s) in enumerate(stats):
        cx = left + slot * (i + 0.5)
        half = min(25.0, slot * 0.3)
        out.append(f'<g class="box" data-label="{html.escape(label)}">')
        out.append(
            f'<line x1="{cx:.2f}" y1="{y(s["whisker_high"]):.2f}" x2="{cx:.2f}" '
            f'y2="{y(s["whisker_low"]):.2f}" stroke="black"/>'
        )
        for w in (s["whisker_low"], s["whisker_high"]):
            out.append(
                f'<line x1="{cx - half / 2:.2f}" y1="{y(w):.2f}" x2="{cx + half / 2:.2f}" y2="{y(w):.2f}" stroke="black"/>'
            )
        out.append(
            f'<rect x="{cx - half:.2f}" y="{y(s["q3"]):.2f}" width="{2 * half:.2f}" '
            f'height="{max(y(s["q1"]) - y(s["q3"]), 0.5):.2f}" fill="#cfe0f3" stroke="black"/>'
        )
        out.append(
            f'<line x1="{cx - half:.2f}" y1="{y(s["median"]):.2f}" x2="{cx + half:.2f}" '
            f'y2="{y(s["median"]):.2f}" stroke="#b00" stroke-width="2"/>'
        )
        for o in s["outliers"]:
            out.append(f'<circle cx="{cx:.2f}" cy="{y(o):.2f}" r="2" fill="none" stroke="black"/>')
        out.append(
            f'<text x="{cx:.2f}" y="{height - bottom + 16}" text-anchor="middle">{html.escape(label)}</text>'
        )
        out.append("</g>")
    out.append("</svg>\n")
    return "\n".join(out)
