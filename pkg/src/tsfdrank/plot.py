"""Minimal self-contained SVG charts for result CSVs."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

from .experiments import read_csv

W, H, PAD = 640, 400, 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _scale(lo, hi, a, b):
    if hi == lo:
        hi = lo + 1.0
    return lambda v: a + (v - lo) / (hi - lo) * (b - a)


def _frame(title: str, ylabel: str, ylo: float, yhi: float) -> list:
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{W / 2}" y="24" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<line x1="{PAD}" y1="{H - PAD}" x2="{W - PAD}" y2="{H - PAD}" stroke="black"/>',
        f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{H - PAD}" stroke="black"/>',
        f'<text x="14" y="{H / 2}" font-size="12" transform="rotate(-90 14 {H / 2})" '
        f'text-anchor="middle">{escape(ylabel)}</text>',
    ]
    ys = _scale(ylo, yhi, H - PAD, PAD)
    for j in range(5):
        v = ylo + (yhi - ylo) * j / 4
        parts.append(
            f'<text x="{PAD - 6}" y="{ys(v) + 4:.1f}" font-size="10" text-anchor="end">{v:.3g}</text>'
        )
    return parts


def _legend(names) -> list:
    out = []
    for k, name in enumerate(names):
        y = PAD + 16 * k
        c = COLORS[k % len(COLORS)]
        out.append(f'<rect x="{W - PAD - 110}" y="{y - 9}" width="10" height="10" fill="{c}"/>')
        out.append(f'<text x="{W - PAD - 95}" y="{y}" font-size="11">{escape(str(name))}</text>')
    return out


def lines_svg(series: dict, title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    """One polyline per entry of ``series`` (name -> list of (x, y))."""
    pts = [(x, y) for s in series.values() for x, y in s if math.isfinite(y)]
    if not pts:
        raise ValueError("nothing to plot: all series are empty")
    xs_, ys_ = [p[0] for p in pts], [p[1] for p in pts]
    xs = _scale(min(xs_), max(xs_), PAD, W - PAD)
    ylo, yhi = min(ys_), max(ys_)
    ys = _scale(ylo, yhi, H - PAD, PAD)
    parts = _frame(title, ylabel, ylo, yhi)
    parts.append(
        f'<text x="{W / 2}" y="{H - 18}" font-size="12" text-anchor="middle">{escape(xlabel)}</text>'
    )
    for x in sorted(set(xs_)):
        parts.append(
            f'<text x="{xs(x):.1f}" y="{H - PAD + 14}" font-size="10" text-anchor="middle">{x:.3g}</text>'
        )
    for k, (name, s) in enumerate(series.items()):
        s = [(x, y) for x, y in sorted(s) if math.isfinite(y)]
        coords = " ".join(f"{xs(x):.2f},{ys(y):.2f}" for x, y in s)
        parts.append(
            f'<polyline fill="none" stroke="{COLORS[k % len(COLORS)]}" stroke-width="2" '
            f'points="{coords}"><title>{escape(str(name))}</title></polyline>'
        )
    parts += _legend(series)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def bars_svg(values: dict, title: str = "", ylabel: str = "") -> str:
    """One bar per entry of ``values`` (name -> number)."""
    vals = {k: v for k, v in values.items() if math.isfinite(v)}
    if not vals:
        raise ValueError("nothing to plot: no finite values")
    ylo, yhi = min(0.0, *vals.values()), max(0.0, *vals.values())
    ys = _scale(ylo, yhi, H - PAD, PAD)
    parts = _frame(title, ylabel, ylo, yhi)
    slot = (W - 2 * PAD) / len(vals)
    for k, (name, v) in enumerate(vals.items()):
        x = PAD + k * slot + slot * 0.15
        top, base = ys(max(v, 0.0)), ys(min(v, 0.0))
        parts.append(
            f'<rect x="{x:.1f}" y="{top:.1f}" width="{slot * 0.7:.1f}" height="{base - top:.1f}" '
            f'fill="{COLORS[k % len(COLORS)]}"><title>{escape(name)}: {v:.6g}</title></rect>'
        )
        parts.append(
            f'<text x="{x + slot * 0.35:.1f}" y="{H - PAD + 14}" font-size="10" '
            f'text-anchor="middle">{escape(name)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def plot(csv_path, kind: str, out, metric: str = "utility") -> str:
    """Render a sweep CSV as lines or a table CSV as bars of ``metric``."""
    table = read_csv(csv_path)
    if not table.rows:
        raise ValueError(f"{csv_path}: no data rows")
    if kind == "lines":
        need = {"value", "method", "mean"}
        if not need <= set(table.columns):
            raise ValueError(f"{csv_path}: a line plot needs columns {sorted(need)}")
        series: dict = {}
        for r in table.rows:
            series.setdefault(str(r["method"]), []).append((float(r["value"]), float(r["mean"])))
        first = table.rows[0]
        svg = lines_svg(series, f"{first.get('metric', '')} vs {first.get('axis', '')}",
                        str(first.get("axis", "")), str(first.get("metric", "")))
    elif kind == "bars":
        if "method" not in table.columns or metric not in table.columns:
            raise ValueError(f"{csv_path}: a bar plot needs columns 'method' and {metric!r}")
        svg = bars_svg({str(r["method"]): float(r[metric]) for r in table.rows}, metric, metric)
    else:
        raise ValueError("kind must be 'lines' or 'bars'")
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(svg)
    return svg
