"""Plain SVG line plots of convergence tables (no plotting library needed)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 400
MARGIN = {"left": 70, "right": 20, "top": 40, "bottom": 55}


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _ticks(lo: float, hi: float, count: int = 5):
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def table_svg(table) -> str:
    """Ratio (or residual) against n on a log2 axis for one ConvergenceTable."""
    rows = [r for r in table.rows if r.n and math.isfinite(r.ratio)]
    label = table.theorem_id + ("" if table.q is None else f", q = {table.q:g}")
    residual = bool(rows) and rows[0].is_residual
    reference = 0.0 if residual else 1.0
    xs = [math.log2(r.n) for r in rows]
    ys = [r.ratio for r in rows]
    x_lo, x_hi = (min(xs), max(xs)) if xs else (0.0, 1.0)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    y_lo = min(ys + [reference])
    y_hi = max(ys + [reference])
    pad = 0.1 * (y_hi - y_lo) or 0.05
    y_lo, y_hi = y_lo - pad, y_hi + pad

    plot_w = WIDTH - MARGIN["left"] - MARGIN["right"]
    plot_h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return MARGIN["left"] + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y):
        return MARGIN["top"] + (y_hi - y) / (y_hi - y_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(label)}</text>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="black"/>',
    ]
    for r, x in zip(rows, xs):
        out.append(
            f'<text x="{px(x):.1f}" y="{HEIGHT - MARGIN["bottom"] + 18}" text-anchor="middle">'
            f"{r.n}</text>"
        )
    for y in _ticks(y_lo, y_hi):
        out.append(
            f'<text x="{MARGIN["left"] - 6}" y="{py(y) + 4:.1f}" text-anchor="end">{_fmt(y)}</text>'
        )
    out.append(
        f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">n (log scale)</text>'
    )
    y_name = "normalized residual" if residual else "ratio lhs / rhs"
    out.append(
        f'<text x="16" y="{HEIGHT / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {HEIGHT / 2:.1f})">{y_name}</text>'
    )
    out.append(
        f'<line x1="{MARGIN["left"]}" y1="{py(reference):.2f}" x2="{WIDTH - MARGIN["right"]}" '
        f'y2="{py(reference):.2f}" stroke="gray" stroke-dasharray="4 3"/>'
    )
    if rows:
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        out.append(f'<polyline points="{pts}" fill="none" stroke="steelblue" stroke-width="2"/>')
        for x, y in zip(xs, ys):
            out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="steelblue"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def table_filename(table, suffix: str) -> str:
    q = "" if table.q is None else f"_q{table.q:g}"
    return f"{table.theorem_id}{q}.{suffix}"
