"""Minimal deterministic SVG line plots."""
from __future__ import annotations

from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def polyline_plot(series, title: str = "", xlabel: str = "x", ylabel: str = "y",
                  width: int = 480, height: int = 400) -> str:
    """series: list of (label, [(x, y), ...]). Returns an SVG document."""
    pts = [p for _, s in series for p in s]
    if not pts:
        raise ValueError("nothing to plot")
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    m = 50
    sx = (width - 2 * m) / (x1 - x0)
    sy = (height - 2 * m) / (y1 - y0)

    def tx(x):
        return m + (x - x0) * sx

    def ty(y):
        return height - m - (y - y0) * sy

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{m}" y="{m}" width="{width - 2 * m}" height="{height - 2 * m}" fill="none" stroke="#999"/>']
    if x0 < 0 < x1:
        out.append(f'<line x1="{_fmt(tx(0))}" y1="{m}" x2="{_fmt(tx(0))}" y2="{height - m}" stroke="#ddd"/>')
    if y0 < 0 < y1:
        out.append(f'<line x1="{m}" y1="{_fmt(ty(0))}" x2="{width - m}" y2="{_fmt(ty(0))}" stroke="#ddd"/>')
    for k, (label, s) in enumerate(series):
        if not s:
            continue
        coords = " ".join(f"{_fmt(tx(x))},{_fmt(ty(y))}" for x, y in s)
        color = PALETTE[k % len(PALETTE)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{coords}">'
                   f'<title>{escape(str(label))}</title></polyline>')
    out.append(f'<text x="{width / 2:.1f}" y="{m / 2:.1f}" text-anchor="middle" font-size="14">{escape(title)}</text>')
    out.append(f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{height / 2:.1f}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 14 {height / 2:.1f})">{escape(ylabel)}</text>')
    for v, anchor, x, y in ((x0, "start", m, height - m + 16), (x1, "end", width - m, height - m + 16)):
        out.append(f'<text x="{x}" y="{y}" text-anchor="{anchor}" font-size="10">{v:.4g}</text>')
    for v, y in ((y0, height - m), (y1, m + 10)):
        out.append(f'<text x="{m - 4}" y="{y}" text-anchor="end" font-size="10">{v:.4g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
