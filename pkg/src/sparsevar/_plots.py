"""Minimal static SVG writers for the sparsity heatmap and the lambda curve."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def sparsity_svg(grid, title: str = "coefficient magnitude", cell: int = 14) -> str:
    rows = len(grid)
    cols = len(grid[0]) if rows else 0
    top = max((abs(v) for row in grid for v in row), default=0.0)
    pad = 30
    width, height = cols * cell + 2 * pad, rows * cell + 2 * pad
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<text x="{pad}" y="{pad - 10}" font-size="12" font-family="sans-serif">{escape(title)}</text>',
    ]
    for i, row in enumerate(grid):
        for j, v in enumerate(row):
            shade = 255 - int(round(255 * abs(v) / top)) if top > 0 else 255
            out.append(
                f'<rect x="{pad + j * cell}" y="{pad + i * cell}" width="{cell}" height="{cell}" '
                f'fill="rgb({shade},{shade},{shade})" stroke="#ccc" stroke-width="0.5"/>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def lambda_curve_svg(curve, selected: int, width: int = 480, height: int = 320) -> str:
    pad = 50
    xs = [math.log10(c["lambda"]) for c in curve]
    ys = [c["msfe"] for c in curve]
    xlo, xhi = min(xs), max(xs)
    ylo, yhi = min(ys), max(ys)
    xspan = xhi - xlo or 1.0
    yspan = yhi - ylo or 1.0

    def px(x):
        return pad + (x - xlo) / xspan * (width - 2 * pad)

    def py(y):
        return height - pad - (y - ylo) / yspan * (height - 2 * pad)

    pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, ys))
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width // 2}" y="{height - 15}" font-size="12" font-family="sans-serif" '
        f'text-anchor="middle">log10(lambda)</text>',
        f'<text x="15" y="{height // 2}" font-size="12" font-family="sans-serif" '
        f'transform="rotate(-90 15 {height // 2})" text-anchor="middle">MSFE</text>',
        f'<polyline points="{pts}" fill="none" stroke="#336" stroke-width="1.5"/>',
    ]
    for i, (x, y) in enumerate(zip(xs, ys)):
        colour = "#c00" if i == selected else "#336"
        r = 5 if i == selected else 3
        out.append(f'<circle cx="{_fmt(px(x))}" cy="{_fmt(py(y))}" r="{r}" fill="{colour}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
