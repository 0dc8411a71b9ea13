"""Tiny SVG line-chart writer for report figures."""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def line_chart(series: dict, path: str | Path, title: str = "", xlabel: str = "", ylabel: str = "",
               log_y: bool = False, width: int = 640, height: int = 400) -> None:
    """``series`` maps a legend label to a list of (x, y) points."""
    pad_l, pad_r, pad_t, pad_b = 70, 160, 40, 50
    pts = [(x, y) for s in series.values() for x, y in s if y is not None and math.isfinite(y)]
    if log_y:
        pts = [(x, y) for x, y in pts if y > 0]
    fy = (lambda y: math.log10(y)) if log_y else (lambda y: y)
    if pts:
        x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
        y0, y1 = min(fy(p[1]) for p in pts), max(fy(p[1]) for p in pts)
    else:
        x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b

    def sx(x):
        return pad_l + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return pad_t + ph - (fy(y) - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<line x1="{pad_l}" y1="{pad_t + ph}" x2="{pad_l + pw}" y2="{pad_t + ph}" stroke="black"/>',
           f'<line x1="{pad_l}" y1="{pad_t}" x2="{pad_l}" y2="{pad_t + ph}" stroke="black"/>',
           f'<text x="{pad_l + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>',
           f'<text x="15" y="{pad_t + ph / 2:.1f}" text-anchor="middle" transform="rotate(-90 15 {pad_t + ph / 2:.1f})">{escape(ylabel)}</text>']
    for i in range(5):
        xv = x0 + (x1 - x0) * i / 4
        out.append(f'<text x="{sx(xv):.1f}" y="{pad_t + ph + 16}" text-anchor="middle">{xv:.3g}</text>')
        yv = y0 + (y1 - y0) * i / 4
        label = f"{10 ** yv:.3g}" if log_y else f"{yv:.3g}"
        ypix = pad_t + ph - i / 4 * ph
        out.append(f'<text x="{pad_l - 6}" y="{ypix + 4:.1f}" text-anchor="end">{label}</text>')
    for idx, (name, data) in enumerate(series.items()):
        color = COLORS[idx % len(COLORS)]
        good = [(x, y) for x, y in data if y is not None and math.isfinite(y) and (y > 0 or not log_y)]
        if good:
            coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in good)
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>')
            out += [f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="{color}"/>' for x, y in good]
        ly = pad_t + 10 + 18 * idx
        out.append(f'<rect x="{pad_l + pw + 15}" y="{ly - 8}" width="12" height="3" fill="{color}"/>')
        out.append(f'<text x="{pad_l + pw + 32}" y="{ly - 2}">{escape(name)}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
