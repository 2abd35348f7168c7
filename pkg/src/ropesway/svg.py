"""Minimal SVG line charts (one polyline per series)."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

MAX_POINTS = 4000
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def decimate(x: np.ndarray, y: np.ndarray, max_points: int = MAX_POINTS):
    """Keep the min and max of each bucket so peaks survive downsampling."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size <= max_points:
        return x, y
    n_buckets = max_points // 2
    edges = np.linspace(0, x.size, n_buckets + 1).astype(int)
    idx = []
    for a, b in zip(edges[:-1], edges[1:]):
        seg = y[a:b]
        i, j = a + int(np.argmin(seg)), a + int(np.argmax(seg))
        idx.extend(sorted({i, j}))
    idx = np.asarray(idx)
    return x[idx], y[idx]


def line_chart(x, series: dict[str, np.ndarray], title: str = "", xlabel: str = "",
               ylabel: str = "", width: int = 720, height: int = 360) -> str:
    """Render ``series`` against a shared ``x`` as an SVG document."""
    x = np.asarray(x, dtype=float)
    left, right, top, bottom = 70, 20, 30, 45
    pw, ph = width - left - right, height - top - bottom
    ys = [np.asarray(v, dtype=float) for v in series.values()]
    finite = np.concatenate([v[np.isfinite(v)] for v in ys] + [np.zeros(0)])
    y_lo, y_hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    x_lo, x_hi = (float(x.min()), float(x.max())) if x.size else (0.0, 1.0)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0

    def px(v):
        return left + (v - x_lo) / (x_hi - x_lo) * pw

    def py(v):
        return top + (y_hi - v) / (y_hi - y_lo) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#888"/>',
        f'<text x="{width / 2}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<text x="{left + pw / 2}" y="{height - 8}" text-anchor="middle" font-size="12">'
        f'{escape(xlabel)}</text>',
        f'<text x="14" y="{top + ph / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {top + ph / 2})">{escape(ylabel)}</text>',
    ]
    for v, yv in ((y_lo, py(y_lo)), (y_hi, py(y_hi))):
        parts.append(f'<text x="{left - 4}" y="{yv + 4:.1f}" text-anchor="end" '
                     f'font-size="10">{v:.4g}</text>')
    for v in (x_lo, x_hi):
        parts.append(f'<text x="{px(v):.1f}" y="{top + ph + 14}" text-anchor="middle" '
                     f'font-size="10">{v:.4g}</text>')
    for k, (name, y) in enumerate(zip(series, ys)):
        xd, yd = decimate(x, y)
        ok = np.isfinite(yd)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px(xd[ok]), py(yd[ok])))
        color = COLORS[k % len(COLORS)]
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1" '
                     f'data-label="{escape(name)}" points="{pts}"/>')
        parts.append(f'<text x="{left + pw - 4}" y="{top + 14 + 14 * k}" text-anchor="end" '
                     f'font-size="11" fill="{color}">{escape(name)}</text>')
    parts.append("</svg>\n")
    return "\n".join(parts)


def polyline_points(svg: str) -> list[np.ndarray]:
    """Pixel coordinates of every polyline in ``svg`` (for inspection)."""
    import xml.etree.ElementTree as ET

    root = ET.fromstring(svg)
    out = []
    for el in root.iter("{http://www.w3.org/2000/svg}polyline"):
        pts = [tuple(map(float, p.split(","))) for p in el.get("points", "").split()]
        out.append(np.array(pts).reshape(-1, 2))
    return out
