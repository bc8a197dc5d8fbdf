"""Standalone SVG heatmaps: low values dark, high values light."""

from __future__ import annotations

import numpy as np

LEGEND_STEPS = 5


def gray_levels(values) -> np.ndarray:
    """Map each cell linearly onto 0..255; a constant matrix is mid-gray."""
    m = np.asarray(values, dtype=float)
    lo, hi = float(m.min()), float(m.max())
    if hi == lo:
        return np.full(m.shape, 128, dtype=int)
    return np.rint((m - lo) / (hi - lo) * 255).astype(int)


def heatmap_svg(values, cell: int = 8) -> str:
    m = np.asarray(values, dtype=float)
    if m.ndim != 2 or m.size == 0:
        raise ValueError("heatmap needs a non-empty 2-D matrix")
    rows, cols = m.shape
    lo, hi = float(m.min()), float(m.max())
    gray = gray_levels(m)

    legend_x = cols * cell + 20
    width = legend_x + 120
    height = max(rows * cell, LEGEND_STEPS * 20 + 10)
    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        '<g class="cells" shape-rendering="crispEdges">',
    ]
    for r in range(rows):
        for c in range(cols):
            v = gray[r, c]
            out.append(f'<rect class="cell" x="{c * cell}" y="{r * cell}" width="{cell}" '
                       f'height="{cell}" fill="rgb({v},{v},{v})"/>')
    out.append("</g>")

    out.append('<g class="legend" font-family="monospace" font-size="10">')
    for k in range(LEGEND_STEPS):
        frac = k / (LEGEND_STEPS - 1)
        value = lo + frac * (hi - lo)
        v = 128 if hi == lo else int(round(frac * 255))
        y = 5 + k * 20
        out.append(f'<rect class="swatch" x="{legend_x}" y="{y}" width="14" height="14" '
                   f'fill="rgb({v},{v},{v})" stroke="black" stroke-width="0.5"/>')
        out.append(f'<text x="{legend_x + 20}" y="{y + 11}">{value:.6f}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
