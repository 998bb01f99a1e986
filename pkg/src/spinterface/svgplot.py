"""Self-contained static SVG line plots and heatmaps (no external assets)."""
from __future__ import annotations

from pathlib import Path

import numpy as np

W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 20, 50


def _num(v) -> str:
    return f"{float(v):.6g}"


def _frame(xlim, ylim, xlabel, ylabel):
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for k in range(5):
        fx = k / 4
        x = LEFT + fx * pw
        y = TOP + ph - fx * ph
        parts.append(f'<text x="{x:.1f}" y="{H - BOTTOM + 16}" font-size="11" text-anchor="middle">'
                     f'{_num(xlim[0] + fx * (xlim[1] - xlim[0]))}</text>')
        parts.append(f'<text x="{LEFT - 6}" y="{y + 4:.1f}" font-size="11" text-anchor="end">'
                     f'{_num(ylim[0] + fx * (ylim[1] - ylim[0]))}</text>')
    parts.append(f'<text x="{LEFT + pw / 2}" y="{H - 10}" font-size="13" text-anchor="middle">{xlabel}</text>')
    parts.append(f'<text x="16" y="{TOP + ph / 2}" font-size="13" text-anchor="middle" '
                 f'transform="rotate(-90 16 {TOP + ph / 2})">{ylabel}</text>')
    return parts, pw, ph


def _limits(v):
    lo, hi = float(np.min(v)), float(np.max(v))
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


def line_plot(path, x, ys, xlabel="", ylabel="", labels=None) -> Path:
    x = np.asarray(x, dtype=float)
    ys = [np.asarray(y, dtype=float) for y in (ys if isinstance(ys, (list, tuple)) else [ys])]
    xlim = _limits(x)
    ylim = _limits(np.concatenate(ys))
    parts, pw, ph = _frame(xlim, ylim, xlabel, ylabel)
    colours = ("#1f4e9c", "#c0392b", "#27864a", "#7d3c98")
    for i, y in enumerate(ys):
        px = LEFT + (x - xlim[0]) / (xlim[1] - xlim[0]) * pw
        py = TOP + ph - (y - ylim[0]) / (ylim[1] - ylim[0]) * ph
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        parts.append(f'<polyline fill="none" stroke="{colours[i % len(colours)]}" stroke-width="1.5" points="{pts}"/>')
        if labels:
            parts.append(f'<text x="{W - RIGHT - 6}" y="{TOP + 16 + 14 * i}" font-size="11" text-anchor="end" '
                         f'fill="{colours[i % len(colours)]}">{labels[i]}</text>')
    parts.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(parts) + "\n")
    return path


def heatmap(path, x, y, z, xlabel="", ylabel="") -> Path:
    """``z`` has shape (len(x), len(y)); x runs horizontally."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    xlim, ylim = _limits(x), _limits(y)
    parts, pw, ph = _frame(xlim, ylim, xlabel, ylabel)
    zlo, zhi = _limits(z)
    cw = pw / len(x)
    ch = ph / len(y)
    for i in range(len(x)):
        for j in range(len(y)):
            level = (z[i, j] - zlo) / (zhi - zlo)
            shade = int(round(255 * (1 - level)))
            parts.append(f'<rect x="{LEFT + i * cw:.2f}" y="{TOP + ph - (j + 1) * ch:.2f}" width="{cw + 0.05:.2f}" '
                         f'height="{ch + 0.05:.2f}" fill="rgb(255,{shade},{shade})"/>')
    parts.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(parts) + "\n")
    return path
