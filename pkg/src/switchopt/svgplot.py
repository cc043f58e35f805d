"""Self-contained SVG rendering of per-iteration terminal states.

No plotting dependency: the figure is assembled directly as SVG text with
deterministic number formatting, so identical runs produce byte-identical
files.
"""

from __future__ import annotations

import math

import numpy as np

_W, _H = 640, 480
_MARGIN = 60


def _fmt(v) -> str:
    return f"{v:.6g}"


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-12 * step:
        out.append(round(t / step) * step)
        t += step
    return out


def render_terminal_states(history, landmarks=None, title="terminal states") -> str:
    """SVG scatter/path of terminal states with diamond landmark markers."""
    points = np.array([rec.terminal_state[:2] for rec in history])
    marks = dict(landmarks or {})
    all_x = list(points[:, 0]) + [float(v[0]) for v in marks.values()]
    all_y = list(points[:, 1]) + [float(v[1]) for v in marks.values()]
    lo_x, hi_x = min(all_x), max(all_x)
    lo_y, hi_y = min(all_y), max(all_y)
    pad_x = 0.08 * (hi_x - lo_x or 1.0)
    pad_y = 0.08 * (hi_y - lo_y or 1.0)
    lo_x, hi_x = lo_x - pad_x, hi_x + pad_x
    lo_y, hi_y = lo_y - pad_y, hi_y + pad_y

    def sx(v):
        return _MARGIN + (v - lo_x) / (hi_x - lo_x) * (_W - 2 * _MARGIN)

    def sy(v):
        return _H - _MARGIN - (v - lo_y) / (hi_y - lo_y) * (_H - 2 * _MARGIN)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W // 2}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
    ]
    axis = (
        f'<line x1="{_MARGIN}" y1="{_H - _MARGIN}" x2="{_W - _MARGIN}" '
        f'y2="{_H - _MARGIN}" stroke="black"/>'
        f'<line x1="{_MARGIN}" y1="{_MARGIN}" x2="{_MARGIN}" '
        f'y2="{_H - _MARGIN}" stroke="black"/>'
    )
    parts.append(axis)
    for t in _ticks(lo_x, hi_x):
        x = sx(t)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{_H - _MARGIN}" x2="{_fmt(x)}" '
            f'y2="{_H - _MARGIN + 5}" stroke="black"/>'
            f'<text x="{_fmt(x)}" y="{_H - _MARGIN + 20}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_fmt(t)}</text>'
        )
    for t in _ticks(lo_y, hi_y):
        y = sy(t)
        parts.append(
            f'<line x1="{_MARGIN - 5}" y1="{_fmt(y)}" x2="{_MARGIN}" '
            f'y2="{_fmt(y)}" stroke="black"/>'
            f'<text x="{_MARGIN - 9}" y="{_fmt(y + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_fmt(t)}</text>'
        )
    parts.append(
        f'<text x="{_W // 2}" y="{_H - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">x1(t_f)</text>'
        f'<text x="16" y="{_H // 2}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {_H // 2})">x2(t_f)</text>'
    )
    if len(points) > 1:
        coords = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in points)
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="steelblue" '
            f'stroke-width="1.2"/>'
        )
    for i, (x, y) in enumerate(points):
        fill = "black" if i == 0 else "steelblue"
        parts.append(
            f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="3" '
            f'fill="{fill}"/>'
        )
    if len(points) > 0:
        x0, y0 = points[0]
        parts.append(
            f'<text x="{_fmt(sx(x0) + 6)}" y="{_fmt(sy(y0) - 6)}" '
            f'font-family="sans-serif" font-size="12">O</text>'
        )
    for name in sorted(marks):
        vx, vy = float(marks[name][0]), float(marks[name][1])
        cx, cy = sx(vx), sy(vy)
        parts.append(
            f'<path d="M {_fmt(cx)} {_fmt(cy - 6)} L {_fmt(cx + 6)} {_fmt(cy)} '
            f'L {_fmt(cx)} {_fmt(cy + 6)} L {_fmt(cx - 6)} {_fmt(cy)} Z" '
            f'fill="black"/>'
            f'<text x="{_fmt(cx + 8)}" y="{_fmt(cy - 8)}" '
            f'font-family="sans-serif" font-size="13">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
