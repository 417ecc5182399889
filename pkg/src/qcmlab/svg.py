"""Self-contained SVG 1.1 line and scatter charts."""
import math
from xml.sax.saxutils import escape

import numpy as np

_W, _H = 640, 420
_MARGIN = dict(left=70, right=20, top=40, bottom=50)
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _ticks(lo, hi, count=5):
    if hi <= lo:
        return [lo]
    return list(np.linspace(lo, hi, count))


def _transform(v, log):
    v = np.asarray(v, float)
    return np.log10(v) if log else v


def line_chart(series, title="", xlabel="", ylabel="", logx=False, logy=False, scatter=False):
    """``series``: list of ``(label, xs, ys)``; points that are not finite (or not
    positive on a log axis) are dropped."""
    clean = []
    for label, xs, ys in series:
        x, y = np.asarray(xs, float), np.asarray(ys, float)
        ok = np.isfinite(x) & np.isfinite(y)
        if logx:
            ok &= x > 0
        if logy:
            ok &= y > 0
        clean.append((label, _transform(x[ok], logx), _transform(y[ok], logy)))
    allx = np.concatenate([c[1] for c in clean]) if clean else np.zeros(0)
    ally = np.concatenate([c[2] for c in clean]) if clean else np.zeros(0)
    if allx.size == 0:
        allx, ally = np.array([0.0, 1.0]), np.array([0.0, 1.0])
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw = _W - _MARGIN["left"] - _MARGIN["right"]
    ph = _H - _MARGIN["top"] - _MARGIN["bottom"]

    def px(v):
        return _MARGIN["left"] + (v - x0) / (x1 - x0) * pw

    def py(v):
        return _MARGIN["top"] + (1.0 - (v - y0) / (y1 - y0)) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">'
        f'{escape(title)}</text>',
        f'<rect x="{_MARGIN["left"]}" y="{_MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        lab = f"{10 ** t:.3g}" if logx else f"{t:.3g}"
        out.append(f'<text x="{px(t):.1f}" y="{_H - _MARGIN["bottom"] + 18}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="11">{lab}</text>')
    for t in _ticks(y0, y1):
        lab = f"{10 ** t:.3g}" if logy else f"{t:.3g}"
        out.append(f'<text x="{_MARGIN["left"] - 6}" y="{py(t) + 4:.1f}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">{lab}</text>')
    out.append(f'<text x="{_W / 2:.1f}" y="{_H - 10}" text-anchor="middle" font-family="sans-serif" '
               f'font-size="12">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{_H / 2:.1f}" text-anchor="middle" font-family="sans-serif" font-size="12" '
               f'transform="rotate(-90 16 {_H / 2:.1f})">{escape(ylabel)}</text>')
    for i, (label, x, y) in enumerate(clean):
        color = _COLORS[i % len(_COLORS)]
        if x.size == 0:
            continue
        if scatter:
            for a, b in zip(x, y):
                out.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="2.5" fill="{color}"/>')
        else:
            pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = _MARGIN["top"] + 16 + 16 * i
        out.append(f'<text x="{_W - _MARGIN["right"] - 8}" y="{ly}" text-anchor="end" font-family="sans-serif" '
                   f'font-size="11" fill="{color}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def decimate(xs, ys, max_points=4000):
    """Keep at most ``max_points`` evenly spaced vertices (first and last kept)."""
    xs, ys = np.asarray(xs), np.asarray(ys)
    if xs.size <= max_points:
        return xs, ys
    idx = np.unique(np.round(np.linspace(0, xs.size - 1, max_points)).astype(int))
    return xs[idx], ys[idx]


def finite_or(value, default):
    return value if isinstance(value, float) and math.isfinite(value) else default
