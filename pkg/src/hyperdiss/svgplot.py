"""Deterministic log-log line plots as plain SVG text.

No plotting library: the output depends only on the input numbers, so the
same data always give byte-identical files.
"""

import math

import numpy as np

__all__ = ["render_svg", "svg_text"]

WIDTH, HEIGHT = 640, 440
MARGIN = dict(left=70, right=20, top=30, bottom=50)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(v):
    return f"{v:.2f}"


def _decades(lo, hi):
    return range(math.floor(lo), math.ceil(hi) + 1)


def svg_text(series, guides=(), title="", xlabel="x", ylabel="y"):
    """SVG document for ``series = [(label, x, y), ...]`` on log-log axes.

    ``guides`` are reference slopes drawn dashed through the geometric
    midpoint of the first series.
    """
    if not series:
        raise ValueError("nothing to plot: no series")
    data = []
    for label, x, y in series:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.size == 0 or x.shape != y.shape:
            raise ValueError(f"series {label!r} is empty or has mismatched x/y")
        if np.any(~np.isfinite(x)) or np.any(~np.isfinite(y)) or np.any(x <= 0) or np.any(y <= 0):
            raise ValueError(f"series {label!r} has nonpositive or non-finite values on log axes")
        data.append((str(label), np.log10(x), np.log10(y)))
    lx = np.concatenate([d[1] for d in data])
    ly = np.concatenate([d[2] for d in data])
    x0, x1 = float(lx.min()), float(lx.max())
    y0, y1 = float(ly.min()), float(ly.max())
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(u):
        return MARGIN["left"] + (u - x0) / (x1 - x0) * pw

    def py(v):
        return MARGIN["top"] + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<defs><clipPath id="plot"><rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" '
        f'width="{pw}" height="{ph}"/></clipPath></defs>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        f'fill="none" stroke="black"/>',
    ]
    for d in _decades(x0, x1):
        if x0 - 1e-9 <= d <= x1 + 1e-9:
            X = _fmt(px(d))
            out.append(f'<line x1="{X}" y1="{MARGIN["top"] + ph}" x2="{X}" y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
            out.append(f'<text x="{X}" y="{MARGIN["top"] + ph + 18}" font-size="11" '
                       f'text-anchor="middle">1e{d}</text>')
    for d in _decades(y0, y1):
        if y0 - 1e-9 <= d <= y1 + 1e-9:
            Y = _fmt(py(d))
            out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{Y}" x2="{MARGIN["left"]}" y2="{Y}" stroke="black"/>')
            out.append(f'<text x="{MARGIN["left"] - 8}" y="{Y}" font-size="11" '
                       f'text-anchor="end" dominant-baseline="middle">1e{d}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 10}" font-size="12" '
               f'text-anchor="middle">{_escape(xlabel)}</text>')
    out.append(f'<text x="15" y="{MARGIN["top"] + ph / 2:.1f}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 15 {MARGIN["top"] + ph / 2:.1f})">{_escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="18" font-size="13" text-anchor="middle">'
                   f'{_escape(title)}</text>')
    _, gx, gy = data[0]
    xm = 0.5 * (gx.min() + gx.max())
    ym = float(np.interp(xm, gx, gy)) if gx.size > 1 and np.all(np.diff(gx) > 0) else float(gy.mean())
    for slope in guides:
        slope = float(slope)
        a = (x0, ym + slope * (x0 - xm))
        b = (x1, ym + slope * (x1 - xm))
        out.append(f'<line x1="{_fmt(px(a[0]))}" y1="{_fmt(py(a[1]))}" x2="{_fmt(px(b[0]))}" '
                   f'y2="{_fmt(py(b[1]))}" stroke="gray" stroke-dasharray="6,4" clip-path="url(#plot)"/>')
    for i, (label, gx, gy) in enumerate(data):
        pts = " ".join(f"{_fmt(px(u))},{_fmt(py(v))}" for u, v in zip(gx, gy))
        color = COLORS[i % len(COLORS)]
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
    legend = [(label, COLORS[i % len(COLORS)], "") for i, (label, _, _) in enumerate(data)]
    legend += [(f"slope {float(s):g}", "gray", ' stroke-dasharray="6,4"') for s in guides]
    for i, (label, color, dash) in enumerate(legend):
        yy = MARGIN["top"] + 15 + 16 * i
        xx = WIDTH - MARGIN["right"] - 150
        out.append(f'<line x1="{xx}" y1="{yy}" x2="{xx + 20}" y2="{yy}" stroke="{color}"{dash}/>')
        out.append(f'<text x="{xx + 26}" y="{yy + 4}" font-size="11">{_escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text):
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def render_svg(series, guides, out, **kw):
    """Write :func:`svg_text` to ``out``."""
    text = svg_text(series, guides, **kw)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return out
