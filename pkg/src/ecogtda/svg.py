"""Minimal SVG charts: line plot, bar chart and heatmap.

Coordinates are written with fixed precision so identical data gives
identical bytes.
"""

import math
from xml.sax.saxutils import escape

import numpy as np

W, H = 640, 400
M = 60  # margin


def _f(x):
    return f"{x:.2f}"


def _doc(body, width=W, height=H):
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">\n'
            f'<rect width="{width}" height="{height}" fill="white"/>\n' + body + "</svg>\n")


def _text(x, y, s, size=12, anchor="middle", rotate=None):
    rot = f' transform="rotate({rotate} {_f(x)} {_f(y)})"' if rotate is not None else ""
    return (f'<text x="{_f(x)}" y="{_f(y)}" font-family="sans-serif" font-size="{size}" '
            f'text-anchor="{anchor}"{rot}>{escape(str(s))}</text>\n')


def _range(vals):
    vals = np.asarray(vals, dtype=float)
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        return 0.0, 1.0
    lo, hi = float(vals.min()), float(vals.max())
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


def _axes(title, xlabel, ylabel, ylo, yhi):
    out = [f'<line x1="{M}" y1="{H - M}" x2="{W - M / 2}" y2="{H - M}" stroke="black"/>\n',
           f'<line x1="{M}" y1="{M / 2}" x2="{M}" y2="{H - M}" stroke="black"/>\n',
           _text(W / 2, 20, title, 14), _text(W / 2, H - 15, xlabel),
           _text(15, H / 2, ylabel, rotate=-90)]
    for k in range(5):
        v = ylo + (yhi - ylo) * k / 4
        y = H - M - (H - 1.5 * M) * k / 4
        out.append(_text(M - 5, y + 4, f"{v:.3g}", 10, "end"))
    return "".join(out)


def line_plot(path, y, title="", xlabel="", ylabel=""):
    y = np.asarray(y, dtype=float)
    ylo, yhi = _range(y)
    n = max(len(y), 2)
    pts = []
    for i, v in enumerate(y):
        if not math.isfinite(v):
            continue
        px = M + (W - 1.5 * M) * i / (n - 1)
        py = H - M - (H - 1.5 * M) * (v - ylo) / (yhi - ylo)
        pts.append(f"{_f(px)},{_f(py)}")
    body = _axes(title, xlabel, ylabel, ylo, yhi)
    body += f'<polyline fill="none" stroke="steelblue" stroke-width="2" points="{" ".join(pts)}"/>\n'
    for i in range(len(y)):
        if i % max(1, len(y) // 10) == 0:
            body += _text(M + (W - 1.5 * M) * i / (n - 1), H - M + 15, i + 1, 10)
    _write(path, _doc(body))


def bar_chart(path, labels, values, title="", ylabel=""):
    values = np.asarray(values, dtype=float)
    ylo, yhi = 0.0, max(float(values.max()) if values.size else 1.0, 1e-12)
    n = max(len(values), 1)
    bw = (W - 1.5 * M) / n
    body = _axes(title, "feature", ylabel, ylo, yhi)
    for i, (lab, v) in enumerate(zip(labels, values)):
        h = (H - 1.5 * M) * v / yhi
        body += (f'<rect x="{_f(M + i * bw)}" y="{_f(H - M - h)}" width="{_f(bw * 0.9)}" '
                 f'height="{_f(h)}" fill="steelblue"><title>{escape(str(lab))}</title></rect>\n')
    _write(path, _doc(body))


def heatmap(path, C, title=""):
    C = np.asarray(C, dtype=float)
    n = C.shape[0]
    size = 600
    cell = (size - M) / max(n, 1)
    body = _text(size / 2, 20, title, 14)
    for i in range(n):
        for j in range(n):
            v = max(-1.0, min(1.0, C[i, j]))
            # blue for negative, red for positive
            r = 255 if v >= 0 else int(round(255 * (1 + v)))
            b = 255 if v <= 0 else int(round(255 * (1 - v)))
            g = int(round(255 * (1 - abs(v))))
            body += (f'<rect x="{_f(M / 2 + j * cell)}" y="{_f(M / 2 + i * cell)}" '
                     f'width="{_f(cell)}" height="{_f(cell)}" fill="rgb({r},{g},{b})"/>\n')
    _write(path, _doc(body, size, size))


def _write(path, text):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
