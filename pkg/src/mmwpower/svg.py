"""Minimal SVG line plots: one ``<polyline>`` per series."""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2")

W, H = 640, 400
ML, MR, MT, MB = 70, 150, 40, 50


def _text(s: str) -> str:
    # XML 1.0 forbids most control characters even when escaped
    return escape("".join(c for c in str(s) if (c >= " " or c == "\t") and c not in "\ufffe\uffff"))


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(round(v, 12))
        v += step
    return out


def line_plot(
    series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    points: Sequence[tuple[str, Sequence[float], Sequence[float]]] = (),
    vlines: Sequence[tuple[str, float]] = (),
    hlines: Sequence[tuple[str, float]] = (),
) -> str:
    """Render ``(label, xs, ys)`` series as polylines; ``points`` as markers."""
    xs_all = [float(x) for _, xs, _ in (*series, *points) for x in xs]
    ys_all = [float(y) for _, _, ys in (*series, *points) for y in ys if math.isfinite(y)]
    xs_all += [x for _, x in vlines]
    ys_all += [y for _, y in hlines]
    x0, x1 = (min(xs_all), max(xs_all)) if xs_all else (0.0, 1.0)
    y0, y1 = (min(ys_all), max(ys_all)) if ys_all else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    pw, ph = W - ML - MR, H - MT - MB

    def sx(x):
        return ML + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return MT + (y1 - y) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{sx(t):.2f}" y1="{MT + ph}" x2="{sx(t):.2f}" y2="{MT + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{MT + ph + 16}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{ML - 4}" y1="{sy(t):.2f}" x2="{ML}" y2="{sy(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{ML - 6}" y="{sy(t) + 4:.2f}" text-anchor="end">{t:g}</text>')
    if title:
        out.append(f'<text x="{ML + pw / 2}" y="{MT - 14}" text-anchor="middle" font-size="13">{_text(title)}</text>')
    if xlabel:
        out.append(f'<text x="{ML + pw / 2}" y="{H - 10}" text-anchor="middle">{_text(xlabel)}</text>')
    if ylabel:
        out.append(
            f'<text x="16" y="{MT + ph / 2}" text-anchor="middle" '
            f'transform="rotate(-90 16 {MT + ph / 2})">{_text(ylabel)}</text>'
        )
    for label, x in vlines:
        out.append(
            f'<line x1="{sx(x):.2f}" y1="{MT}" x2="{sx(x):.2f}" y2="{MT + ph}" '
            f'stroke="gray" stroke-dasharray="4 3"/>'
        )
        out.append(f'<text x="{sx(x) + 3:.2f}" y="{MT + 12}" fill="gray">{_text(label)}</text>')
    for label, y in hlines:
        out.append(
            f'<line x1="{ML}" y1="{sy(y):.2f}" x2="{ML + pw}" y2="{sy(y):.2f}" '
            f'stroke="gray" stroke-dasharray="4 3"/>'
        )
        out.append(f'<text x="{ML + 3}" y="{sy(y) - 3:.2f}" fill="gray">{_text(label)}</text>')

    legend_y = MT + 10
    for k, (label, xs, ys) in enumerate(series):
        color = COLORS[k % len(COLORS)]
        pts = " ".join(f"{sx(float(x)):.2f},{sy(float(y)):.2f}" for x, y in zip(xs, ys) if math.isfinite(y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<line x1="{ML + pw + 10}" y1="{legend_y}" x2="{ML + pw + 30}" y2="{legend_y}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{ML + pw + 34}" y="{legend_y + 4}">{_text(label)}</text>')
        legend_y += 16
    for k, (label, xs, ys) in enumerate(points):
        color = COLORS[(len(series) + k) % len(COLORS)]
        for x, y in zip(xs, ys):
            out.append(f'<circle cx="{sx(float(x)):.2f}" cy="{sy(float(y)):.2f}" r="2.5" fill="{color}"/>')
        out.append(f'<circle cx="{ML + pw + 20}" cy="{legend_y}" r="3" fill="{color}"/>')
        out.append(f'<text x="{ML + pw + 34}" y="{legend_y + 4}">{_text(label)}</text>')
        legend_y += 16
    out.append("</svg>")
    return "\n".join(out) + "\n"
