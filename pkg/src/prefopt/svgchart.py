"""Minimal self-contained SVG line charts (no plotting library).

Supports several series, each optionally with a shaded band (used for
mean +/- std convergence plots), axis ticks, and a legend. Output is a
single ``<svg>`` document, deterministic for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd")


@dataclass(frozen=True)
class Series:
    name: str
    x: np.ndarray
    y: np.ndarray
    band_low: np.ndarray | None = None
    band_high: np.ndarray | None = None
    color: str | None = None


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".") or "0"


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** np.floor(np.log10(raw))
    step = min(s for s in (1 * mag, 2 * mag, 5 * mag, 10 * mag) if s >= raw)
    start = np.ceil(lo / step) * step
    return np.arange(start, hi + step / 2, step)


def line_chart(series: list[Series], title: str = "", xlabel: str = "",
               ylabel: str = "", width: int = 720, height: int = 440) -> str:
    """Render the series to SVG text."""
    ml, mr, mt, mb = 72, 20, 42, 56
    pw, ph = width - ml - mr, height - mt - mb

    xs = np.concatenate([np.asarray(s.x, float) for s in series])
    ys = [np.asarray(s.y, float) for s in series]
    for s in series:
        if s.band_low is not None:
            ys.append(np.asarray(s.band_low, float))
            ys.append(np.asarray(s.band_high, float))
    yc = np.concatenate(ys)
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(yc.min()), float(yc.max())
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    pad = 0.05 * (y_hi - y_lo or 1.0)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def sx(v):
        return ml + (v - x_lo) / (x_hi - x_lo) * pw

    def sy(v):
        return mt + (y_hi - v) / (y_hi - y_lo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    if title:
        out.append(f'<text x="{width / 2}" y="24" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="15">{escape(title)}</text>')

    for tx in _ticks(x_lo, x_hi):
        px = sx(tx)
        out.append(f'<line x1="{px:.2f}" y1="{mt}" x2="{px:.2f}" y2="{mt + ph}" '
                   'stroke="#e0e0e0" stroke-width="1"/>')
        out.append(f'<text x="{px:.2f}" y="{mt + ph + 18}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="11">{_fmt(tx)}</text>')
    for ty in _ticks(y_lo, y_hi):
        py = sy(ty)
        out.append(f'<line x1="{ml}" y1="{py:.2f}" x2="{ml + pw}" y2="{py:.2f}" '
                   'stroke="#e0e0e0" stroke-width="1"/>')
        out.append(f'<text x="{ml - 6}" y="{py + 4:.2f}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="11">{_fmt(ty)}</text>')
    out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" '
               'stroke="#444" stroke-width="1"/>')
    if xlabel:
        out.append(f'<text x="{ml + pw / 2}" y="{height - 14}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="12">{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="20" y="{mt + ph / 2}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="12" '
                   f'transform="rotate(-90 20 {mt + ph / 2})">{escape(ylabel)}</text>')

    for k, s in enumerate(series):
        color = s.color or PALETTE[k % len(PALETTE)]
        x = np.asarray(s.x, float)
        if s.band_low is not None:
            lo = np.asarray(s.band_low, float)
            hi = np.asarray(s.band_high, float)
            fwd = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, hi))
            back = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[::-1], lo[::-1]))
            out.append(f'<polygon points="{fwd} {back}" fill="{color}" '
                       'fill-opacity="0.18" stroke="none"/>')
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, np.asarray(s.y, float)))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                   'stroke-width="1.8"/>')
        ly = mt + 16 + 17 * k
        out.append(f'<line x1="{ml + pw - 150}" y1="{ly}" x2="{ml + pw - 122}" '
                   f'y2="{ly}" stroke="{color}" stroke-width="2.2"/>')
        out.append(f'<text x="{ml + pw - 116}" y="{ly + 4}" font-family="sans-serif" '
                   f'font-size="12">{escape(s.name)}</text>')
    out.append("</svg>")
    return "\n".join(out)
