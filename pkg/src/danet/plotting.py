"""Static attention-overlay figures: a hand-written SVG plus a companion CSV."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional
from xml.sax.saxutils import escape

import numpy as np

from .errors import ShapeError

WIDTH, HEIGHT, MARGIN, GAP = 1000, 420, 50, 30
COLOURS = {"signal": "#1f3b73", "w1": "#d95f02", "w2": "#1b9e77"}


def _polyline(t: np.ndarray, y: np.ndarray, x0, y0, w, h, lo, hi, colour, name) -> str:
    span = hi - lo if hi > lo else 1.0
    px = x0 + (t - t[0]) / max(t[-1] - t[0], 1e-12) * w
    py = y0 + h - (y - lo) / span * h
    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
    return (f'<polyline class="curve" data-series="{name}" fill="none" stroke="{colour}" '
            f'stroke-width="1" points="{pts}"/>')


def _axis_box(x0, y0, w, h, label) -> list[str]:
    return [f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="#999"/>',
            f'<text x="{x0}" y="{y0 - 6}" font-size="12">{escape(label)}</text>']


def overlay_svg(signal, fs: float, w1: Optional[np.ndarray] = None, w2: Optional[np.ndarray] = None,
                title: str = "") -> str:
    """Two panels on a shared time axis: the trace on top, attention weights below."""
    signal = np.asarray(signal, dtype=np.float64)
    n = len(signal)
    for name, w in (("w1", w1), ("w2", w2)):
        if w is not None and len(w) != n:
            raise ShapeError(f"{name} has {len(w)} frames, signal has {n}")
    t = np.arange(n) / fs
    pw = WIDTH - 2 * MARGIN
    ph = (HEIGHT - 2 * MARGIN - GAP) / 2
    top, bottom = MARGIN, MARGIN + ph + GAP
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
             f'viewBox="0 0 {WIDTH} {HEIGHT}">',
             f'<text x="{MARGIN}" y="20" font-size="14">{escape(title)}</text>']
    parts += _axis_box(MARGIN, top, pw, ph, "signal (mV)")
    parts.append(_polyline(t, signal, MARGIN, top, pw, ph, signal.min(), signal.max(),
                           COLOURS["signal"], "signal"))
    parts += _axis_box(MARGIN, bottom, pw, ph, "attention weight")
    for name, w in (("w1", w1), ("w2", w2)):
        if w is not None:
            parts.append(_polyline(t, np.asarray(w, dtype=np.float64), MARGIN, bottom, pw, ph,
                                   0.0, 1.0, COLOURS[name], name))
    parts.append(f'<text x="{MARGIN}" y="{HEIGHT - 12}" font-size="12">0 s</text>')
    parts.append(f'<text x="{WIDTH - MARGIN - 40}" y="{HEIGHT - 12}" font-size="12">'
                 f'{t[-1] if n else 0:.2f} s</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_overlay(svg_path, csv_path, signal, fs: float, w1=None, w2=None, title: str = ""):
    """Write the SVG and a CSV with one row per frame: t, signal, w1, w2 (blank when absent)."""
    svg_path, csv_path = Path(svg_path), Path(csv_path)
    svg_path.parent.mkdir(parents=True, exist_ok=True)
    svg_path.write_text(overlay_svg(signal, fs, w1, w2, title))
    with open(csv_path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["t", "signal", "w1", "w2"])
        for i, v in enumerate(signal):
            out.writerow([repr(i / fs), repr(float(v)),
                          "" if w1 is None else repr(float(w1[i])),
                          "" if w2 is None else repr(float(w2[i]))])
    return svg_path, csv_path
