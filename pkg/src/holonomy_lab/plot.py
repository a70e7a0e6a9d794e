"""Static SVG renderings of planar loops."""

from __future__ import annotations

import numpy as np

from .errors import DomainError
from .loopcore import Loop, samples_csv

SVG_SAMPLES = 4096
CANVAS = 512


def _fmt(x: float) -> str:
    s = f"{x:.6f}"
    return "0.000000" if s == "-0.000000" else s


def loop_svg(gamma: Loop, samples: int = SVG_SAMPLES, title: str | None = None) -> str:
    """The image of a planar loop as SVG.

    Each non-constant segment becomes one polyline; the sample budget is split
    between segments in proportion to their parameter width.  The viewBox is
    the bounding box with a 5% margin and the basepoint is drawn as a dot.
    """
    if gamma.space.dimension != 2:
        raise DomainError("SVG output needs a planar loop")
    t = np.linspace(0.0, 1.0, samples + 1)
    strokes = []
    for i, seg in enumerate(gamma.segments):
        if seg.is_constant:
            continue
        a, b = gamma._t[i], gamma._t[i + 1]
        k = max(int(np.ceil(samples * (b - a))), 16)
        tau = np.linspace(0.0, 1.0, k + 1)
        strokes.append(seg.value(tau))
    p = gamma.space.p
    pts = np.vstack(strokes + [p[None, :]]) if strokes else p[None, :]
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1]))
    if span == 0.0:
        span = 1.0
    margin = 0.05 * span
    x0, y0 = lo[0] - margin, -(hi[1] + margin)
    w = (hi[0] - lo[0]) + 2 * margin
    h = (hi[1] - lo[1]) + 2 * margin
    if w <= 2 * margin:
        x0, w = lo[0] - span / 2 - margin, span + 2 * margin
    if h <= 2 * margin:
        y0, h = -(hi[1] + span / 2 + margin), span + 2 * margin
    stroke = _fmt(span / 400.0)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" '
        f'viewBox="{_fmt(x0)} {_fmt(y0)} {_fmt(w)} {_fmt(h)}">',
    ]
    if title:
        out.append(f"  <title>{title}</title>")
    for xy in strokes:
        coords = " ".join(f"{_fmt(x)},{_fmt(-y)}" for x, y in xy)
        out.append(f'  <polyline fill="none" stroke="black" stroke-width="{stroke}" points="{coords}"/>')
    out.append(
        f'  <circle class="basepoint" cx="{_fmt(p[0])}" cy="{_fmt(-p[1])}" r="{_fmt(span / 80.0)}" fill="red"/>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render(gamma: Loop, fmt: str = "svg", samples: int = SVG_SAMPLES) -> str:
    if fmt == "svg":
        return loop_svg(gamma, samples, gamma.label)
    if fmt == "csv":
        return samples_csv(gamma, samples)
    raise DomainError(f"plot format must be svg or csv, not {fmt!r}")
