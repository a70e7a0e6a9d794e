"""Piecewise-smooth based loops in R^n and their algebra."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import (
    CornerError,
    DomainError,
    IncompatibleLoopsError,
    InvalidLoopError,
    InvalidReparamError,
    UnsupportedLoopError,
)
from .reparam import AffineMap, Reparam
from .segments import (
    ConstantSegment,
    LocalZeros,
    Segment,
    TrigSegment,
    compose,
    constant,
    restrict,
    reverse,
)
from .sets import ClosedSetDescription, normalize

ROOT_TOL = 1e-10
MATCH_TOL = 1e-8
METRIC_SAMPLES = 2048
CONTINUITY_TOL = 1e-12


@dataclass(frozen=True)
class AmbientSpace:
    dimension: int
    basepoint: tuple = ()

    def __post_init__(self):
        if int(self.dimension) < 1:
            raise DomainError("dimension must be at least 1")
        bp = tuple(float(x) for x in self.basepoint) if self.basepoint else (0.0,) * int(self.dimension)
        if len(bp) != int(self.dimension) or not all(math.isfinite(x) for x in bp):
            raise DomainError("basepoint must be a finite vector of the ambient dimension")
        object.__setattr__(self, "dimension", int(self.dimension))
        object.__setattr__(self, "basepoint", bp)

    @property
    def p(self) -> np.ndarray:
        return np.asarray(self.basepoint, dtype=float)


PLANE = AmbientSpace(2)


@dataclass(frozen=True, eq=False)
class Loop:
    space: AmbientSpace
    breakpoints: tuple
    segments: tuple
    label: str | None = None
    _inverse: "Loop | None" = field(default=None, repr=False, compare=False)
    _t: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        t = np.asarray(self.breakpoints, dtype=float)
        object.__setattr__(self, "breakpoints", tuple(float(x) for x in t))
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(self, "_t", t)
        if len(self.segments) < 1 or len(t) != len(self.segments) + 1:
            raise InvalidLoopError("need r >= 1 segments and r + 1 breakpoints")
        if t[0] != 0.0 or t[-1] != 1.0 or np.any(np.diff(t) <= 0.0):
            raise InvalidLoopError("breakpoints must increase strictly from 0 to 1")
        p = self.space.p
        for s in self.segments:
            if s.dimension != self.space.dimension:
                raise InvalidLoopError("segment dimension differs from the ambient dimension")
        if not _close(self.segments[0].start(), p) or not _close(self.segments[-1].end(), p):
            raise InvalidLoopError("loop must start and end at the basepoint")
        for k, (a, b) in enumerate(zip(self.segments, self.segments[1:])):
            if not _close(a.end(), b.start()):
                raise InvalidLoopError(f"segments {k} and {k + 1} do not join continuously")

    @property
    def n_segments(self) -> int:
        return len(self.segments)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self._t)

    def __call__(self, t):
        return evaluate(self, t)

    def locate(self, t):
        """Segment index and local parameter for global parameters ``t``."""
        t = np.asarray(t, dtype=float)
        k = np.clip(np.searchsorted(self._t, t, side="right") - 1, 0, self.n_segments - 1)
        a = self._t[k]
        b = self._t[k + 1]
        tau = np.clip((t - a) / (b - a), 0.0, 1.0)
        return k, tau

    @property
    def is_trivial(self) -> bool:
        return all(s.is_constant for s in self.segments)


def _close(x, y, tol=CONTINUITY_TOL) -> bool:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return bool(np.all(np.abs(x - y) <= tol * np.maximum(1.0, np.abs(y))))


def _check_t(t):
    arr = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError("loop parameter must lie in [0, 1]")
    return arr


# ---------------------------------------------------------------------------
# constructors


def from_segments(
    space: AmbientSpace,
    segments: Sequence[Segment],
    breakpoints: Sequence[float] | None = None,
    label: str | None = None,
) -> Loop:
    """Loop from segments; equal parameter widths unless breakpoints are given."""
    if breakpoints is None:
        r = len(segments)
        breakpoints = [k / r for k in range(r)] + [1.0]
    return Loop(space, tuple(breakpoints), tuple(segments), label)


def trivial_loop(space: AmbientSpace = PLANE, label: str | None = "trivial") -> Loop:
    return Loop(space, (0.0, 1.0), (constant(space.p),), label)


def circle_loop(radius: float = 1.0, space: AmbientSpace = PLANE, label: str | None = None) -> Loop:
    """Counter-clockwise circle through the basepoint, centred at ``p - (radius, 0)``."""
    p = space.p
    seg = TrigSegment(
        offset=p - np.array([radius, 0.0]),
        freqs=np.array([2.0 * np.pi]),
        cos_coeffs=np.array([[radius, 0.0]]),
        sin_coeffs=np.array([[0.0, radius]]),
    )
    return Loop(space, (0.0, 1.0), (seg,), label or f"circle(r={radius})")


def winding_loop(winding: int, radius: float = 1.0, label: str | None = None) -> Loop:
    """Circle of ``radius`` about the origin traversed ``winding`` times, based at ``(radius, 0)``."""
    space = AmbientSpace(2, (radius, 0.0))
    seg = TrigSegment(
        offset=np.zeros(2),
        freqs=np.array([2.0 * np.pi * winding]),
        cos_coeffs=np.array([[radius, 0.0]]),
        sin_coeffs=np.array([[0.0, radius]]),
    )
    return Loop(space, (0.0, 1.0), (seg,), label or f"winding(w={winding}, r={radius})")


def polygon_loop(vertices: Sequence[Sequence[float]], space: AmbientSpace = PLANE, label=None) -> Loop:
    """Closed polygon p -> v1 -> ... -> vk -> p with straight edges."""
    from .segments import line

    pts = [space.p] + [np.asarray(v, dtype=float) for v in vertices] + [space.p]
    segs = [line(a, b) for a, b in zip(pts, pts[1:])]
    return from_segments(space, segs, label=label)


def retrace_loop(beta: Segment, space: AmbientSpace = PLANE, label: str | None = None) -> Loop:
    """``beta^{-1} . beta``: run ``beta`` out from the basepoint, then back along it."""
    return from_segments(space, [beta, reverse(beta)], label=label or "retrace")


# ---------------------------------------------------------------------------
# evaluation


def evaluate(loop: Loop, t):
    """Position ``loop(t)``; scalar in, vector out; array in, ``(len, n)`` out."""
    arr = _check_t(t)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    k, tau = loop.locate(arr)
    out = np.empty((arr.size, loop.space.dimension))
    for i in np.unique(k):
        mask = k == i
        out[mask] = loop.segments[i].value(tau[mask])
    return out[0] if scalar else out


def derivative(loop: Loop, t, side: str = "two_sided", corner_tol: float = 1e-9) -> np.ndarray:
    """Velocity at a single parameter; chain rule over the affine cell map."""
    t = float(_check_t(t))
    bps = loop._t
    widths = loop.widths

    def seg_d(i, tau):
        return loop.segments[i].deriv(tau)[0] / widths[i]

    on_bp = np.flatnonzero(bps == t)
    if on_bp.size == 0:
        k, tau = loop.locate(t)
        return seg_d(int(k), float(tau))
    j = int(on_bp[0])
    left = seg_d(j - 1, 1.0) if j > 0 else None
    right = seg_d(j, 0.0) if j < loop.n_segments else None
    if side == "left":
        if left is None:
            raise DomainError("no left derivative at t = 0")
        return left
    if side == "right":
        if right is None:
            raise DomainError("no right derivative at t = 1")
        return right
    if side != "two_sided":
        raise DomainError(f"unknown side {side!r}")
    if left is None:
        return right
    if right is None:
        return left
    scale = max(1.0, float(np.max(np.abs(left))), float(np.max(np.abs(right))))
    if np.max(np.abs(left - right)) > corner_tol * scale:
        raise CornerError(f"one-sided derivatives differ at breakpoint t = {t}")
    return 0.5 * (left + right)


# ---------------------------------------------------------------------------
# algebra


def _check_same_space(a: Loop, b: Loop):
    if a.space != b.space:
        raise IncompatibleLoopsError("loops must share the ambient space and basepoint")


def concat(gamma2: Loop, gamma1: Loop, label: str | None = None) -> Loop:
    """``gamma2 . gamma1``: ``gamma1`` on [0, 1/2], then ``gamma2`` on [1/2, 1]."""
    _check_same_space(gamma2, gamma1)
    first = [x / 2.0 for x in gamma1.breakpoints]
    second = [(x + 1.0) / 2.0 for x in gamma2.breakpoints]
    bps = first[:-1] + [0.5] + second[1:-1] + [1.0]
    return Loop(gamma1.space, tuple(bps), gamma1.segments + gamma2.segments, label)


def invert(gamma: Loop) -> Loop:
    """``gamma^{-1}(t) = gamma(1 - t)``; inverting twice returns the original object."""
    if gamma._inverse is not None:
        return gamma._inverse
    bps = [1.0 - x for x in reversed(gamma.breakpoints)]
    bps[0], bps[-1] = 0.0, 1.0
    segs = tuple(reverse(s) for s in reversed(gamma.segments))
    label = None if gamma.label is None else f"inverse({gamma.label})"
    return Loop(gamma.space, tuple(bps), segs, label, _inverse=gamma)


def _is_identity(phi: Reparam) -> bool:
    return phi.kind == "affine" and np.array_equal(np.asarray(phi.knots), np.asarray(phi.values))


def reparametrize(gamma: Loop, phi: Reparam, label: str | None = None) -> Loop:
    """``gamma o phi`` with cells at phi-preimages of gamma's breakpoints and phi's knots."""
    if not isinstance(phi, Reparam):
        raise InvalidReparamError("phi must be a Reparam")
    if _is_identity(phi):
        return gamma
    cuts = set(float(x) for x in phi.breakpoints)
    for v in gamma.breakpoints[1:-1]:
        lo, hi = phi.preimage(v)
        cuts.add(lo)
        cuts.add(hi)
    u = np.array(sorted(cuts))
    u = u[(u >= 0.0) & (u <= 1.0)]
    u = np.unique(u)
    bps = gamma._t
    segments = []
    kept = [0.0]
    for ua, ub in zip(u, u[1:]):
        if ub <= ua:
            continue
        fa, fb = float(phi(ua)), float(phi(ub))
        if fa == fb:
            # a rest at either end of the domain sits exactly on the basepoint
            seg = constant(gamma.space.p if fa in (0.0, 1.0) else evaluate(gamma, fa))
        else:
            mid = float(phi(0.5 * (ua + ub)))
            i = int(np.clip(np.searchsorted(bps, mid, side="right") - 1, 0, gamma.n_segments - 1))
            width = bps[i + 1] - bps[i]
            if phi.kind == "affine":
                # exact on the cell; avoids the one-sided slope at a knot
                inner = [AffineMap(fa, fb - fa)]
            else:
                inner = [AffineMap(ua, ub - ua), phi]
            seg = compose(gamma.segments[i], inner + [AffineMap(-bps[i] / width, 1.0 / width)])
        segments.append(seg)
        kept.append(float(ub))
    kept[-1] = 1.0
    return Loop(gamma.space, tuple(kept), tuple(segments), label or gamma.label)


def make_sitting(gamma: Loop, epsilon: float) -> Loop:
    """Reparametrize so the loop rests at the basepoint on ``[0, eps]`` and ``[1 - eps, 1]``."""
    if not (0.0 < epsilon < 0.5):
        raise DomainError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    if gamma.is_trivial:
        return gamma
    return reparametrize(gamma, Reparam.sitting(epsilon))


def scale_loop(gamma: Loop, c: float, label: str | None = None) -> Loop:
    """Pointwise ``c * gamma``; only meaningful for loops based at the origin."""
    if np.any(gamma.space.p):
        raise UnsupportedLoopError("scaling moves a basepoint away from the origin")
    return Loop(gamma.space, gamma.breakpoints, tuple(s.scaled(c) for s in gamma.segments), label)


# ---------------------------------------------------------------------------
# slicing


def slice_loop(gamma: Loop, a: float, b: float) -> list[tuple[Segment, float]]:
    """Pieces ``(segment, parameter width)`` covering ``gamma|[a, b]``."""
    out = []
    bps = gamma._t
    for i, seg in enumerate(gamma.segments):
        lo = max(a, bps[i])
        hi = min(b, bps[i + 1])
        if hi <= lo:
            continue
        w = bps[i + 1] - bps[i]
        ta = 0.0 if lo == bps[i] else (lo - bps[i]) / w
        tb = 1.0 if hi == bps[i + 1] else (hi - bps[i]) / w
        out.append((restrict(seg, ta, tb), hi - lo))
    return out


def assemble(space: AmbientSpace, pieces: Sequence[tuple[Segment, float]], label=None) -> Loop:
    """Loop from ``(segment, width)`` pieces; widths are renormalized to sum to 1."""
    if not pieces:
        return trivial_loop(space, label)
    widths = np.array([w for _, w in pieces], dtype=float)
    cum = np.concatenate([[0.0], np.cumsum(widths)]) / widths.sum()
    cum[-1] = 1.0
    return Loop(space, tuple(cum), tuple(s for s, _ in pieces), label)


# ---------------------------------------------------------------------------
# metric


def sample_grid(samples: int) -> np.ndarray:
    """Dyadic grid with ``2**ceil(log2(samples))`` cells; grids are nested as samples grow."""
    samples = max(int(samples), 1)
    m = 1 << max(int(math.ceil(math.log2(samples))), 0)
    return np.arange(m + 1, dtype=float) / m


def _cell_points(gamma: Loop, per_cell: int = 8) -> np.ndarray:
    bps = gamma._t
    frac = np.arange(per_cell + 1) / per_cell
    return (bps[:-1, None] + np.diff(bps)[:, None] * frac[None, :]).ravel()


def sup_distance(gamma1: Loop, gamma2: Loop, samples: int = METRIC_SAMPLES) -> float:
    """``sup_t |gamma1(t) - gamma2(t)|`` over a refinement of both partitions plus a dyadic grid."""
    _check_same_space(gamma1, gamma2)
    t = np.concatenate([sample_grid(samples), _cell_points(gamma1), _cell_points(gamma2)])
    t = np.unique(np.clip(t, 0.0, 1.0))
    d = np.linalg.norm(evaluate(gamma1, t) - evaluate(gamma2, t), axis=1)
    return float(np.max(d))


# ---------------------------------------------------------------------------
# I_gamma and J_gamma


def _to_global(gamma: Loop, i: int, tau: float) -> float:
    a, b = gamma._t[i], gamma._t[i + 1]
    if tau <= 0.0:
        return float(a)
    if tau >= 1.0:
        return float(b)
    return float(a + (b - a) * tau)


def basepoint_preimage(gamma: Loop, tol: float = ROOT_TOL) -> ClosedSetDescription:
    """``gamma^{-1}(p)`` as intervals plus isolated points."""
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    p = gamma.space.p
    intervals, points = [], [0.0, 1.0]
    exact = True
    for i, seg in enumerate(gamma.segments):
        z = seg.zeros_of_offset(p, tol)
        exact = exact and z.exact
        intervals += [(_to_global(gamma, i, a), _to_global(gamma, i, b)) for a, b in z.intervals]
        points += [_to_global(gamma, i, x) for x in z.points]
    return normalize(intervals, points, tol, exact)


def zero_derivative_set(gamma: Loop, tol: float = ROOT_TOL) -> ClosedSetDescription:
    """Smooth parameters with vanishing velocity; corners are excluded."""
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    intervals, points = [], []
    exact = True
    for i, seg in enumerate(gamma.segments):
        z: LocalZeros = seg.stationary(tol)
        exact = exact and z.exact
        intervals += [(_to_global(gamma, i, a), _to_global(gamma, i, b)) for a, b in z.intervals]
        points += [_to_global(gamma, i, x) for x in z.points if 0.0 < x < 1.0]
    # breakpoints (including 0 and 1): stationary iff every one-sided velocity vanishes
    widths = gamma.widths
    for j, t in enumerate(gamma.breakpoints):
        sides = []
        if j > 0:
            sides.append(gamma.segments[j - 1].deriv(1.0)[0] / widths[j - 1])
        if j < gamma.n_segments:
            sides.append(gamma.segments[j].deriv(0.0)[0] / widths[j])
        if all(np.linalg.norm(v) <= tol for v in sides):
            points.append(t)
    return normalize(intervals, points, tol, exact)


def collapse_constant_intervals(
    gamma: Loop, force: bool = False, intervals: Sequence[tuple[float, float]] | None = None
) -> Loop:
    """Shrink every non-degenerate interval of ``I_gamma`` to a point.

    The input is a generalized reparametrization of the output (flat on the
    collapsed intervals), so the two are thin equivalent.
    """
    if intervals is None:
        I = basepoint_preimage(gamma)
        if not I.exact and not force:
            raise UnsupportedLoopError("basepoint preimage is only numerically known; pass force=True")
        intervals = I.intervals
    intervals = sorted((float(a), float(b)) for a, b in intervals if b > a)
    if not intervals:
        return gamma
    if intervals[0][0] <= 0.0 and intervals[-1][1] >= 1.0 and len(intervals) == 1:
        return trivial_loop(gamma.space, gamma.label)
    keep = []
    cursor = 0.0
    for a, b in intervals:
        if a > cursor:
            keep.append((cursor, a))
        cursor = max(cursor, b)
    if cursor < 1.0:
        keep.append((cursor, 1.0))
    pieces = []
    for a, b in keep:
        pieces += slice_loop(gamma, a, b)
    return assemble(gamma.space, pieces, gamma.label)


def samples_csv(gamma: Loop, samples: int = 4096) -> str:
    t = np.linspace(0.0, 1.0, samples + 1)
    x = evaluate(gamma, t)
    head = "t," + ",".join(f"x{k + 1}" for k in range(gamma.space.dimension))
    rows = [head] + [",".join(repr(float(v)) for v in (ti, *xi)) for ti, xi in zip(t, x)]
    return "\n".join(rows) + "\n"
