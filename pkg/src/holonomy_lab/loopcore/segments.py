"""Closed-form smooth arcs ``[0, 1] -> R^n``.

Every segment evaluates positions and first derivatives on arrays of local
parameters and knows how to describe the zero set of ``s(tau) - p`` and of
``s'(tau)``.  The description is exact whenever the closed form allows it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .. import polyroots
from ..errors import DomainError
from ..kernels import BUMP_PEAK, bump, bump_deriv
from .reparam import AffineMap, Reparam, map_from_dict

SEGMENT_KINDS = ("polynomial", "trigonometric", "bump_ray", "constant", "composed")


@dataclass(frozen=True)
class LocalZeros:
    """Zero set of a segment-level quantity in local parameter coordinates."""

    intervals: tuple = ()
    points: tuple = ()
    exact: bool = True

    @classmethod
    def everything(cls, exact=True):
        return cls(intervals=((0.0, 1.0),), exact=exact)


def _as_tau(tau):
    return np.atleast_1d(np.asarray(tau, dtype=float))


class Segment:
    kind: str = ""

    @property
    def dimension(self) -> int:
        raise NotImplementedError

    def value(self, tau) -> np.ndarray:
        """Positions, shape ``(len(tau), n)``."""
        raise NotImplementedError

    def deriv(self, tau) -> np.ndarray:
        raise NotImplementedError

    def start(self) -> np.ndarray:
        return self.value(0.0)[0]

    def end(self) -> np.ndarray:
        return self.value(1.0)[0]

    @property
    def is_constant(self) -> bool:
        return False

    def scaled(self, c: float) -> "Segment":
        raise NotImplementedError

    def zeros_of_offset(self, point, tol: float) -> LocalZeros:
        return numeric_zeros(lambda t: np.linalg.norm(self.value(t) - point, axis=1), tol)

    def stationary(self, tol: float) -> LocalZeros:
        return numeric_zeros(lambda t: np.linalg.norm(self.deriv(t), axis=1), tol)

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class PolynomialSegment(Segment):
    """``s(tau) = sum_k coeffs[k] * tau**k``; ``coeffs`` has shape ``(deg+1, n)``."""

    coeffs: np.ndarray
    kind = "polynomial"

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if not np.all(np.isfinite(c)):
            raise DomainError("polynomial coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @property
    def dimension(self):
        return self.coeffs.shape[1]

    def value(self, tau):
        t = _as_tau(tau)
        out = np.zeros((t.size, self.dimension))
        for c in self.coeffs[::-1]:
            out = out * t[:, None] + c
        return out

    def deriv(self, tau):
        t = _as_tau(tau)
        out = np.zeros((t.size, self.dimension))
        deg = self.coeffs.shape[0] - 1
        for k in range(deg, 0, -1):
            out = out * t[:, None] + k * self.coeffs[k]
        return out

    def start(self):
        return self.coeffs[0].copy()

    @property
    def is_constant(self):
        return bool(np.all(self.coeffs[1:] == 0.0))

    def scaled(self, c):
        return PolynomialSegment(self.coeffs * c)

    def zeros_of_offset(self, point, tol):
        polys = []
        for j in range(self.dimension):
            col = self.coeffs[:, j].copy()
            p = polyroots.to_exact(col)
            polys.append(polyroots.sub(p, [polyroots.Fraction(float(point[j]))]))
        roots = polyroots.common_roots(polys, tol)
        if roots is None:
            return LocalZeros.everything()
        return LocalZeros(points=tuple(roots))

    def stationary(self, tol):
        polys = [polyroots.derivative(polyroots.to_exact(self.coeffs[:, j])) for j in range(self.dimension)]
        roots = polyroots.common_roots(polys, tol)
        if roots is None:
            return LocalZeros.everything()
        return LocalZeros(points=tuple(roots))

    def to_dict(self):
        return {"kind": "polynomial", "params": {"coeffs": self.coeffs.tolist()}}


@dataclass(frozen=True, eq=False)
class TrigSegment(Segment):
    """``s(tau) = offset + sum_k cos(w_k tau) a_k + sin(w_k tau) b_k``."""

    offset: np.ndarray
    freqs: np.ndarray
    cos_coeffs: np.ndarray
    sin_coeffs: np.ndarray
    kind = "trigonometric"

    def __post_init__(self):
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float))
        object.__setattr__(self, "freqs", np.atleast_1d(np.asarray(self.freqs, dtype=float)))
        n = self.offset.size
        object.__setattr__(self, "cos_coeffs", np.asarray(self.cos_coeffs, dtype=float).reshape(-1, n))
        object.__setattr__(self, "sin_coeffs", np.asarray(self.sin_coeffs, dtype=float).reshape(-1, n))

    @property
    def dimension(self):
        return self.offset.size

    def value(self, tau):
        t = _as_tau(tau)
        arg = t[:, None] * self.freqs[None, :]
        return self.offset + np.cos(arg) @ self.cos_coeffs + np.sin(arg) @ self.sin_coeffs

    def deriv(self, tau):
        t = _as_tau(tau)
        arg = t[:, None] * self.freqs[None, :]
        w = self.freqs[None, :]
        return (-w * np.sin(arg)) @ self.cos_coeffs + (w * np.cos(arg)) @ self.sin_coeffs

    @property
    def is_constant(self):
        return bool(
            np.all((self.freqs == 0) | (np.all(self.sin_coeffs == 0, axis=1) & np.all(self.cos_coeffs == 0, axis=1)))
        )

    def scaled(self, c):
        return TrigSegment(self.offset * c, self.freqs, self.cos_coeffs * c, self.sin_coeffs * c)

    def to_dict(self):
        return {
            "kind": "trigonometric",
            "params": {
                "offset": self.offset.tolist(),
                "freqs": self.freqs.tolist(),
                "cos": self.cos_coeffs.tolist(),
                "sin": self.sin_coeffs.tolist(),
            },
        }


@dataclass(frozen=True, eq=False)
class BumpRaySegment(Segment):
    """Out-and-back arc ``offset + radius * g(tau) * direction`` with ``g`` the flat bump.

    With ``normalized`` set, ``g = f / f(1/2)`` so the arc reaches exactly
    ``radius`` from ``offset``; otherwise ``g = f`` and the peak is
    ``radius * exp(-4)``.
    """

    radius: float
    direction: np.ndarray
    offset: np.ndarray
    normalized: bool = False
    kind = "bump_ray"

    def __post_init__(self):
        object.__setattr__(self, "direction", np.asarray(self.direction, dtype=float))
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float))
        object.__setattr__(self, "radius", float(self.radius))

    @classmethod
    def polar(cls, radius, theta, offset=(0.0, 0.0), normalized=False):
        return cls(radius, np.array([np.cos(theta), np.sin(theta)]), np.asarray(offset, dtype=float), normalized)

    @property
    def dimension(self):
        return self.offset.size

    @property
    def _gain(self):
        return self.radius / BUMP_PEAK if self.normalized else self.radius

    def value(self, tau):
        t = _as_tau(tau)
        return self.offset + (self._gain * bump(t))[:, None] * self.direction

    def deriv(self, tau):
        t = _as_tau(tau)
        return (self._gain * bump_deriv(t))[:, None] * self.direction

    def start(self):
        return self.offset.copy()

    def end(self):
        return self.offset.copy()

    @property
    def is_constant(self):
        return self.radius == 0.0 or not np.any(self.direction)

    def scaled(self, c):
        return BumpRaySegment(self.radius * c, self.direction, self.offset * c, self.normalized)

    def zeros_of_offset(self, point, tol):
        w = np.asarray(point, dtype=float) - self.offset
        if self.is_constant:
            return LocalZeros.everything() if not np.any(w) else LocalZeros()
        d = self.direction
        lam = float(w @ d / (d @ d))
        if np.any(w - lam * d):
            return LocalZeros()
        level = lam / self._gain
        if level == 0.0:
            return LocalZeros(points=(0.0, 1.0))
        if level < 0.0 or level > BUMP_PEAK:
            return LocalZeros()
        if level == BUMP_PEAK:
            return LocalZeros(points=(0.5,))
        q = -1.0 / np.log(level)
        disc = np.sqrt(max(1.0 - 4.0 * q, 0.0))
        return LocalZeros(points=(0.5 * (1.0 - disc), 0.5 * (1.0 + disc)))

    def stationary(self, tol):
        if self.is_constant:
            return LocalZeros.everything()
        return LocalZeros(points=(0.0, 0.5, 1.0))

    def to_dict(self):
        return {
            "kind": "bump_ray",
            "params": {
                "radius": self.radius,
                "direction": self.direction.tolist(),
                "offset": self.offset.tolist(),
                "normalized": self.normalized,
            },
        }


@dataclass(frozen=True, eq=False)
class ConstantSegment(Segment):
    point: np.ndarray
    kind = "constant"

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))

    @property
    def dimension(self):
        return self.point.size

    def value(self, tau):
        t = _as_tau(tau)
        return np.broadcast_to(self.point, (t.size, self.dimension)).copy()

    def deriv(self, tau):
        return np.zeros((_as_tau(tau).size, self.dimension))

    def start(self):
        return self.point.copy()

    def end(self):
        return self.point.copy()

    @property
    def is_constant(self):
        return True

    def scaled(self, c):
        return ConstantSegment(self.point * c)

    def zeros_of_offset(self, point, tol):
        if np.array_equal(self.point, np.asarray(point, dtype=float)):
            return LocalZeros.everything()
        return LocalZeros()

    def stationary(self, tol):
        return LocalZeros.everything()

    def to_dict(self):
        return {"kind": "constant", "params": {"point": self.point.tolist()}}


@dataclass(frozen=True, eq=False)
class ComposedSegment(Segment):
    """``base(psi(tau))`` where ``psi`` applies ``maps`` left to right."""

    base: Segment
    maps: tuple
    kind = "composed"

    @property
    def dimension(self):
        return self.base.dimension

    def inner(self, tau):
        u = _as_tau(tau)
        for m in self.maps:
            u = m(u)
        return np.clip(u, 0.0, 1.0)

    def inner_deriv(self, tau):
        u = _as_tau(tau)
        d = np.ones_like(u)
        for m in self.maps:
            d = d * m.deriv(u)
            u = m(u)
        return d

    def value(self, tau):
        return self.base.value(self.inner(tau))

    def deriv(self, tau):
        return self.base.deriv(self.inner(tau)) * self.inner_deriv(tau)[:, None]

    @property
    def is_constant(self):
        return self.base.is_constant

    @property
    def affine_only(self) -> bool:
        return all(isinstance(m, AffineMap) for m in self.maps)

    def scaled(self, c):
        return ComposedSegment(self.base.scaled(c), self.maps)

    def _increasing(self) -> bool:
        a, b = self.inner(np.array([0.0, 1.0]))
        return b >= a

    def _pull_back_point(self, r: float) -> tuple[float, float] | None:
        """Parameters tau with psi(tau) = r, as a closed interval, or None."""
        inc = self._increasing()

        def key(t):
            v = float(self.inner(t)[0])
            return v if inc else -v

        target = r if inc else -r
        if key(0.0) > target or key(1.0) < target:
            return None
        lo_a, lo_b = 0.0, 1.0
        hi_a, hi_b = 0.0, 1.0
        if key(0.0) >= target:
            lo_b = 0.0
        if key(1.0) <= target:
            hi_a = 1.0
        for _ in range(200):
            changed = False
            if lo_b > lo_a:
                m = 0.5 * (lo_a + lo_b)
                if m in (lo_a, lo_b):
                    lo_a = lo_b
                elif key(m) >= target:
                    lo_b = m
                else:
                    lo_a = m
                changed = True
            if hi_b > hi_a:
                m = 0.5 * (hi_a + hi_b)
                if m in (hi_a, hi_b):
                    hi_b = hi_a
                elif key(m) <= target:
                    hi_a = m
                else:
                    hi_b = m
                changed = True
            if not changed:
                break
        return (lo_b, hi_a) if lo_b <= hi_a else (hi_a, lo_b)

    def _pull_back(self, z: LocalZeros) -> LocalZeros:
        intervals = []
        points = []
        for r in z.points:
            iv = self._pull_back_point(r)
            if iv is None:
                continue
            if iv[1] > iv[0]:
                intervals.append(iv)
            else:
                points.append(iv[0])
        for a, b in z.intervals:
            ia = self._pull_back_point(a) if a > 0.0 else None
            ib = self._pull_back_point(b) if b < 1.0 else None
            ends = [0.0, 1.0]
            vals = self.inner(np.array([0.0, 1.0]))
            lo, hi = min(vals), max(vals)
            if hi < a or lo > b:
                continue
            cand = []
            for iv in (ia, ib):
                if iv is not None:
                    cand.extend(iv)
            for e, v in zip(ends, vals):
                if a <= v <= b:
                    cand.append(e)
            if cand:
                lo_t, hi_t = min(cand), max(cand)
                if hi_t > lo_t:
                    intervals.append((lo_t, hi_t))
                else:
                    points.append(lo_t)
        return LocalZeros(tuple(sorted(intervals)), tuple(sorted(points)), exact=z.exact)

    def zeros_of_offset(self, point, tol):
        base = self.base.zeros_of_offset(point, tol)
        if not base.exact:
            return super().zeros_of_offset(point, tol)
        return self._pull_back(base)

    def stationary(self, tol):
        if self.affine_only and all(m.scale != 0.0 for m in self.maps):
            base = self.base.stationary(tol)
            if base.exact:
                return self._pull_back(base)
        return super().stationary(tol)

    def to_dict(self):
        return {
            "kind": "composed",
            "params": {"base": self.base.to_dict(), "maps": [m.to_dict() for m in self.maps]},
        }


# ---------------------------------------------------------------------------
# construction helpers


def compose(seg: Segment, maps: Sequence) -> Segment:
    """``seg`` precomposed with ``maps`` (applied left to right), simplified."""
    maps = list(maps)
    if isinstance(seg, ComposedSegment):
        maps = maps + list(seg.maps)
        seg = seg.base
    merged: list = []
    for m in maps:
        if isinstance(m, AffineMap) and merged and isinstance(merged[-1], AffineMap):
            merged[-1] = merged[-1].then(m)
        else:
            merged.append(m)
    merged = [m for m in merged if not (isinstance(m, AffineMap) and m.is_identity)]
    if not merged:
        return seg
    if isinstance(seg, ConstantSegment):
        return seg
    return ComposedSegment(seg, tuple(merged))


def reverse(seg: Segment) -> Segment:
    if isinstance(seg, (ConstantSegment,)):
        return seg
    return compose(seg, [AffineMap(1.0, -1.0)])


def restrict(seg: Segment, a: float, b: float) -> Segment:
    """``tau -> seg(a + (b - a) tau)``."""
    if a == 0.0 and b == 1.0:
        return seg
    return compose(seg, [AffineMap(a, b - a)])


def constant(point) -> ConstantSegment:
    return ConstantSegment(np.asarray(point, dtype=float))


def line(p, q) -> PolynomialSegment:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return PolynomialSegment(np.vstack([p, q - p]))


def segment_from_dict(d: dict) -> Segment:
    kind = d["kind"]
    p = d["params"]
    if kind == "polynomial":
        return PolynomialSegment(np.asarray(p["coeffs"], dtype=float))
    if kind == "trigonometric":
        return TrigSegment(
            np.asarray(p["offset"], dtype=float),
            np.asarray(p["freqs"], dtype=float),
            np.asarray(p["cos"], dtype=float),
            np.asarray(p["sin"], dtype=float),
        )
    if kind == "bump_ray":
        return BumpRaySegment(
            float(p["radius"]),
            np.asarray(p["direction"], dtype=float),
            np.asarray(p["offset"], dtype=float),
            bool(p.get("normalized", False)),
        )
    if kind == "constant":
        return ConstantSegment(np.asarray(p["point"], dtype=float))
    if kind == "composed":
        return ComposedSegment(segment_from_dict(p["base"]), tuple(map_from_dict(m) for m in p["maps"]))
    raise DomainError(f"unknown segment kind {kind!r}")


# ---------------------------------------------------------------------------
# numeric zero detection


def numeric_zeros(magnitude, tol: float, grid: int = 2049) -> LocalZeros:
    """Detect where a nonnegative function of tau in [0, 1] drops to ``tol``.

    Runs of grid samples below ``tol`` become intervals; isolated local
    minima are polished with a bounded scalar minimizer and kept when the
    polished value is below ``tol``.
    """
    from scipy.optimize import minimize_scalar

    t = np.linspace(0.0, 1.0, grid)
    v = magnitude(t)
    below = v <= tol
    intervals = []
    points = []
    k = 0
    while k < grid:
        if below[k]:
            j = k
            while j + 1 < grid and below[j + 1]:
                j += 1
            if j > k:
                intervals.append((float(t[k]), float(t[j])))
            else:
                points.append(float(t[k]))
            k = j + 1
        else:
            k += 1
    for k in range(grid):
        if below[k]:
            continue
        left = v[k - 1] if k > 0 else np.inf
        right = v[k + 1] if k < grid - 1 else np.inf
        if v[k] <= left and v[k] <= right:
            a = t[max(k - 1, 0)]
            b = t[min(k + 1, grid - 1)]
            res = minimize_scalar(
                lambda x: float(magnitude(np.array([x]))[0]),
                bounds=(a, b),
                method="bounded",
                options={"xatol": 1e-14},
            )
            if res.fun <= tol:
                points.append(float(res.x))
    return LocalZeros(tuple(intervals), tuple(sorted(points)), exact=False)
