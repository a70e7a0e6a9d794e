"""Equivalence machinery on top of loops, words and transport.

Contents: sampled hoop-equivalence, the thin-but-not-finitely-retraced
counterexample family, its retrazable approximations, analytic
factorization on a restricted class of loops, and restriction components.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import minimize_scalar
from scipy.spatial import cKDTree

from .errors import DivergenceError, DomainError, IncompatibleLoopsError, SpecError, UnsupportedLoopError
from .gauge import lie_algebra, random_connection
from .kernels import BUMP_PEAK
from .loopcore import (
    BumpRaySegment,
    Loop,
    Reparam,
    basepoint_preimage,
    constant,
    evaluate,
    reparametrize,
    restrict,
    reverse,
    scale_loop,
    slice_loop,
    sup_distance,
    trivial_loop,
    zero_derivative_set,
)
from .loopcore.io import dumps
from .loopcore.loop import PLANE
from .transport import TransportOptions, holonomy
from .words import MATCH_TOL, RetraceVerdict, is_retrace_trivial, match_paths

THREADS_ENV = "HOLONOMY_LAB_THREADS"


# ---------------------------------------------------------------------------
# counterexample family


@dataclass(frozen=True)
class CounterexampleSpec:
    """Radii and angles of the radial bumps placed on the dyadic windows.

    ``r_rule`` is ``("geometric", ratio)`` with ``r_n = ratio**n`` or
    ``("custom", values)``; ``theta_rule`` is ``("saturating", limit)`` with
    ``theta_n = limit * (1 - 2**-n)`` or ``("custom", values)``.  ``N`` is the
    truncation depth; ``None`` stands for the untruncated family.  With
    ``normalize_peak`` the bump on window ``n`` reaches distance exactly
    ``r_n`` from the origin, otherwise ``r_n * e^-4``.
    """

    r_rule: tuple = ("geometric", 0.5)
    theta_rule: tuple = ("saturating", math.pi)
    N: int | None = None
    normalize_peak: bool = True
    bounded_variation: bool = True

    def __post_init__(self):
        object.__setattr__(self, "r_rule", _freeze_rule(self.r_rule))
        object.__setattr__(self, "theta_rule", _freeze_rule(self.theta_rule))
        self.validate()

    def validate(self):
        kind, arg = self.r_rule
        if kind == "geometric":
            if not (0.0 < arg < 1.0):
                raise SpecError("geometric ratio must lie in (0, 1) so that r_n decreases to 0")
        elif kind == "custom":
            r = np.asarray(arg, dtype=float)
            if r.size == 0 or np.any(r <= 0) or np.any(np.diff(r) >= 0):
                raise SpecError("custom radii must be positive and strictly decreasing")
            if self.N is None:
                raise SpecError("a custom radius list only defines a truncated family")
        else:
            raise SpecError(f"unknown radius rule {kind!r}")
        kind, arg = self.theta_rule
        if kind == "saturating":
            if not (0.0 < arg < 2.0 * math.pi):
                raise SpecError("angle limit must lie in (0, 2*pi)")
        elif kind == "custom":
            th = np.asarray(arg, dtype=float)
            if th.size == 0 or np.any(np.diff(th) < 0) or th[0] < 0 or th[-1] >= 2.0 * math.pi:
                raise SpecError("custom angles must be non-decreasing in [0, 2*pi)")
            if self.N is None:
                raise SpecError("a custom angle list only defines a truncated family")
        else:
            raise SpecError(f"unknown angle rule {kind!r}")
        if self.N is not None:
            if int(self.N) != self.N or self.N < 1:
                raise SpecError("truncation depth N must be a positive integer")
            for kind, arg in (self.r_rule, self.theta_rule):
                if kind == "custom" and len(arg) < self.N:
                    raise SpecError("custom sequence shorter than the truncation depth")

    def radius(self, n: int) -> float:
        kind, arg = self.r_rule
        return float(arg**n) if kind == "geometric" else float(arg[n])

    def angle(self, n: int) -> float:
        kind, arg = self.theta_rule
        return float(arg * (1.0 - 2.0**-n)) if kind == "saturating" else float(arg[n])

    def peak(self, n: int) -> float:
        """Largest distance from the origin reached on window ``n``."""
        return self.radius(n) * (1.0 if self.normalize_peak else BUMP_PEAK)

    def truncated(self, N: int) -> "CounterexampleSpec":
        return CounterexampleSpec(self.r_rule, self.theta_rule, N, self.normalize_peak, self.bounded_variation)

    def to_dict(self) -> dict:
        return {
            "r_rule": {"type": self.r_rule[0], "value": _rule_value(self.r_rule[1])},
            "theta_rule": {"type": self.theta_rule[0], "value": _rule_value(self.theta_rule[1])},
            "N": self.N,
            "normalize_peak": self.normalize_peak,
            "bounded_variation": self.bounded_variation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CounterexampleSpec":
        return cls(
            (d["r_rule"]["type"], d["r_rule"]["value"]),
            (d["theta_rule"]["type"], d["theta_rule"]["value"]),
            d.get("N"),
            bool(d.get("normalize_peak", True)),
            bool(d.get("bounded_variation", True)),
        )


def _freeze_rule(rule):
    kind, arg = rule
    if isinstance(arg, (list, tuple, np.ndarray)):
        return (str(kind), tuple(float(x) for x in arg))
    return (str(kind), float(arg))


def _rule_value(arg):
    return list(arg) if isinstance(arg, tuple) else arg


def window(n: int) -> tuple[float, float]:
    """Dyadic parameter window ``[1 - 2^-n, 1 - 2^-(n+1)]``."""
    return 1.0 - 2.0**-n, 1.0 - 2.0 ** -(n + 1)


def build_counterexample(spec: CounterexampleSpec) -> Loop:
    """Radial out-and-back bumps on the first ``N`` windows, then rest at the origin."""
    if spec.N is None:
        raise UnsupportedLoopError("the untruncated family has infinitely many segments; choose N")
    N = int(spec.N)
    segs = [BumpRaySegment.polar(spec.radius(n), spec.angle(n), normalized=spec.normalize_peak) for n in range(N)]
    segs.append(constant(np.zeros(2)))
    bps = [window(n)[0] for n in range(N + 1)] + [1.0]
    return Loop(PLANE, tuple(bps), tuple(segs), f"counterexample(N={N})")


def limit_distance(spec: CounterexampleSpec, n: int) -> float:
    """``d(gamma, gamma_n) = sup{peak_k : k > n}`` for the family described by ``spec``."""
    if spec.N is not None and n + 1 >= spec.N:
        return 0.0
    return spec.peak(n + 1)


def certify(spec: CounterexampleSpec, **kw) -> RetraceVerdict:
    """Retrace certificate for a truncation; the untruncated family is inconclusive."""
    if spec.N is None:
        return RetraceVerdict(
            "inconclusive",
            note="untruncated family: infinitely many out-and-back windows accumulate at t = 1, "
            "so no finite concatenation of retrazable loops reparametrizes it",
        )
    return is_retrace_trivial(build_counterexample(spec), **kw)


def thin_contraction(gamma: Loop, s: float) -> Loop:
    """``(1 - s) * gamma``: a homotopy to the trivial loop inside the image of ``gamma``."""
    if not (0.0 <= s <= 1.0):
        raise DomainError("contraction parameter must lie in [0, 1]")
    if np.any(gamma.space.p):
        raise UnsupportedLoopError("linear contraction needs the basepoint at the origin")
    if s == 1.0:
        return trivial_loop(gamma.space)
    if s == 0.0:
        return gamma
    return scale_loop(gamma, 1.0 - s, gamma.label)


# ---------------------------------------------------------------------------
# I_gamma components


def _exact_components(gamma: Loop) -> list[tuple[float, float]]:
    """Complement components of ``I_gamma``; numeric sets are accepted only when they are finite."""
    I = basepoint_preimage(gamma)
    if not I.exact and I.intervals:
        raise UnsupportedLoopError("basepoint preimage is only numerically known; components cannot be enumerated")
    return I.complement_components()


def _pieces_on(gamma: Loop, a: float, b: float):
    """``(segment, start, end)`` cells of ``gamma`` restricted to ``[a, b]``, in global coordinates."""
    out = []
    t = gamma._t
    for i, seg in enumerate(gamma.segments):
        lo, hi = max(a, t[i]), min(b, t[i + 1])
        if hi <= lo:
            continue
        w = t[i + 1] - t[i]
        ta = 0.0 if lo == t[i] else (lo - t[i]) / w
        tb = 1.0 if hi == t[i + 1] else (hi - t[i]) / w
        out.append((restrict(seg, ta, tb), lo, hi))
    return out


def approx_sequence(gamma: Loop, n: int) -> Loop:
    """Keep ``gamma`` on the first ``n + 1`` components of ``[0,1] - I_gamma``; rest at p elsewhere.

    Breakpoints of the kept part are reused, so the result agrees with
    ``gamma`` bit for bit where it is kept.
    """
    if n < 0:
        raise DomainError("n must be non-negative")
    comps = _exact_components(gamma)[: n + 1]
    p = gamma.space.p
    segs, bps = [], [0.0]
    for a, b in comps:
        if a > bps[-1]:
            segs.append(constant(p))
            bps.append(a)
        for seg, lo, hi in _pieces_on(gamma, a, b):
            segs.append(seg)
            bps.append(hi)
    if bps[-1] < 1.0:
        segs.append(constant(p))
        bps.append(1.0)
    if not segs:
        return trivial_loop(gamma.space)
    return Loop(gamma.space, tuple(bps), tuple(segs), f"approx({gamma.label}, n={n})")


def restriction_components(gamma: Loop) -> list[Loop]:
    """Each restriction ``gamma|[a, b]`` to a component of ``[0,1] - I_gamma``, rescaled to [0, 1]."""
    I = basepoint_preimage(gamma)
    if I.intervals and not I.exact:
        raise UnsupportedLoopError("numeric basepoint preimage with intervals; components are ambiguous")
    out = []
    for a, b in I.complement_components():
        out.append(_component_loop(gamma, a, b))
    return out


def _component_loop(gamma: Loop, a: float, b: float) -> Loop:
    pieces = _pieces_on(gamma, a, b)
    bps = [0.0] + [(hi - a) / (b - a) for _, _, hi in pieces]
    bps[-1] = 1.0
    return Loop(gamma.space, tuple(bps), tuple(s for s, _, _ in pieces), gamma.label)


# ---------------------------------------------------------------------------
# hoop equivalence by sampling


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return min(8, os.cpu_count() or 1)
    n = int(raw)
    if n < 0:
        raise DomainError(f"{THREADS_ENV} must be >= 0")
    return n


def sample_seeds(seed: int, samples: int) -> list[int]:
    """Independent per-sample connection seeds derived from one master seed."""
    children = np.random.SeedSequence(int(seed)).spawn(samples)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


@dataclass(frozen=True)
class EquivVerdict:
    verdict: str
    witnesses: tuple  # (connection seed, deviation), largest deviation first
    samples: int
    tolerance: float
    max_deviation: float
    failed: tuple = ()
    algebra: str = "su2"
    degree: int = 2
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "witnesses": [[s, d] for s, d in self.witnesses],
            "samples": self.samples,
            "tolerance": self.tolerance,
            "max_deviation": self.max_deviation,
            "failed": list(self.failed),
            "algebra": self.algebra,
            "degree": self.degree,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EquivVerdict":
        return cls(
            d["verdict"],
            tuple((int(s), float(x)) for s, x in d["witnesses"]),
            int(d["samples"]),
            float(d["tolerance"]),
            float(d["max_deviation"]),
            tuple(int(s) for s in d.get("failed", ())),
            d.get("algebra", "su2"),
            int(d.get("degree", 2)),
            int(d.get("seed", 0)),
        )

    def above(self, threshold: float) -> int:
        return sum(1 for _, d in self.witnesses if d > threshold)


def hoop_equiv_test(
    gamma0: Loop,
    gamma1: Loop,
    algebra: str = "su2",
    degree: int = 2,
    samples: int = 100,
    seed: int = 0,
    tol: float = 1e-6,
    steps: int = 2048,
    scale: float = 1.0,
) -> EquivVerdict:
    """Compare holonomies of two loops under ``samples`` random polynomial connections.

    ``distinguished`` means some sampled connection separates the loops by
    more than ``tol``; ``equivalent_up_to_samples`` means none did.  Samples
    whose integration diverges are excluded and listed in ``failed``.
    """
    if gamma0.space != gamma1.space:
        raise IncompatibleLoopsError("loops must share the ambient space and basepoint")
    if samples < 1:
        raise DomainError("samples must be positive")
    if tol <= 0:
        raise DomainError("tol must be positive")
    alg = lie_algebra(algebra)
    opts = TransportOptions(steps_per_segment=steps, tolerance=min(1e-9, tol / 100.0))
    dim = gamma0.space.dimension

    def one(s: int):
        A = random_connection(s, alg, degree, scale, dim)
        try:
            H0 = holonomy(A, gamma0, opts).matrix
            H1 = holonomy(A, gamma1, opts).matrix
        except DivergenceError:
            return s, None
        return s, float(np.linalg.norm(H0 - H1))

    seeds = sample_seeds(seed, samples)
    workers = thread_count()
    if workers <= 1:
        results = [one(s) for s in seeds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, seeds))
    ok = [(s, d) for s, d in results if d is not None]
    failed = tuple(s for s, d in results if d is None)
    witnesses = tuple(sorted(ok, key=lambda w: (-w[1], w[0])))
    worst = witnesses[0][1] if witnesses else 0.0
    verdict = "distinguished" if worst > tol else "equivalent_up_to_samples"
    return EquivVerdict(verdict, witnesses, samples, tol, worst, failed, algebra, degree, int(seed))


# ---------------------------------------------------------------------------
# analytic factorization


@dataclass(frozen=True, eq=False)
class Factor:
    """One retrazable factor: ``gamma|[a, b] = (beta^-1 . beta) o theta`` after rescaling."""

    interval: tuple
    retrace: Loop
    theta: Reparam
    t_star: float

    def piece(self) -> Loop:
        return reparametrize(self.retrace, self.theta)


@dataclass(frozen=True, eq=False)
class Factorization:
    source: Loop
    factors: tuple

    def recompose(self) -> Loop:
        """Place each reparametrized retrazable factor back on its interval; rest at p elsewhere."""
        space = self.source.space
        segs, bps = [], [0.0]
        for f in self.factors:
            a, b = f.interval
            if a > bps[-1]:
                segs.append(constant(space.p))
                bps.append(a)
            loop = f.piece()
            for seg, t0, t1 in zip(loop.segments, loop.breakpoints, loop.breakpoints[1:]):
                segs.append(seg)
                bps.append(a + (b - a) * t1)
            bps[-1] = b
        if bps[-1] < 1.0:
            segs.append(constant(space.p))
            bps.append(1.0)
        if not segs:
            return trivial_loop(space)
        return Loop(space, tuple(bps), tuple(segs), f"recomposed({self.source.label})")

    def error(self, samples: int = 1000) -> float:
        return sup_distance(self.source, self.recompose(), samples)


def _coverage_index(X: np.ndarray, tol: float) -> int | None:
    """Smallest k with every sample within ``tol`` of ``X[:k+1]``."""

    def covered(k: int) -> bool:
        d, _ = cKDTree(X[: k + 1]).query(X, k=1)
        return bool(np.max(d) <= tol)

    n = len(X) - 1
    if not covered(n):
        return None
    lo, hi = 0, n
    while lo < hi:
        mid = (lo + hi) // 2
        if covered(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def _turn_candidates(gi: Loop) -> list[float]:
    J = zero_derivative_set(gi)
    c = [x for x in J.isolated_points if 0.0 < x < 1.0]
    c += [a for a, _ in J.intervals if 0.0 < a < 1.0]
    c += [x for x in gi.breakpoints[1:-1]]
    return sorted(set(c))


def _solve_rho(gi: Loop, t_star: float, t: np.ndarray) -> np.ndarray:
    """``rho(t)`` with ``beta(rho) = gi(t)`` on the return leg, ``beta(u) = gi(u t*)``."""
    X = evaluate(gi, t)
    grid = np.linspace(0.0, 1.0, 4097)
    B = evaluate(gi, grid * t_star)
    tree = cKDTree(B)
    _, idx = tree.query(X, k=1)
    rho = np.empty(len(t))
    h = grid[1]
    for k, (x, j) in enumerate(zip(X, idx)):
        lo, hi = max(grid[j] - 2 * h, 0.0), min(grid[j] + 2 * h, 1.0)
        res = minimize_scalar(
            lambda u: float(np.linalg.norm(evaluate(gi, u * t_star) - x)),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-14},
        )
        rho[k] = _polish(gi, t_star, res.x, x)
    rho[0], rho[-1] = 1.0, 0.0
    return np.minimum.accumulate(rho)


def _velocity(gi: Loop, t: float) -> np.ndarray:
    k, tau = gi.locate(np.array([t]))
    i = int(k[0])
    return gi.segments[i].deriv(tau)[0] / gi.widths[i]


def _polish(gi: Loop, t_star: float, u: float, x: np.ndarray, iters: int = 4) -> float:
    """Gauss-Newton steps on ``|beta(u) - x|^2``; keeps the best iterate."""
    best, best_r = u, float(np.linalg.norm(evaluate(gi, u * t_star) - x))
    for _ in range(iters):
        d = t_star * _velocity(gi, u * t_star)
        dd = float(d @ d)
        if dd == 0.0:
            break
        u = float(np.clip(u - (evaluate(gi, u * t_star) - x) @ d / dd, 0.0, 1.0))
        r = float(np.linalg.norm(evaluate(gi, u * t_star) - x))
        if r < best_r:
            best, best_r = u, r
    return best


def _retrace_of(gi: Loop, t_star: float) -> Loop:
    fwd = _pieces_on(gi, 0.0, t_star)
    segs = [s for s, _, _ in fwd] + [reverse(s) for s, _, _ in reversed(fwd)]
    half = [hi / (2.0 * t_star) for _, _, hi in fwd]
    half[-1] = 0.5
    back = [1.0 - (lo / (2.0 * t_star)) for _, lo, _ in reversed(fwd)]
    back[-1] = 1.0
    return Loop(gi.space, tuple([0.0] + half + back), tuple(segs), "retrace")


def _theta_for(gi: Loop, t_star: float, per_cell: int) -> Reparam:
    cuts = [t_star] + [x for x in gi.breakpoints if t_star < x < 1.0] + [1.0]
    knots = [0.0, t_star]
    pieces = [(0.0, 1.0 / (2.0 * t_star))]
    for a, b in zip(cuts, cuts[1:]):
        t = np.linspace(a, b, per_cell + 1)
        rho = _solve_rho(gi, t_star, np.concatenate([[t_star], t, [1.0]]))[1:-1]
        th = 1.0 - 0.5 * rho
        th = np.maximum.accumulate(th)
        if a == t_star:
            th[0] = 0.5
        if b == 1.0:
            th[-1] = 1.0
        pp = PchipInterpolator(t, th)
        for k in range(per_cell):
            pieces.append(tuple(float(c) for c in pp.c[::-1, k]))
            knots.append(float(t[k + 1]))
    knots[-1] = 1.0
    return Reparam.polynomial(knots, pieces)


def _factor_component(gi: Loop, interval, tol: float, per_cell: int, cover_samples: int) -> Factor:
    u = np.unique(np.concatenate([np.linspace(0.0, 1.0, cover_samples + 1), gi.breakpoints]))
    X = evaluate(gi, u)
    spacing = float(np.max(np.linalg.norm(np.diff(X, axis=0), axis=1)))
    k = _coverage_index(X, 2.0 * spacing + 1e-12)
    if k is None or u[k] >= 1.0:
        raise UnsupportedLoopError("image coverage never completes before the end of the component")
    t_bis = float(u[k])
    slack = 2.0 / cover_samples
    for c in _turn_candidates(gi):
        if c < t_bis - slack:
            continue
        beta = lambda s, c=c: evaluate(gi, s * c)
        back = lambda s, c=c: evaluate(gi, 1.0 - s * (1.0 - c))
        if match_paths(beta, back, tol):
            t_star = c
            break
    else:
        raise UnsupportedLoopError("no turning point after the coverage parameter retraces the outgoing leg")
    retrace = _retrace_of(gi, t_star)
    theta = _theta_for(gi, t_star, per_cell)
    return Factor(tuple(interval), retrace, theta, t_star)


def analytic_factorize(
    gamma: Loop,
    tol: float = MATCH_TOL,
    recompose_tol: float = 1e-8,
    per_cell: int = 256,
    cover_samples: int = 4096,
) -> Factorization:
    """Write ``gamma`` as a concatenation of reparametrized retrazable loops, or refuse.

    ``gamma`` is split at the points of ``I_gamma``; on each piece the first
    parameter ``t*`` whose initial arc already covers the whole image is
    located, the return leg is checked to retrace the outgoing one, and the
    reparametrization ``theta`` with ``piece = (beta^-1 . beta) o theta`` is
    built.  Refuses with :class:`UnsupportedLoopError` whenever a step fails,
    including when the recomposition misses ``gamma`` by more than
    ``recompose_tol``.
    """
    comps = _exact_components(gamma)
    if not comps:
        raise UnsupportedLoopError("loop never leaves the basepoint")
    factors = []
    for a, b in comps:
        gi = _component_loop(gamma, a, b)
        factors.append(_factor_component(gi, (a, b), tol, per_cell, cover_samples))
    fz = Factorization(gamma, tuple(factors))
    err = fz.error()
    if not err <= recompose_tol:
        raise UnsupportedLoopError(f"recomposition misses the loop by {err:.3e}")
    return fz


# ---------------------------------------------------------------------------
# class-closure demonstration


@dataclass(frozen=True)
class ClosureStep:
    n: int
    distance: float
    verdict: str
    cancellations: int


def closure_demo(spec: CounterexampleSpec, depth: int, ns: Sequence[int]) -> list[ClosureStep]:
    """Distances from a deep truncation to its approximations, each with its retrace verdict."""
    gamma = build_counterexample(spec.truncated(depth))
    out = []
    for n in ns:
        gn = approx_sequence(gamma, n)
        v = is_retrace_trivial(gn)
        out.append(ClosureStep(n, sup_distance(gamma, gn), v.verdict, v.n_cancellations))
    return out


def spec_to_json(spec: CounterexampleSpec) -> str:
    return dumps(spec.to_dict())


def verdict_to_json(v: EquivVerdict) -> str:
    return dumps(v.to_dict())
