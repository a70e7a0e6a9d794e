"""Holonomy as the path-ordered exponential of ``-A`` along a loop.

Convention: along a smooth piece ``s`` we solve

    U'(tau) = -(sum_j A_j(s(tau)) s_j'(tau)) U(tau),   U(0) = I,

and take ``U(1)``.  For a piecewise path the pieces multiply in order with
later pieces on the left, so ``Hol(g2 . g1) = Hol(g2) Hol(g1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DivergenceError, DomainError
from .gauge import GroupElement, LieAlgebra, algebra_exp, det_residual, membership_residual, project
from .loopcore import Loop, Segment

CONVENTION = (
    "convention: U' = -(A_j(x) dx_j/dt) U, U(0) = I, Hol = U(1); "
    "Hol(g2.g1) = Hol(g2) Hol(g1) (later segments multiply on the left)"
)
METHODS = ("rk4_projected", "lie_euler")
_ORDER = {"rk4_projected": 4, "lie_euler": 1}
_PROJECT_TOL = 1e-14


@dataclass(frozen=True)
class TransportOptions:
    steps_per_segment: int = 2048
    method: str = "rk4_projected"
    tolerance: float = 1e-9
    richardson: bool = True
    max_steps: int = 65536

    def __post_init__(self):
        if self.steps_per_segment < 8:
            raise DomainError("steps_per_segment must be at least 8")
        if self.tolerance <= 0:
            raise DomainError("tolerance must be positive")
        if self.max_steps < self.steps_per_segment:
            raise DomainError("max_steps must be at least steps_per_segment")
        if self.method not in METHODS:
            raise DomainError(f"unknown method {self.method!r}")


@dataclass(frozen=True, eq=False)
class HolonomyResult:
    element: GroupElement
    error_estimate: float
    steps_used: int

    @property
    def matrix(self) -> np.ndarray:
        return self.element.matrix


def _generator(A, seg: Segment, tau: np.ndarray) -> np.ndarray:
    """``-sum_j A_j(s(tau)) s_j'(tau)`` at each tau, shape ``(P, m, m)``."""
    return -A.contract(seg.value(tau), seg.deriv(tau))


def _project_batch(U: np.ndarray, algebra: LieAlgebra) -> np.ndarray:
    m = U.shape[-1]
    if algebra.unitary:
        res = np.max(np.abs(U.conj().swapaxes(-1, -2) @ U - np.eye(m)), axis=(-1, -2))
    else:
        res = np.zeros(U.shape[0])
    if algebra.special:
        res = np.maximum(res, det_residual(U))
    bad = res > _PROJECT_TOL
    if np.any(bad):
        U = U.copy()
        U[bad] = project(U[bad], algebra)
    return U


def _ordered_product(P: np.ndarray, algebra: LieAlgebra) -> np.ndarray:
    """``P[n-1] @ ... @ P[1] @ P[0]`` by pairwise reduction, re-projecting each level."""
    while P.shape[0] > 1:
        if P.shape[0] % 2:
            tail = P[-1:]
            P = P[:-1]
        else:
            tail = None
        P = P[1::2] @ P[0::2]
        P = _project_batch(P, algebra)
        if tail is not None:
            P = np.concatenate([P, tail])
    return P[0]


def _integrate(A, seg: Segment, steps: int, method: str) -> np.ndarray:
    algebra = A.algebra
    m = algebra.matrix_size
    if seg.is_constant:
        return np.eye(m, dtype=complex)
    h = 1.0 / steps
    eye = np.eye(m, dtype=complex)
    # overflow shows up as non-finite entries, reported below
    with np.errstate(over="ignore", invalid="ignore"):
        if method == "rk4_projected":
            tau = np.linspace(0.0, 1.0, 2 * steps + 1)
            M = _generator(A, seg, tau)
            M0, Mh, M1 = M[0:-1:2], M[1::2], M[2::2]
            K1 = M0
            K2 = Mh @ (eye + 0.5 * h * K1)
            K3 = Mh @ (eye + 0.5 * h * K2)
            K4 = M1 @ (eye + h * K3)
            P = eye + (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4)
        else:
            tau = np.arange(steps) * h
            P = algebra_exp(h * _generator(A, seg, tau))
    if not np.all(np.isfinite(P)):
        raise DivergenceError("non-finite step propagator during transport")
    P = _project_batch(P, algebra)
    U = _ordered_product(P, algebra)
    if not np.all(np.isfinite(U)):
        raise DivergenceError("non-finite holonomy")
    return U


def holonomy_segment(A, seg: Segment, opts: TransportOptions | None = None) -> HolonomyResult:
    """Transport along one segment.

    With ``richardson`` the step count doubles until the Richardson estimate
    ``|U_n - U_{n/2}| / (2^p - 1)`` drops below ``tolerance * max(1, |U|_2)``
    or ``max_steps`` is reached.
    """
    opts = opts or TransportOptions()
    n = opts.steps_per_segment
    U = _integrate(A, seg, n, opts.method)
    err = 0.0
    used = n
    if opts.richardson and not seg.is_constant:
        coarse = _integrate(A, seg, n // 2, opts.method)
        used += n // 2
        while True:
            err = float(np.linalg.norm(U - coarse)) / (2 ** _ORDER[opts.method] - 1)
            # relative to |U|_2, which is 1 for unitary groups
            if err <= opts.tolerance * max(1.0, float(np.linalg.norm(U, 2))) or 2 * n > opts.max_steps:
                break
            n *= 2
            coarse, U = U, _integrate(A, seg, n, opts.method)
            used += n
    return HolonomyResult(GroupElement(U, A.algebra), err, used)


def holonomy(A, gamma: Loop, opts: TransportOptions | None = None) -> HolonomyResult:
    """Ordered product of segment holonomies, later segments on the left."""
    opts = opts or TransportOptions()
    m = A.algebra.matrix_size
    U = np.eye(m, dtype=complex)
    err = 0.0
    used = 0
    for seg in gamma.segments:
        r = holonomy_segment(A, seg, opts)
        U = r.matrix @ U
        err += r.error_estimate
        used += r.steps_used
    if membership_residual(U, A.algebra) > _PROJECT_TOL:
        U = project(U, A.algebra)
    return HolonomyResult(GroupElement(U, A.algebra), err, used)


def holonomy_matrix(A, gamma: Loop, opts: TransportOptions | None = None) -> np.ndarray:
    return holonomy(A, gamma, opts).matrix


def holonomy_of_segments(A, segments: Sequence[Segment], opts: TransportOptions | None = None) -> np.ndarray:
    """Holonomy along a chain of path segments (first segment first)."""
    opts = opts or TransportOptions()
    U = np.eye(A.algebra.matrix_size, dtype=complex)
    for seg in segments:
        U = holonomy_segment(A, seg, opts).matrix @ U
    return U


# ---------------------------------------------------------------------------
# convergence diagnostics


def fitted_order(h: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of ``log(error)`` against ``log(h)``."""
    h = np.asarray(h, dtype=float)
    e = np.asarray(errors, dtype=float)
    slope, _ = np.polyfit(np.log(h), np.log(e), 1)
    return float(slope)


@dataclass(frozen=True)
class ProbeResult:
    steps: tuple
    errors: tuple
    order: float | None
    exact: bool = False


def convergence_order_probe(
    A, gamma: Loop, step_ladder: Sequence[int], method: str = "rk4_projected"
) -> ProbeResult:
    """Fit the observed order of the integrator against its own finest rung."""
    ladder = [int(s) for s in step_ladder]
    if len(ladder) < 3 or any(b != 2 * a for a, b in zip(ladder, ladder[1:])):
        raise DomainError("step ladder needs at least 3 rungs, each doubling the previous")
    results = [
        holonomy(A, gamma, TransportOptions(steps_per_segment=s, method=method, richardson=False)).matrix
        for s in ladder
    ]
    finest = results[-1]
    errors = [float(np.linalg.norm(U - finest)) for U in results[:-1]]
    if all(e == 0.0 for e in errors):
        return ProbeResult(tuple(ladder), tuple(errors), None, exact=True)
    if any(e == 0.0 for e in errors):
        raise DivergenceError("degenerate error ladder; cannot fit an order")
    order = fitted_order([1.0 / s for s in ladder[:-1]], errors)
    return ProbeResult(tuple(ladder), tuple(errors), order)


def square_loop(side: float):
    """Counter-clockwise axis-aligned square of the given side, based at the origin."""
    from .loopcore import polygon_loop

    return polygon_loop([(side, 0.0), (side, side), (0.0, side)], label=f"square({side})")


@dataclass(frozen=True)
class CurvatureLawResult:
    eps: tuple
    errors: tuple
    order: float


def curvature_law_probe(A, eps_values: Sequence[float] = (0.1, 0.05, 0.025), opts=None) -> CurvatureLawResult:
    """Compare ``Hol(eps-square)`` with ``exp(-eps^2 F(0))`` as eps shrinks."""
    from .gauge import curvature

    F0 = curvature(A, np.zeros(A.dim), 0, 1)
    errors = []
    for eps in eps_values:
        U = holonomy(A, square_loop(eps), opts).matrix
        errors.append(float(np.linalg.norm(U - algebra_exp(-(eps**2) * F0))))
    return CurvatureLawResult(tuple(eps_values), tuple(errors), fitted_order(eps_values, errors))


@dataclass(frozen=True)
class FamilyContinuity:
    s: tuple
    increments: tuple
    lipschitz: float


def family_continuity(A, family, s_values: Sequence[float], opts=None) -> FamilyContinuity:
    """Adjacent increments of ``s -> Hol(family(s))`` and the smallest L with |dHol| <= L ds."""
    s = np.asarray(s_values, dtype=float)
    H = [holonomy(A, family(float(x)), opts).matrix for x in s]
    inc = [float(np.linalg.norm(b - a)) for a, b in zip(H, H[1:])]
    ratios = [d / (b - a) for d, a, b in zip(inc, s, s[1:]) if b > a]
    return FamilyContinuity(tuple(s.tolist()), tuple(inc), float(max(ratios)) if ratios else 0.0)


def format_report(result: HolonomyResult, seed=None, label: str = "") -> str:
    """Text report: matrix entries to 17 significant digits, error estimate, steps, convention."""
    lines = [CONVENTION]
    if label:
        lines.append(f"loop: {label}")
    lines.append(f"seed: {seed}")
    lines.append(f"algebra: {result.element.algebra.name}")
    M = result.matrix
    for i in range(M.shape[0]):
        row = "  ".join(f"{z.real:+.16e}{z.imag:+.16e}j" for z in M[i])
        lines.append(f"Hol[{i}] = {row}")
    lines.append(f"error_estimate: {result.error_estimate:.6e}")
    lines.append(f"steps_used: {result.steps_used}")
    lines.append(f"group_residual: {result.element.residual():.3e}")
    return "\n".join(lines) + "\n"
