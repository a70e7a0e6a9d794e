"""Matrix Lie algebras, polynomial connection 1-forms and their curvature.

A connection on R^n is stored as real coefficients ``c[j, m, a]``: axis ``j``,
monomial ``m`` (an exponent tuple), generator ``a``.  Its value at ``x`` is
``A_j(x) = sum_{m,a} c[j,m,a] x^m T_a``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg

from .errors import DomainError, SingularityError

BRACKET_TOL = 1e-12
MEMBERSHIP_TOL = 1e-8

_SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True, eq=False)
class LieAlgebra:
    name: str
    generators: np.ndarray
    structure_constants: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        gens = np.asarray(self.generators, dtype=complex)
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "structure_constants", self._structure())

    @property
    def dimension(self) -> int:
        return self.generators.shape[0]

    @property
    def matrix_size(self) -> int:
        return self.generators.shape[1]

    @property
    def unitary(self) -> bool:
        return self.name in ("u1", "su2")

    @property
    def special(self) -> bool:
        return self.name in ("su2", "sl2r")

    def element(self, coeffs) -> np.ndarray:
        """Matrix ``sum_a coeffs[..., a] T_a``."""
        return np.tensordot(np.asarray(coeffs, dtype=float), self.generators, axes=([-1], [0]))

    def coordinates(self, X) -> np.ndarray:
        basis = self.generators.reshape(self.dimension, -1).T
        c, *_ = np.linalg.lstsq(basis, np.asarray(X, dtype=complex).ravel(), rcond=None)
        return c.real

    def _structure(self) -> np.ndarray:
        d = self.generators.shape[0]
        basis = self.generators.reshape(d, -1).T
        f = np.zeros((d, d, d))
        for a, b in itertools.product(range(d), repeat=2):
            br = bracket(self.generators[a], self.generators[b])
            c, *_ = np.linalg.lstsq(basis, br.ravel(), rcond=None)
            f[a, b] = c.real
        return f

    def closure_residual(self) -> float:
        """Largest ``|[T_a, T_b] - f_ab^c T_c|`` over generator pairs."""
        worst = 0.0
        for a, b in itertools.product(range(self.dimension), repeat=2):
            br = bracket(self.generators[a], self.generators[b])
            worst = max(worst, float(np.max(np.abs(br - self.element(self.structure_constants[a, b])))))
        return worst


def bracket(X, Y):
    return X @ Y - Y @ X


@lru_cache(maxsize=None)
def lie_algebra(name: str) -> LieAlgebra:
    if name == "u1":
        return LieAlgebra("u1", np.array([[[1j]]]))
    if name == "su2":
        return LieAlgebra("su2", np.array([1j * s / 2 for s in _SIGMA]))
    if name == "sl2r":
        H = np.array([[1, 0], [0, -1]], dtype=complex)
        E = np.array([[0, 1], [0, 0]], dtype=complex)
        F = np.array([[0, 0], [1, 0]], dtype=complex)
        return LieAlgebra("sl2r", np.array([H, E, F]))
    raise DomainError(f"unknown Lie algebra {name!r}; choose u1, su2 or sl2r")


ALGEBRAS = ("u1", "su2", "sl2r")


@dataclass(frozen=True, eq=False)
class GroupElement:
    matrix: np.ndarray
    algebra: LieAlgebra

    def residual(self) -> float:
        return membership_residual(self.matrix, self.algebra)

    def inverse(self) -> "GroupElement":
        return GroupElement(np.linalg.inv(self.matrix), self.algebra)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.matrix @ other.matrix, self.algebra)


def membership_residual(U, algebra: LieAlgebra) -> float:
    U = np.asarray(U)
    m = U.shape[-1]
    r = 0.0
    if algebra.unitary:
        r = max(r, float(np.max(np.abs(U.conj().swapaxes(-1, -2) @ U - np.eye(m)))))
    if algebra.special:
        r = max(r, float(np.max(det_residual(U))))
    return r


def det_residual(U) -> np.ndarray:
    """``|det U - 1|`` relative to the rounding scale ``max(1, |U|_F^2 / m)`` of the determinant."""
    U = np.asarray(U)
    m = U.shape[-1]
    scale = np.maximum(1.0, np.sum(np.abs(U) ** 2, axis=(-1, -2)) / m)
    return np.abs(np.linalg.det(U) - 1.0) / scale


def project(U: np.ndarray, algebra: LieAlgebra) -> np.ndarray:
    """Nearest group element: polar factor for unitary groups, det renormalization for SL."""
    U = np.asarray(U)
    m = U.shape[-1]
    if algebra.unitary:
        W, _, Vh = np.linalg.svd(U)
        U = W @ Vh
    if algebra.special:
        det = np.asarray(np.linalg.det(U), dtype=complex)
        # a determinant lost to cancellation carries no information; leave those alone
        ok = np.isfinite(det) & (np.abs(det) > 0.5) & (np.abs(det) < 2.0)
        root = np.ones_like(det)
        root[ok] = np.exp(np.log(det[ok]) / m)
        U = U / root[..., None, None]
    if algebra.name == "sl2r":
        U = U.real.astype(complex)
    return U


def algebra_exp(X, algebra: LieAlgebra | None = None) -> GroupElement | np.ndarray:
    """Matrix exponential (scaling and squaring Pade, via scipy)."""
    X = np.asarray(X, dtype=complex)
    E = scipy.linalg.expm(X)
    return E if algebra is None else GroupElement(E, algebra)


# ---------------------------------------------------------------------------
# connections


def monomials(dim: int, degree: int) -> tuple[tuple[int, ...], ...]:
    """Exponent tuples of total degree <= degree, graded then lexicographic."""
    out = []
    for total in range(degree + 1):
        for exps in itertools.product(range(total + 1), repeat=dim):
            if sum(exps) == total:
                out.append(exps)
    return tuple(sorted(out, key=lambda e: (sum(e), tuple(-x for x in e))))


@dataclass(frozen=True, eq=False)
class Connection:
    """Polynomial Lie-algebra-valued 1-form on R^dim."""

    algebra: LieAlgebra
    dim: int
    degree: int
    coeffs: np.ndarray  # (dim, n_monomials, algebra.dimension)
    label: str = ""
    seed: int | None = None
    polynomial: bool = True
    exponents: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.degree < 0:
            raise DomainError("degree must be nonnegative")
        exps = monomials(self.dim, self.degree)
        object.__setattr__(self, "exponents", exps)
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.dim, len(exps), self.algebra.dimension):
            raise DomainError(f"coefficient block has shape {c.shape}, expected {(self.dim, len(exps), self.algebra.dimension)}")
        if not np.all(np.isfinite(c)):
            raise DomainError("connection coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    def _monomial_values(self, x: np.ndarray) -> np.ndarray:
        # (P, n_mono)
        E = np.asarray(self.exponents)
        return np.prod(x[:, None, :] ** E[None, :, :], axis=2)

    def component_coords(self, x) -> np.ndarray:
        """Algebra coordinates of every component, shape ``(P, dim, algebra.dimension)``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.einsum("pm,jma->pja", self._monomial_values(x), self.coeffs)

    def evaluate(self, x) -> np.ndarray:
        """Matrices ``A_j(x)``, shape ``(P, dim, m, m)``."""
        return self.algebra.element(self.component_coords(x))

    def contract(self, x, v) -> np.ndarray:
        """``sum_j A_j(x) v_j`` for paired rows of points and vectors, shape ``(P, m, m)``."""
        coords = self.component_coords(x)
        return self.algebra.element(np.einsum("pja,pj->pa", coords, np.atleast_2d(v)))

    def derivative_coeffs(self, axis: int) -> np.ndarray:
        """Coefficients of ``d/dx_axis A_j`` expressed on the same monomial list."""
        index = {e: k for k, e in enumerate(self.exponents)}
        out = np.zeros_like(self.coeffs)
        for k, e in enumerate(self.exponents):
            if e[axis] == 0:
                continue
            lowered = list(e)
            lowered[axis] -= 1
            out[:, index[tuple(lowered)], :] += e[axis] * self.coeffs[:, k, :]
        return out

    def to_dict(self) -> dict:
        comps = []
        for j in range(self.dim):
            comps.append(
                [
                    {"exponent": list(e), "coefficients": self.coeffs[j, k].tolist()}
                    for k, e in enumerate(self.exponents)
                    if np.any(self.coeffs[j, k])
                ]
            )
        return {
            "algebra": self.algebra.name,
            "dim": self.dim,
            "degree": self.degree,
            "components": comps,
            "seed": self.seed,
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Connection":
        if d.get("kind") == "flat_puncture":
            return flat_puncture_connection(float(d["alpha"]))
        alg = lie_algebra(d["algebra"])
        dim, degree = int(d["dim"]), int(d["degree"])
        exps = monomials(dim, degree)
        index = {e: k for k, e in enumerate(exps)}
        c = np.zeros((dim, len(exps), alg.dimension))
        for j, comp in enumerate(d["components"]):
            for term in comp:
                e = tuple(int(v) for v in term["exponent"])
                if e not in index:
                    raise DomainError(f"monomial {e} exceeds declared degree {degree}")
                c[j, index[e]] = term["coefficients"]
        return cls(alg, dim, degree, c, d.get("label", ""), d.get("seed"))


def connection_eval(A, x) -> np.ndarray:
    """List of component matrices ``A_j(x)`` at a single point."""
    return A.evaluate(np.asarray(x, dtype=float)[None, :])[0]


def curvature(A: Connection, x, i: int, j: int) -> np.ndarray:
    """``F_ij = d_i A_j - d_j A_i + [A_i, A_j]`` at ``x``, from exact polynomial derivatives."""
    if i == j:
        raise DomainError("curvature needs two distinct axes")
    if not getattr(A, "polynomial", False):
        return A.curvature(x, i, j)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    mono = A._monomial_values(x)
    di = A.algebra.element(np.einsum("pm,ma->pa", mono, A.derivative_coeffs(i)[j]))
    dj = A.algebra.element(np.einsum("pm,ma->pa", mono, A.derivative_coeffs(j)[i]))
    vals = A.evaluate(x)
    F = di - dj + bracket(vals[:, i], vals[:, j])
    return F[0] if F.shape[0] == 1 else F


def zero_connection(algebra: LieAlgebra, dim: int = 2) -> Connection:
    return Connection(algebra, dim, 0, np.zeros((dim, 1, algebra.dimension)), "zero")


def constant_connection(algebra: LieAlgebra, components) -> Connection:
    """``sum_j C_j dx_j`` with ``components[j]`` given in algebra coordinates."""
    c = np.asarray(components, dtype=float)
    return Connection(algebra, c.shape[0], 0, c[:, None, :], "constant")


def magnetic_connection(B: float = 1.0) -> Connection:
    """U(1) field of uniform strength B: ``A = i (B/2)(-y dx + x dy)``."""
    alg = lie_algebra("u1")
    exps = monomials(2, 1)  # (0,0), (1,0), (0,1)
    c = np.zeros((2, len(exps), 1))
    c[0, exps.index((0, 1)), 0] = -B / 2.0
    c[1, exps.index((1, 0)), 0] = B / 2.0
    return Connection(alg, 2, 1, c, f"u1_magnetic(B={B})")


def random_connection(
    seed: int, algebra: LieAlgebra, degree: int, scale: float = 1.0, dim: int = 2
) -> Connection:
    """Coefficients i.i.d. N(0, scale^2); a fixed seed gives a bit-identical connection."""
    if degree < 0 or scale < 0:
        raise DomainError("degree must be >= 0 and scale >= 0")
    rng = np.random.default_rng(seed)
    n_mono = len(monomials(dim, degree))
    c = rng.normal(0.0, 1.0, size=(dim, n_mono, algebra.dimension)) * scale
    return Connection(algebra, dim, degree, c, f"random(seed={seed})", seed)


@dataclass(frozen=True, eq=False)
class PunctureConnection:
    """Flat U(1) connection ``i alpha (x dy - y dx) / (x^2 + y^2)`` on the punctured plane.

    Rational rather than polynomial; evaluation inside ``exclusion`` of the
    origin raises.
    """

    alpha: float
    exclusion: float = 0.05
    algebra: LieAlgebra = field(default_factory=lambda: lie_algebra("u1"))
    dim: int = 2
    polynomial: bool = False
    label: str = "flat_puncture"
    seed: int | None = None

    def component_coords(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r2 = np.sum(x * x, axis=1)
        if np.any(r2 < self.exclusion**2):
            raise SingularityError(f"puncture connection evaluated within {self.exclusion} of the origin")
        out = np.empty((x.shape[0], 2, 1))
        out[:, 0, 0] = -self.alpha * x[:, 1] / r2
        out[:, 1, 0] = self.alpha * x[:, 0] / r2
        return out

    def evaluate(self, x) -> np.ndarray:
        return self.algebra.element(self.component_coords(x))

    def contract(self, x, v) -> np.ndarray:
        coords = self.component_coords(x)
        return self.algebra.element(np.einsum("pja,pj->pa", coords, np.atleast_2d(v)))

    def curvature(self, x, i, j) -> np.ndarray:
        # d_x(alpha x / r^2) - d_y(-alpha y / r^2) = alpha (2 r^2 - 2 x^2 - 2 y^2) / r^4
        x = np.asarray(x, dtype=float)
        self.component_coords(x)
        r2 = float(x @ x)
        val = self.alpha * (2.0 * r2 - 2.0 * x[0] ** 2 - 2.0 * x[1] ** 2) / r2**2
        sign = 1.0 if (i, j) == (0, 1) else -1.0
        return self.algebra.element([sign * val])

    def to_dict(self) -> dict:
        return {"kind": "flat_puncture", "algebra": "u1", "alpha": self.alpha, "label": self.label}


def flat_puncture_connection(alpha: float) -> PunctureConnection:
    return PunctureConnection(float(alpha))


def connection_to_json(A) -> str:
    return json.dumps(A.to_dict(), indent=2, allow_nan=False) + "\n"


def connection_from_json(text: str):
    return Connection.from_dict(json.loads(text))


def read_connection(path):
    with open(path, encoding="utf-8") as fh:
        return connection_from_json(fh.read())
