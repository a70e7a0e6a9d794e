"""Generalized reparametrizations and the affine maps used for bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import DomainError, InvalidReparamError
from ..kernels import smooth_step, smooth_step_deriv

KINDS = ("affine", "smooth_monotone", "sitting")


@dataclass(frozen=True)
class AffineMap:
    """``tau -> shift + scale * tau``."""

    shift: float
    scale: float

    def __call__(self, tau):
        return self.shift + self.scale * np.asarray(tau, dtype=float)

    def deriv(self, tau):
        return np.full(np.shape(tau), self.scale, dtype=float)

    def then(self, other: "AffineMap") -> "AffineMap":
        """The map ``other(self(tau))``."""
        return AffineMap(other.shift + other.scale * self.shift, other.scale * self.scale)

    @property
    def is_identity(self) -> bool:
        return self.shift == 0.0 and self.scale == 1.0

    @property
    def is_monotone(self) -> bool:
        return True

    @property
    def increasing(self) -> bool:
        return self.scale >= 0.0

    def to_dict(self) -> dict:
        return {"type": "affine_map", "shift": self.shift, "scale": self.scale}


@dataclass(frozen=True, eq=False)
class Reparam:
    """Monotone non-decreasing, piecewise-smooth ``phi: [0,1] -> [0,1]`` fixing 0 and 1.

    ``affine``
        piecewise linear through ``(knots[k], values[k])``.
    ``smooth_monotone``
        piecewise polynomial; ``pieces[k]`` holds ascending coefficients in
        the local variable ``t - knots[k]``.
    ``sitting``
        constant 0 on ``[0, eps]``, constant 1 on ``[1-eps, 1]``, bump-kernel
        smooth step in between.
    """

    kind: str
    knots: tuple = ()
    values: tuple = ()
    pieces: tuple = ()
    epsilon: float | None = None
    _knots: np.ndarray = field(init=False, repr=False)
    _table: np.ndarray | None = field(init=False, repr=False, default=None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidReparamError(f"unknown reparametrization kind {self.kind!r}")
        if self.kind == "sitting":
            eps = self.epsilon
            if eps is None or not (0.0 < eps < 0.5):
                raise DomainError(f"sitting epsilon must lie in (0, 1/2), got {eps}")
            knots = (0.0, float(eps), 1.0 - float(eps), 1.0)
        else:
            knots = tuple(float(k) for k in self.knots)
        object.__setattr__(self, "_knots", np.asarray(knots, dtype=float))
        if self.kind == "smooth_monotone" and self.pieces:
            width = max(len(p) for p in self.pieces)
            table = np.zeros((len(self.pieces), width))
            for i, p in enumerate(self.pieces):
                table[i, : len(p)] = p
            object.__setattr__(self, "_table", table)
        self._validate()

    # construction helpers -------------------------------------------------
    @classmethod
    def identity(cls) -> "Reparam":
        return cls("affine", knots=(0.0, 1.0), values=(0.0, 1.0))

    @classmethod
    def piecewise_affine(cls, knots: Sequence[float], values: Sequence[float]) -> "Reparam":
        return cls("affine", knots=tuple(map(float, knots)), values=tuple(map(float, values)))

    @classmethod
    def power(cls, exponent: int) -> "Reparam":
        coeffs = [0.0] * exponent + [1.0]
        return cls("smooth_monotone", knots=(0.0, 1.0), pieces=(tuple(coeffs),))

    @classmethod
    def polynomial(cls, knots: Sequence[float], pieces: Sequence[Sequence[float]]) -> "Reparam":
        return cls(
            "smooth_monotone",
            knots=tuple(map(float, knots)),
            pieces=tuple(tuple(map(float, p)) for p in pieces),
        )

    @classmethod
    def monotone_interpolant(cls, x: Sequence[float], y: Sequence[float]) -> "Reparam":
        """Shape-preserving cubic through monotone data (PCHIP)."""
        from scipy.interpolate import PchipInterpolator

        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        pp = PchipInterpolator(x, y)
        # PPoly stores descending powers in (x - x_k)
        pieces = [tuple(float(c) for c in pp.c[::-1, k]) for k in range(pp.c.shape[1])]
        return cls("smooth_monotone", knots=tuple(map(float, x)), pieces=tuple(pieces))

    @classmethod
    def sitting(cls, epsilon: float) -> "Reparam":
        return cls("sitting", epsilon=float(epsilon))

    # evaluation ------------------------------------------------------------
    @property
    def breakpoints(self) -> np.ndarray:
        return self._knots

    def _piece_index(self, t):
        k = np.searchsorted(self._knots, t, side="right") - 1
        return np.clip(k, 0, len(self._knots) - 2)

    def __call__(self, t):
        t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
        if self.kind == "affine":
            return np.interp(t, self._knots, np.asarray(self.values, dtype=float))
        if self.kind == "sitting":
            eps = self.epsilon
            return smooth_step((t - eps) / (1.0 - 2.0 * eps))
        k = self._piece_index(t)
        local = t - self._knots[k]
        out = np.zeros_like(local)
        table = self._table
        for j in range(table.shape[1] - 1, -1, -1):
            out = out * local + table[k, j]
        return np.clip(out, 0.0, 1.0)

    def deriv(self, t):
        t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
        if self.kind == "affine":
            vals = np.asarray(self.values, dtype=float)
            slopes = np.diff(vals) / np.diff(self._knots)
            return slopes[self._piece_index(t)]
        if self.kind == "sitting":
            eps = self.epsilon
            w = 1.0 - 2.0 * eps
            return smooth_step_deriv((t - eps) / w) / w
        k = self._piece_index(t)
        local = t - self._knots[k]
        table = self._table
        out = np.zeros_like(local)
        for j in range(table.shape[1] - 1, 0, -1):
            out = out * local + j * table[k, j]
        return out

    @property
    def is_monotone(self) -> bool:
        return True

    @property
    def increasing(self) -> bool:
        return True

    def preimage(self, v: float) -> tuple[float, float]:
        """``[inf, sup]`` of ``{t : phi(t) = v}`` by bisection."""
        lo_a, lo_b = 0.0, 1.0  # first t with phi(t) >= v
        hi_a, hi_b = 0.0, 1.0  # last t with phi(t) <= v
        if float(self(0.0)) >= v:
            lo_b = 0.0
        if float(self(1.0)) <= v:
            hi_a = 1.0
        for _ in range(200):
            if lo_b - lo_a <= 0.0 and hi_b - hi_a <= 0.0:
                break
            if lo_b > lo_a:
                m = 0.5 * (lo_a + lo_b)
                if m in (lo_a, lo_b):
                    lo_a = lo_b
                elif float(self(m)) >= v:
                    lo_b = m
                else:
                    lo_a = m
            if hi_b > hi_a:
                m = 0.5 * (hi_a + hi_b)
                if m in (hi_a, hi_b):
                    hi_b = hi_a
                elif float(self(m)) <= v:
                    hi_a = m
                else:
                    hi_b = m
        return lo_b, hi_a

    # validation ------------------------------------------------------------
    def _validate(self):
        knots = self._knots
        if len(knots) < 2 or knots[0] != 0.0 or knots[-1] != 1.0 or np.any(np.diff(knots) <= 0):
            raise InvalidReparamError("knots must increase strictly from 0 to 1")
        if self.kind == "affine":
            vals = np.asarray(self.values, dtype=float)
            if len(vals) != len(knots):
                raise InvalidReparamError("affine reparametrization needs one value per knot")
            if vals[0] != 0.0 or vals[-1] != 1.0:
                raise InvalidReparamError("phi(0) = 0 and phi(1) = 1 are required")
            if np.any(np.diff(vals) < 0):
                raise InvalidReparamError("phi must be non-decreasing")
            if np.any((vals[1:-1] <= 0.0) | (vals[1:-1] >= 1.0)):
                raise InvalidReparamError("interior values must lie strictly inside (0, 1)")
        elif self.kind == "smooth_monotone":
            if len(self.pieces) != len(knots) - 1:
                raise InvalidReparamError("smooth reparametrization needs one piece per cell")
            ends = self._raw_piece_ends()
            if abs(ends[0][0]) > 1e-12 or abs(ends[-1][1] - 1.0) > 1e-12:
                raise InvalidReparamError("phi(0) = 0 and phi(1) = 1 are required")
            for (a, b), (c, d) in zip(ends, ends[1:]):
                if abs(b - c) > 1e-12:
                    raise InvalidReparamError("pieces must join continuously")
            grid = np.linspace(0.0, 1.0, 4097)
            d = self.deriv(grid)
            if np.any(d < -1e-9):
                raise InvalidReparamError("phi must be non-decreasing")
            inner = self(grid[1:-1])
            if np.any((inner <= 0.0) | (inner >= 1.0)):
                raise InvalidReparamError("interior values must lie strictly inside (0, 1)")

    def _raw_piece_ends(self):
        out = []
        for k, p in enumerate(self.pieces):
            w = self._knots[k + 1] - self._knots[k]
            out.append((p[0], float(np.polynomial.polynomial.polyval(w, p))))
        return out

    def to_dict(self) -> dict:
        d: dict = {"type": "reparam", "kind": self.kind}
        if self.kind == "sitting":
            d["epsilon"] = self.epsilon
        elif self.kind == "affine":
            d["knots"] = list(self.knots)
            d["values"] = list(self.values)
        else:
            d["knots"] = list(self.knots)
            d["pieces"] = [list(p) for p in self.pieces]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Reparam":
        kind = d["kind"]
        if kind == "sitting":
            return cls.sitting(d["epsilon"])
        if kind == "affine":
            return cls.piecewise_affine(d["knots"], d["values"])
        return cls.polynomial(d["knots"], d["pieces"])


def map_from_dict(d: dict):
    if d["type"] == "affine_map":
        return AffineMap(float(d["shift"]), float(d["scale"]))
    return Reparam.from_dict(d)
