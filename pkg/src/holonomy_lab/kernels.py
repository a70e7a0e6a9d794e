"""Flat bump kernel ``f(t) = exp(-1/(t(1-t)))`` and the smooth step built on it.

All one-sided derivatives of ``f`` vanish at 0 and 1, which is what makes it
usable both as the radial profile of out-and-back arcs and as the flattening
kernel for sitting instants.
"""

from __future__ import annotations

import numpy as np

#: f(1/2); the maximum of the bump.
BUMP_PEAK = float(np.exp(-4.0))


def bump(t):
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    q = np.where(inside, t * (1.0 - t), 1.0)
    with np.errstate(over="ignore", divide="ignore"):
        return np.where(inside, np.exp(-1.0 / q), 0.0)


def bump_deriv(t):
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    q = np.where(inside, t * (1.0 - t), 1.0)
    # exp underflows to 0 long before 1/q^2 overflows, except for subnormal q
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        d = np.exp(-1.0 / q) * (1.0 - 2.0 * t) / (q * q)
    return np.where(inside & np.isfinite(d), d, 0.0)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)
_TABLE_CELLS = 2048


def _cell_integrals(a, b):
    # Gauss-Legendre on each [a_k, b_k]; f is positive so every piece is >= 0.
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    half = 0.5 * (b - a)
    nodes = a + half * (_GL_X + 1.0)
    return np.sum(half * _GL_W * bump(nodes), axis=-1)


_EDGES = np.linspace(0.0, 1.0, _TABLE_CELLS + 1)
_CUMULATIVE = np.concatenate([[0.0], np.cumsum(_cell_integrals(_EDGES[:-1], _EDGES[1:]))])
#: integral of f over [0, 1]
BUMP_MASS = float(_CUMULATIVE[-1])


def smooth_step(u):
    """Monotone C-infinity step from 0 to 1 on [0, 1], flat to all orders at both ends."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    k = np.minimum((u * _TABLE_CELLS).astype(int), _TABLE_CELLS - 1)
    partial = _CUMULATIVE[k] + _cell_integrals(_EDGES[k], u)
    out = np.clip(partial / BUMP_MASS, 0.0, 1.0)
    return np.where(u >= 1.0, 1.0, np.where(u <= 0.0, 0.0, out))


def smooth_step_deriv(u):
    return bump(u) / BUMP_MASS
