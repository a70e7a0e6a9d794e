"""Exact real-root isolation for polynomials with binary-float coefficients.

Every float is a dyadic rational, so converting coefficients with
``Fraction`` loses nothing.  Square-free reduction, common-zero extraction
(gcd) and Sturm counting are then carried out in exact arithmetic; only the
final bisection bracket is rounded back to float.

Polynomials are lists of Fractions in ascending powers.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Poly = list


def to_exact(coeffs: Sequence[float]) -> Poly:
    return trim([Fraction(float(c)) for c in coeffs])


def trim(p: Poly) -> Poly:
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return p


def degree(p: Poly) -> int:
    return len(p) - 1


def evaluate(p: Poly, x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def derivative(p: Poly) -> Poly:
    return trim([k * p[k] for k in range(1, len(p))])


def sub(p: Poly, q: Poly) -> Poly:
    n = max(len(p), len(q))
    return trim([(p[k] if k < len(p) else 0) - (q[k] if k < len(q) else 0) for k in range(n)])


def add(p: Poly, q: Poly) -> Poly:
    return sub(p, [-c for c in q])


def mul(p: Poly, q: Poly) -> Poly:
    if not p or not q:
        return []
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return trim(out)


def divmod_poly(p: Poly, q: Poly) -> tuple[Poly, Poly]:
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(p)
    quot = [Fraction(0)] * max(len(p) - len(q) + 1, 1)
    lead = q[-1]
    while len(r) >= len(q) and r:
        shift = len(r) - len(q)
        factor = r[-1] / lead
        quot[shift] = factor
        for k, c in enumerate(q):
            r[k + shift] -= factor * c
        r = trim(r)
    return trim(quot), r


def monic(p: Poly) -> Poly:
    return [c / p[-1] for c in p] if p else []


def gcd(p: Poly, q: Poly) -> Poly:
    a, b = trim(p), trim(q)
    while b:
        _, r = divmod_poly(a, b)
        a, b = b, r
    return monic(a)


def square_free(p: Poly) -> Poly:
    p = trim(p)
    if degree(p) < 1:
        return p
    g = gcd(p, derivative(p))
    if degree(g) < 1:
        return monic(p)
    quot, _ = divmod_poly(p, g)
    return monic(quot)


def sturm_sequence(p: Poly) -> list[Poly]:
    seq = [trim(p), derivative(p)]
    while seq[-1] and degree(seq[-1]) > 0:
        _, r = divmod_poly(seq[-2], seq[-1])
        seq.append([-c for c in r])
        if not seq[-1]:
            seq.pop()
            break
    return [s for s in seq if s]


def sign_changes(seq: list[Poly], x: Fraction) -> int:
    signs = [v for v in (evaluate(s, x) for s in seq) if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if (a > 0) != (b > 0))


def count_roots(seq: list[Poly], a: Fraction, b: Fraction) -> int:
    """Distinct roots in the half-open interval (a, b]."""
    return sign_changes(seq, a) - sign_changes(seq, b)


def isolate(p: Poly, lo: float = 0.0, hi: float = 1.0) -> list[tuple[Fraction, Fraction]]:
    """Disjoint brackets, one per distinct real root in [lo, hi].

    A bracket with equal ends is an exactly located root.
    """
    p = square_free(p)
    if not p:
        raise ValueError("zero polynomial has no isolated roots")
    if degree(p) < 1:
        return []
    seq = sturm_sequence(p)
    a, b = Fraction(lo), Fraction(hi)
    found: list[tuple[Fraction, Fraction]] = []
    if evaluate(p, a) == 0:
        found.append((a, a))
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        n = count_roots(seq, x, y)
        if n == 0:
            continue
        if n == 1:
            if evaluate(p, y) == 0:
                found.append((y, y))
            else:
                found.append((x, y))
            continue
        mid = (x + y) / 2
        stack.append((mid, y))
        stack.append((x, mid))
    return sorted(found)


def refine(p: Poly, bracket: tuple[Fraction, Fraction], tol: float) -> float:
    """Shrink a bracket holding exactly one root in ``(x, y]`` to width ``tol``.

    Bisection is driven by Sturm counts rather than signs, so a different
    root sitting on the open end ``x`` does not confuse it.
    """
    p = square_free(p)
    x, y = bracket
    if x == y:
        return float(x)
    if evaluate(p, y) == 0:
        return float(y)
    seq = sturm_sequence(p)
    while y - x > tol:
        mid = (x + y) / 2
        if evaluate(p, mid) == 0 and count_roots(seq, x, mid) == 1:
            return float(mid)
        if count_roots(seq, x, mid) == 1:
            y = mid
        else:
            x = mid
        # keep denominators bounded once we are below float resolution
        if y - x < Fraction(1, 2**60):
            break
    return float((x + y) / 2)


def common_roots(polys: Sequence[Poly], tol: float, lo: float = 0.0, hi: float = 1.0):
    """Common real zeros of several polynomials in [lo, hi].

    Returns ``None`` when every polynomial is identically zero (the whole
    interval is a zero set), otherwise a sorted list of floats.
    """
    nonzero = [trim(p) for p in polys if trim(p)]
    if not nonzero:
        return None
    g = nonzero[0]
    for q in nonzero[1:]:
        g = gcd(g, q)
        if degree(g) < 1:
            return []
    if degree(g) < 1:
        return []
    return [refine(g, br, tol) for br in isolate(g, lo, hi)]
