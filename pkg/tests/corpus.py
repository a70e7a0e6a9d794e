"""Closed-form loops, paths and reparametrizations shared by the test modules."""

import numpy as np

from holonomy_lab.loopcore import (
    PLANE,
    BumpRaySegment,
    PolynomialSegment,
    Reparam,
    TrigSegment,
    circle_loop,
    concat,
    from_segments,
    polygon_loop,
    retrace_loop,
)


def cubic_petal(a, b):
    """``tau (1 - tau) (a + b tau)``: a polynomial loop at the origin."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return PolynomialSegment(np.array([np.zeros(2), a, b - a, -b]))


def figure_eight():
    """``(sin 2 pi t, sin 4 pi t) / 2``, a trigonometric loop through the origin twice."""
    return TrigSegment(
        np.zeros(2), np.array([2 * np.pi, 4 * np.pi]), np.zeros((2, 2)), np.array([[0.5, 0.0], [0.0, 0.5]])
    )


def loop_corpus():
    return [
        circle_loop(1.0),
        circle_loop(0.5),
        polygon_loop([(1, 0), (1, 1), (0, 1)], label="square"),
        polygon_loop([(0.8, 0.1), (0.2, 0.9)], label="triangle"),
        from_segments(PLANE, [cubic_petal((1.0, 0.3), (-0.5, 1.2))], label="cubic"),
        from_segments(PLANE, [figure_eight()], label="figure_eight"),
        from_segments(PLANE, [BumpRaySegment.polar(0.8, 1.1, normalized=True)], label="bump"),
        concat(circle_loop(0.7), polygon_loop([(0.5, -0.5), (0.0, -1.0)]), label="mixed"),
    ]


def path_corpus():
    """Paths starting at the origin, usable as the ``beta`` of a retracing."""
    return [
        PolynomialSegment(np.array([[0.0, 0.0], [1.0, 0.5], [0.0, 1.0]])),
        PolynomialSegment(np.array([[0.0, 0.0], [-0.7, 0.2], [0.3, -0.4], [0.1, 0.6]])),
        TrigSegment(np.array([-0.6, 0.0]), np.array([np.pi]), np.array([[0.6, 0.0]]), np.array([[0.0, 0.6]])),
        BumpRaySegment.polar(0.9, 2.0, normalized=True),
    ]


def reparam_corpus():
    return [
        Reparam.power(2),
        Reparam.power(3),
        Reparam.sitting(0.1),
        Reparam.piecewise_affine([0.0, 0.3, 0.6, 1.0], [0.0, 0.5, 0.5, 1.0]),
        Reparam.piecewise_affine([0.0, 0.5, 1.0], [0.0, 0.2, 1.0]),
        Reparam.monotone_interpolant([0.0, 0.2, 0.5, 0.9, 1.0], [0.0, 0.05, 0.6, 0.95, 1.0]),
    ]


def two_petal():
    a = PolynomialSegment(np.array([[0.0, 0.0], [1.0, 0.5], [0.0, 1.0]]))
    b = PolynomialSegment(np.array([[0.0, 0.0], [-1.0, 0.2], [0.3, -1.0], [0.1, 0.1]]))
    return concat(retrace_loop(b), retrace_loop(a), label="two_petal")


def single_arc():
    a = PolynomialSegment(np.array([[0.0, 0.0], [1.0, 0.5], [0.0, 1.0]]))
    return retrace_loop(a, label="single_arc")


def symmetric_arc():
    """One polynomial segment ``P(4 tau (1 - tau))`` that goes out and comes back."""
    c = np.array([[0, 0], [4, 8], [4, -24], [-16, 32], [8, -16]], dtype=float)
    return from_segments(PLANE, [PolynomialSegment(c)], label="symmetric_arc")
