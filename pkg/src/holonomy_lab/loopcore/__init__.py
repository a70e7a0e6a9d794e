"""Piecewise-smooth based loops: representation, algebra and the I/J set analyzers."""

from .io import loop_from_dict, loop_from_json, loop_to_dict, loop_to_json, read_loop, write_loop
from .loop import (
    METRIC_SAMPLES,
    PLANE,
    ROOT_TOL,
    AmbientSpace,
    Loop,
    assemble,
    basepoint_preimage,
    circle_loop,
    collapse_constant_intervals,
    concat,
    derivative,
    evaluate,
    from_segments,
    invert,
    make_sitting,
    polygon_loop,
    reparametrize,
    retrace_loop,
    samples_csv,
    scale_loop,
    slice_loop,
    sup_distance,
    trivial_loop,
    winding_loop,
    zero_derivative_set,
)
from .reparam import AffineMap, Reparam
from .segments import (
    BumpRaySegment,
    ComposedSegment,
    ConstantSegment,
    PolynomialSegment,
    Segment,
    TrigSegment,
    compose,
    constant,
    line,
    restrict,
    reverse,
)
from .sets import ClosedSetDescription

__all__ = [name for name in dir() if not name.startswith("_")]
