"""Regenerate the example inputs under data/."""

from pathlib import Path

import numpy as np

from holonomy_lab.equiv import CounterexampleSpec, build_counterexample
from holonomy_lab.gauge import connection_to_json, flat_puncture_connection, magnetic_connection
from holonomy_lab.loopcore import PLANE, PolynomialSegment, circle_loop, concat, from_segments, retrace_loop, winding_loop, write_loop

DATA = Path(__file__).resolve().parent.parent / "data"


def main():
    DATA.mkdir(exist_ok=True)
    write_loop(circle_loop(1.0), DATA / "circle.json")
    beta = PolynomialSegment(np.array([[0.0, 0.0], [1.0, 0.5], [0.0, 1.0]]))
    write_loop(retrace_loop(beta, label="retrace"), DATA / "retrace.json")
    petal = PolynomialSegment(np.array([[0.0, 0.0], [-1.0, 0.2], [0.3, -1.0], [0.1, 0.1]]))
    write_loop(concat(retrace_loop(petal), retrace_loop(beta), label="two_petal"), DATA / "two_petal.json")
    arc = PolynomialSegment(np.array([[0, 0], [4, 8], [4, -24], [-16, 32], [8, -16]], dtype=float))
    write_loop(from_segments(PLANE, [arc], label="symmetric_arc"), DATA / "symmetric_arc.json")
    write_loop(build_counterexample(CounterexampleSpec(N=8)), DATA / "counterexample_8.json")
    (DATA / "u1_magnetic.json").write_text(connection_to_json(magnetic_connection(1.0)))
    write_loop(winding_loop(1), DATA / "winding.json")
    (DATA / "puncture.json").write_text(connection_to_json(flat_puncture_connection(0.3)))


if __name__ == "__main__":
    main()
