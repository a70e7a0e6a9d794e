"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 numerical divergence, 4 the
loop is outside what a partial algorithm handles.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .equiv import (
    CounterexampleSpec,
    analytic_factorize,
    approx_sequence,
    build_counterexample,
    hoop_equiv_test,
)
from .errors import DivergenceError, HolonomyLabError, SingularityError, UnsupportedLoopError
from .gauge import (
    ALGEBRAS,
    constant_connection,
    curvature,
    lie_algebra,
    random_connection,
    read_connection,
)
from .loopcore import (
    basepoint_preimage,
    loop_to_dict,
    read_loop,
    samples_csv,
    sup_distance,
    trivial_loop,
    zero_derivative_set,
)
from .loopcore.io import dumps
from .plot import render
from .transport import (
    CONVENTION,
    TransportOptions,
    convergence_order_probe,
    curvature_law_probe,
    format_report,
    holonomy,
    square_loop,
)
from .words import is_retrace_trivial

COMMANDS = ("holonomy", "reduce", "equiv", "counterexample", "approx", "sets", "factorize", "plot", "probe")
FORMATS = ("json", "csv", "svg", "text")
EXIT_OK, EXIT_INVALID, EXIT_DIVERGED, EXIT_UNSUPPORTED = 0, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="holonomy-lab",
        description="Holonomy, retrace reduction and thin-loop constructions for piecewise-smooth loops.",
    )
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--loop", help="loop JSON file")
    ap.add_argument("--loop2", help="second loop JSON file (equiv; defaults to the trivial loop)")
    ap.add_argument("--connection", help="connection JSON file (holonomy, probe)")
    ap.add_argument("--algebra", choices=ALGEBRAS, default="su2")
    ap.add_argument("--degree", type=int, default=2, help="polynomial degree of random connections")
    ap.add_argument("--samples", type=int, default=100, help="number of sampled connections")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tol", type=float, default=1e-6)
    ap.add_argument("--steps", type=int, default=2048, help="integration steps per segment")
    ap.add_argument("--N", type=int, default=8, help="truncation depth or approximation index")
    ap.add_argument("--epsilon", type=float, default=0.1, help="largest square side for the curvature probe")
    ap.add_argument("--out", help="output path (stdout when omitted)")
    ap.add_argument("--format", choices=FORMATS, default=None)
    ap.add_argument("--plot", help="also write an SVG of the resulting loop here")
    return ap


def _validate(args):
    if args.degree < 0:
        raise ValueError("--degree must be >= 0")
    if args.samples < 1:
        raise ValueError("--samples must be >= 1")
    if not args.tol > 0:
        raise ValueError("--tol must be positive")
    if args.steps < 8:
        raise ValueError("--steps must be >= 8")
    if args.N < 0:
        raise ValueError("--N must be >= 0")
    if not (0.0 < args.epsilon < 1.0):
        raise ValueError("--epsilon must lie in (0, 1)")


def _need_loop(args):
    if not args.loop:
        raise ValueError(f"{args.command} needs --loop")
    return read_loop(args.loop)


def _connection(args, dim: int):
    if args.connection:
        return read_connection(args.connection)
    return random_connection(args.seed, lie_algebra(args.algebra), args.degree, 1.0, dim)


def _matrix_json(M) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M)]


def _header(args) -> dict:
    return {"convention": CONVENTION, "seed": args.seed}


def cmd_holonomy(args):
    gamma = _need_loop(args)
    A = _connection(args, gamma.space.dimension)
    r = holonomy(A, gamma, TransportOptions(steps_per_segment=args.steps, tolerance=min(1e-9, args.tol)))
    if (args.format or "text") == "text":
        return format_report(r, args.seed, gamma.label or "")
    d = _header(args)
    d.update(
        loop=gamma.label,
        algebra=r.element.algebra.name,
        matrix=_matrix_json(r.matrix),
        error_estimate=r.error_estimate,
        steps_used=r.steps_used,
        group_residual=r.element.residual(),
    )
    return dumps(d)


def cmd_reduce(args):
    gamma = _need_loop(args)
    v = is_retrace_trivial(gamma, tol=args.tol)
    if (args.format or "text") == "text":
        return CONVENTION + "\n" + f"seed: {args.seed}\n" + v.log()
    d = _header(args)
    d.update(v.to_dict())
    if v.word is not None:
        d["loop"] = loop_to_dict(gamma, v.word.to_dict())
    return dumps(d)


def cmd_equiv(args):
    g0 = _need_loop(args)
    g1 = read_loop(args.loop2) if args.loop2 else trivial_loop(g0.space)
    v = hoop_equiv_test(g0, g1, args.algebra, args.degree, args.samples, args.seed, args.tol, args.steps)
    if (args.format or "json") == "text":
        lines = [CONVENTION, f"seed: {args.seed}", f"verdict: {v.verdict}", f"samples: {v.samples}",
                 f"max_deviation: {v.max_deviation:.6e}", f"failed: {len(v.failed)}"]
        lines += [f"witness {s} {d:.6e}" for s, d in v.witnesses[:10]]
        return "\n".join(lines) + "\n"
    d = _header(args)
    d.update(v.to_dict())
    return dumps(d)


def cmd_counterexample(args):
    if args.N < 1:
        raise ValueError("--N must be >= 1 for a truncation")
    spec = CounterexampleSpec(N=args.N)
    gamma = build_counterexample(spec)
    if args.plot:
        _write(args.plot, render(gamma, "svg"))
    fmt = args.format or "json"
    if fmt in ("svg", "csv"):
        return render(gamma, fmt)
    d = _header(args)
    d.update(spec=spec.to_dict(), loop=loop_to_dict(gamma))
    return dumps(d)


def cmd_approx(args):
    if args.loop:
        gamma = read_loop(args.loop)
    else:
        gamma = build_counterexample(CounterexampleSpec(N=max(args.N + 30, 40)))
    gn = approx_sequence(gamma, args.N)
    if args.plot:
        _write(args.plot, render(gn, "svg"))
    dist = sup_distance(gamma, gn)
    v = is_retrace_trivial(gn)
    d = _header(args)
    d.update(n=args.N, distance=dist, verdict=v.verdict, cancellations=v.n_cancellations, loop=loop_to_dict(gn))
    return dumps(d)


def cmd_sets(args):
    gamma = _need_loop(args)
    I = basepoint_preimage(gamma)
    J = zero_derivative_set(gamma)
    if (args.format or "json") == "text":
        return f"{CONVENTION}\nseed: {args.seed}\nI: {I.to_dict()}\nJ: {J.to_dict()}\n"
    d = _header(args)
    d.update(basepoint_preimage=I.to_dict(), zero_derivative_set=J.to_dict())
    return dumps(d)


def cmd_factorize(args):
    gamma = _need_loop(args)
    fz = analytic_factorize(gamma)
    d = _header(args)
    d.update(
        factors=[
            {
                "interval": list(f.interval),
                "t_star": f.t_star,
                "retrace": loop_to_dict(f.retrace),
                "theta": f.theta.to_dict(),
            }
            for f in fz.factors
        ],
        recomposition_error=fz.error(),
    )
    return dumps(d)


def cmd_plot(args):
    gamma = _need_loop(args)
    fmt = args.format or "svg"
    if fmt == "csv":
        return samples_csv(gamma)
    if fmt != "svg":
        raise ValueError("plot writes svg or csv")
    return render(gamma, "svg")


def cmd_probe(args):
    alg = lie_algebra(args.algebra)
    if args.connection:
        A = read_connection(args.connection)
    else:
        rng = np.random.default_rng(args.seed)
        A = constant_connection(alg, rng.normal(size=(2, alg.dimension)))
    gamma = read_loop(args.loop) if args.loop else square_loop(1.0)
    base = max(8, args.steps // 256)
    ladder = [base * 2**k for k in range(4)]
    p = convergence_order_probe(A, gamma, ladder)
    eps = [args.epsilon, args.epsilon / 2, args.epsilon / 4]
    c = curvature_law_probe(A, eps)
    d = _header(args)
    d.update(
        algebra=A.algebra.name,
        ladder=list(p.steps),
        self_errors=list(p.errors),
        self_order=p.order,
        exact=p.exact,
        eps=list(c.eps),
        curvature_errors=list(c.errors),
        curvature_order=c.order,
        curvature_at_origin=_matrix_json(curvature(A, np.zeros(A.dim), 0, 1)),
    )
    return dumps(d)


HANDLERS = {
    "holonomy": cmd_holonomy,
    "reduce": cmd_reduce,
    "equiv": cmd_equiv,
    "counterexample": cmd_counterexample,
    "approx": cmd_approx,
    "sets": cmd_sets,
    "factorize": cmd_factorize,
    "plot": cmd_plot,
    "probe": cmd_probe,
}


def _write(path, text: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _validate(args)
        text = HANDLERS[args.command](args)
    except UnsupportedLoopError as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (DivergenceError, SingularityError, FloatingPointError) as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (HolonomyLabError, ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
