import itertools
import json
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import cubic_petal, path_corpus
from holonomy_lab.equiv import CounterexampleSpec, build_counterexample
from holonomy_lab.errors import PolicyError
from holonomy_lab.gauge import lie_algebra, random_connection
from holonomy_lab.loopcore import (
    PLANE,
    BumpRaySegment,
    Reparam,
    TrigSegment,
    circle_loop,
    compose,
    concat,
    constant,
    evaluate,
    from_segments,
    loop_from_json,
    restrict,
    retrace_loop,
    reverse,
)
from holonomy_lab.transport import holonomy_matrix
from holonomy_lab.words import (
    Letter,
    SegmentTable,
    Word,
    is_retrace_trivial,
    match_up_to_reparam,
    reduce,
    reduce_with_certificate,
    to_word,
    word_from_dict,
    word_to_json,
    word_to_loop,
)

PETALS = (
    cubic_petal((1.0, 0.3), (-0.5, 1.2)),
    cubic_petal((-0.8, 0.6), (0.4, -1.5)),
    cubic_petal((0.2, -1.0), (1.1, 0.7)),
)
PETAL_TABLE = SegmentTable(PETALS)


def free_word(code):
    """Free-group word from signed generator indices (1, -1, 2, ...) over the petal table."""
    return Word(tuple(Letter(abs(c) - 1, 1 if c > 0 else -1) for c in code), PETAL_TABLE)


def as_code(word):
    return tuple((l.segment_id + 1) * l.orientation for l in word.letters)


@lru_cache(maxsize=None)
def all_orders(code):
    """Every irreducible word reachable by cancelling adjacent inverse pairs in any order."""
    spots = [i for i in range(len(code) - 1) if code[i] == -code[i + 1]]
    if not spots:
        return frozenset([code])
    out = set()
    for i in spots:
        out |= all_orders(code[:i] + code[i + 2 :])
    return frozenset(out)


def circle_arc(a=0.0, b=0.6):
    return restrict(circle_loop().segments[0], a, b)


# --- to_word ----------------------------------------------------------------


def test_circle_is_one_letter():
    w = to_word(circle_loop())
    assert len(w) == 1 and w.closed


def test_bump_ray_splits_at_half():
    seg = BumpRaySegment.polar(1.0, 0.4)
    g = from_segments(PLANE, [seg])
    assert len(to_word(g)) == 1
    w = to_word(g, "breakpoints_and_turning_points")
    assert len(w) == 2
    mid = evaluate(g, 0.5)
    assert np.allclose(w.table.end(w.letters[0]), mid, atol=1e-15)


def test_retrace_pair_letters_chain():
    beta = path_corpus()[0]
    w = to_word(retrace_loop(beta))
    assert len(w) == 2
    assert np.allclose(w.table.end(w.letters[0]), w.table.start(w.letters[1]))


def test_to_word_drops_constant_pieces():
    g = from_segments(PLANE, [PETALS[0], constant((0, 0)), PETALS[1]])
    assert len(to_word(g)) == 2


def test_to_word_reproduces_loop_up_to_affine_reparam():
    g = concat(circle_loop(0.5), from_segments(PLANE, [PETALS[2]]))
    back = word_to_loop(to_word(g))
    t = np.linspace(0, 1, 201)
    assert np.allclose(evaluate(back, t), evaluate(g, t), atol=1e-14)


def test_dense_turning_points_raise():
    seg = compose(circle_arc(0.0, 1.0), [Reparam.piecewise_affine([0, 0.3, 0.6, 1], [0, 0.5, 0.5, 1])])
    g = from_segments(PLANE, [seg])
    with pytest.raises(PolicyError):
        to_word(g, "breakpoints_and_turning_points")
    assert is_retrace_trivial(g).verdict == "inconclusive"


def test_word_rejects_broken_chain():
    table = SegmentTable([PETALS[0], path_corpus()[0]])
    with pytest.raises(ValueError):
        Word((Letter(1), Letter(0)), table)
    with pytest.raises(ValueError):
        Word((Letter(5),), table)


def test_letter_orientation_validation():
    with pytest.raises(ValueError):
        Letter(0, 2)
    assert Letter(3, 1).inverse() == Letter(3, -1)


# --- matching ---------------------------------------------------------------


def test_cubed_arc_matches():
    s = circle_arc()
    assert match_up_to_reparam(s, compose(s, [Reparam.power(3)]), tol=1e-6, samples=4096)


def test_reversal_of_asymmetric_arc_does_not_match():
    s = circle_arc()
    assert not match_up_to_reparam(s, reverse(s))


def test_bump_legs_match_after_reversal():
    seg = BumpRaySegment.polar(1.0, 0.4)
    out, back = restrict(seg, 0.0, 0.5), restrict(seg, 0.5, 1.0)
    assert match_up_to_reparam(back, reverse(out))
    assert not match_up_to_reparam(back, out)


def test_zero_length_against_positive_length():
    assert not match_up_to_reparam(constant((0, 0)), circle_arc())
    assert match_up_to_reparam(constant((0, 0)), constant((0, 0)))


def _matching_library():
    lib = []
    for s in path_corpus() + [circle_arc()]:
        lib += [s, compose(s, [Reparam.power(2)]), compose(s, [Reparam.sitting(0.1)]), reverse(s)]
    return lib


def test_matching_is_an_equivalence_on_the_library():
    lib = _matching_library()
    M = np.array([[match_up_to_reparam(a, b) for b in lib] for a in lib])
    assert np.all(np.diag(M))
    assert np.array_equal(M, M.T)
    for i, j, k in itertools.product(range(len(lib)), repeat=3):
        if M[i, j] and M[j, k]:
            assert M[i, k]
    # classes are {s, s o t^2, s o sitting} and {reverse(s)} per base path, except the out-and-back
    # bump ray, whose reversal joins the first class
    assert M.sum() == 4 * (3**2 + 1) + 4**2


# --- reduction --------------------------------------------------------------


def test_exact_inverse_word_reduces_to_empty():
    w = free_word((1, 2, -2, -1))
    r = reduce_with_certificate(w)
    assert r.word.is_empty and r.cancellations == ((1, 2), (0, 3))


def test_word_without_matches_is_unchanged():
    w = free_word((1, 2, -1))
    assert reduce(w).same_letters(w)


def test_counterexample_word_reduces_to_empty():
    g = build_counterexample(CounterexampleSpec(N=12))
    w = to_word(g, "breakpoints_and_turning_points")
    assert len(w) == 24 and reduce(w).is_empty


@settings(max_examples=1000, deadline=None)
@given(st.lists(st.sampled_from([1, -1, 2, -2, 3, -3]), max_size=12))
def test_reduce_agrees_with_all_orders_oracle(code):
    code = tuple(code)
    results = all_orders(code)
    assert len(results) == 1
    assert as_code(reduce(free_word(code), exact_only=True)) in results


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from([1, -1, 2, -2, 3, -3]), max_size=12))
def test_reduce_is_idempotent_and_shrinks(code):
    w = free_word(code)
    once = reduce(w)
    assert len(once) <= len(w)
    assert reduce(once).same_letters(once)


def test_matching_reduction_equals_exact_on_distinct_petals():
    for code in [(1, 2, -2, 3, -3, -1), (1, -2, 2, 2, -1), (3, 3, -3, 1)]:
        w = free_word(code)
        assert reduce(w).same_letters(reduce(w, exact_only=True))


def _mixed_word():
    beta = path_corpus()[0]
    table = SegmentTable(list(PETALS) + [beta, compose(beta, [Reparam.power(2)])])
    # p0, then out along beta and back along a reparametrized copy, then p1
    return Word((Letter(0), Letter(3), Letter(4, -1), Letter(1)), table)


def test_reparametrized_backtrack_cancels():
    r = reduce_with_certificate(_mixed_word())
    assert r.cancellations == ((1, 2),)
    assert [l.segment_id for l in r.word.letters] == [0, 1]


def test_holonomy_invariance_under_reduction():
    w = _mixed_word()
    g, gr = word_to_loop(w), word_to_loop(reduce(w))
    for seed in range(20):
        A = random_connection(seed, lie_algebra("su2"), 2)
        assert np.linalg.norm(holonomy_matrix(A, g) - holonomy_matrix(A, gr)) < 1e-6


# --- verdicts ---------------------------------------------------------------


def test_retrace_loop_certificate():
    v = is_retrace_trivial(retrace_loop(path_corpus()[1]))
    assert v.verdict == "trivial_certificate" and v.n_cancellations == 1
    assert "cancel 0 1" in v.log()


def test_circle_not_reduced():
    v = is_retrace_trivial(circle_loop())
    assert v.verdict == "not_reduced" and len(v.reduced) == 1


def test_counterexample_certificate_has_n_cancellations():
    for N in (1, 5, 20):
        v = is_retrace_trivial(build_counterexample(CounterexampleSpec(N=N)))
        assert v.verdict == "trivial_certificate" and v.n_cancellations == N


# --- serialization ----------------------------------------------------------


def test_word_json_round_trip():
    w = _mixed_word()
    text = word_to_json(w)
    back = word_from_dict(json.loads(text))
    assert back.same_letters(w) and word_to_json(back) == text


def test_word_embedded_in_loop_json():
    from holonomy_lab.loopcore import loop_to_dict
    from holonomy_lab.loopcore.io import dumps

    g = retrace_loop(path_corpus()[0])
    w = to_word(g)
    text = dumps(loop_to_dict(g, w.to_dict()))
    d = json.loads(text)
    assert d["word"]["letters"] == [[0, 1], [1, 1]]
    assert loop_from_json(text).n_segments == 2
