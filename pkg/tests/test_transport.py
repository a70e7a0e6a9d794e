import numpy as np
import pytest
import scipy.linalg
from scipy.integrate import solve_ivp

from corpus import loop_corpus, path_corpus, reparam_corpus
from holonomy_lab.equiv import CounterexampleSpec, build_counterexample
from holonomy_lab.errors import DivergenceError, DomainError, SingularityError
from holonomy_lab.gauge import (
    constant_connection,
    flat_puncture_connection,
    lie_algebra,
    magnetic_connection,
    membership_residual,
    random_connection,
    zero_connection,
)
from holonomy_lab.loopcore import (
    PLANE,
    concat,
    from_segments,
    invert,
    line,
    polygon_loop,
    reparametrize,
    retrace_loop,
    scale_loop,
    winding_loop,
)
from holonomy_lab.loopcore import circle_loop
from holonomy_lab.transport import (
    CONVENTION,
    TransportOptions,
    convergence_order_probe,
    curvature_law_probe,
    family_continuity,
    format_report,
    holonomy,
    holonomy_matrix,
    holonomy_segment,
    square_loop,
)
from holonomy_lab.words import reduce, to_word, word_to_loop

SU2 = lie_algebra("su2")
C = np.array([[0.3, -1.0, 0.2], [0.5, 0.1, -0.7]])


def _ode_oracle(A, gamma):
    """Independent reference: adaptive scipy integration of the transport ODE, segment by segment."""
    m = A.algebra.matrix_size
    U = np.eye(m, dtype=complex)
    for seg in gamma.segments:
        if seg.is_constant:
            continue

        def rhs(t, y):
            Y = y.view(complex).reshape(m, m)
            M = -A.contract(seg.value(np.array([t])), seg.deriv(np.array([t])))[0]
            return (M @ Y).reshape(-1).view(float)

        y0 = np.eye(m, dtype=complex).reshape(-1).view(float)
        sol = solve_ivp(rhs, (0.0, 1.0), y0, method="DOP853", rtol=1e-12, atol=1e-13)
        U = sol.y[:, -1].view(complex).reshape(m, m) @ U
    return U


def test_zero_connection_gives_identity_exactly():
    A = zero_connection(SU2)
    for g in loop_corpus():
        assert np.array_equal(holonomy_matrix(A, g), np.eye(2))


def test_constant_connection_straight_segment():
    A = constant_connection(SU2, C)
    L = 1.7
    r = holonomy_segment(A, line((0, 0), (L, 0)))
    expected = scipy.linalg.expm(-L * SU2.element(C[0]))
    assert np.linalg.norm(r.matrix - expected) < 1e-10
    assert r.element.residual() < 1e-8


def test_magnetic_circle_gives_minus_one():
    r = holonomy(magnetic_connection(1.0), circle_loop(1.0))
    assert abs(r.matrix[0, 0] + 1.0) < 1e-6
    assert r.error_estimate < 1e-6


@pytest.mark.parametrize("radius", [0.3, 0.5, 2.0])
def test_magnetic_stokes(radius):
    r = holonomy(magnetic_connection(1.0), circle_loop(radius))
    assert abs(r.matrix[0, 0] - np.exp(-1j * np.pi * radius**2)) < 1e-8


@pytest.mark.parametrize("w", [1, 2, -1, 3])
def test_puncture_winding(w):
    r = holonomy(flat_puncture_connection(0.3), winding_loop(w))
    assert abs(r.matrix[0, 0] - np.exp(-0.6j * np.pi * w)) < 1e-6


def test_puncture_singularity_propagates():
    with pytest.raises(SingularityError):
        holonomy(flat_puncture_connection(0.3), circle_loop(1.0))


def test_divergence_is_reported():
    A = constant_connection(lie_algebra("sl2r"), np.array([[1e200, 0, 0], [0, 0, 0]]))
    with pytest.raises(DivergenceError):
        holonomy(A, polygon_loop([(1, 0), (1, 1)]))


def test_options_validation():
    with pytest.raises(DomainError):
        TransportOptions(steps_per_segment=4)
    with pytest.raises(DomainError):
        TransportOptions(tolerance=0.0)
    with pytest.raises(DomainError):
        TransportOptions(method="euler")


@pytest.mark.parametrize("g", loop_corpus()[:6], ids=lambda g: g.label)
def test_agrees_with_scipy_ode(g):
    A = random_connection(11, SU2, 2)
    assert np.linalg.norm(holonomy_matrix(A, g) - _ode_oracle(A, g)) < 1e-9


def test_lie_euler_converges_at_first_order():
    A = constant_connection(SU2, C)
    p = convergence_order_probe(A, square_loop(1.0), [32, 64, 128, 256], method="lie_euler")
    assert 0.7 <= p.order <= 1.3


def test_group_membership_of_results():
    for name in ("u1", "su2", "sl2r"):
        A = random_connection(2, lie_algebra(name), 2)
        for g in loop_corpus()[:5]:
            assert membership_residual(holonomy_matrix(A, g), A.algebra) < 1e-8


def test_gamma_inverse_gamma_is_identity():
    for seed in range(20):
        A = random_connection(seed, SU2, 2)
        g = loop_corpus()[seed % 8]
        U = holonomy_matrix(A, concat(invert(g), g))
        assert np.linalg.norm(U - np.eye(2)) < 1e-8


def test_counterexample_truncation_is_trivial():
    gamma = build_counterexample(CounterexampleSpec(N=20))
    # oracle: reduce the word first, then integrate what is left
    reduced = word_to_loop(reduce(to_word(gamma, "breakpoints_and_turning_points")))
    for seed in range(3):
        A = random_connection(seed, SU2, 2)
        assert np.linalg.norm(holonomy_matrix(A, gamma) - holonomy_matrix(A, reduced)) < 1e-6
        assert np.linalg.norm(holonomy_matrix(A, gamma) - np.eye(2)) < 1e-6


# --- homomorphism, inversion, invariance -----------------------------------


def _triples(n, seed=0):
    rng = np.random.default_rng(seed)
    corpus = loop_corpus()
    for _ in range(n):
        i, j = rng.integers(len(corpus), size=2)
        A = random_connection(int(rng.integers(2**31)), SU2, 2)
        yield corpus[i], corpus[j], A


def test_homomorphism():
    worst = 0.0
    for g1, g2, A in _triples(100):
        lhs = holonomy_matrix(A, concat(g2, g1))
        rhs = holonomy_matrix(A, g2) @ holonomy_matrix(A, g1)
        worst = max(worst, np.linalg.norm(lhs - rhs))
    assert worst < 1e-8


def test_inversion():
    worst = 0.0
    for g1, _, A in _triples(100, seed=1):
        lhs = holonomy_matrix(A, invert(g1))
        rhs = np.linalg.inv(holonomy_matrix(A, g1))
        worst = max(worst, np.linalg.norm(lhs - rhs))
    assert worst < 1e-8


@pytest.mark.parametrize("phi", reparam_corpus(), ids=lambda p: p.kind)
def test_reparametrization_invariance(phi):
    A = random_connection(5, SU2, 2)
    for g in loop_corpus():
        d = np.linalg.norm(holonomy_matrix(A, reparametrize(g, phi)) - holonomy_matrix(A, g))
        assert d < 1e-6, g.label


@pytest.mark.parametrize("beta", path_corpus(), ids=range(4))
def test_retrace_invariance(beta):
    A = random_connection(9, SU2, 2)
    a1, a2 = loop_corpus()[0], loop_corpus()[4]
    with_retrace = concat(a2, concat(retrace_loop(beta), a1))
    without = concat(a2, a1)
    assert np.linalg.norm(holonomy_matrix(A, with_retrace) - holonomy_matrix(A, without)) < 1e-6


# --- diagnostics ------------------------------------------------------------


def test_probe_exact_for_zero_connection():
    p = convergence_order_probe(zero_connection(SU2), square_loop(1.0), [16, 32, 64])
    assert p.exact and p.order is None


def test_probe_rk4_order():
    p = convergence_order_probe(constant_connection(SU2, C), square_loop(1.0), [8, 16, 32, 64])
    assert 3.5 <= p.order <= 4.5


def test_probe_rejects_bad_ladder():
    with pytest.raises(DomainError):
        convergence_order_probe(zero_connection(SU2), square_loop(1.0), [16, 32])
    with pytest.raises(DomainError):
        convergence_order_probe(zero_connection(SU2), square_loop(1.0), [16, 30, 60])


def test_small_square_curvature_law():
    r = curvature_law_probe(constant_connection(SU2, C))
    assert r.order >= 2.7


def test_family_continuity_of_shrinking_loop():
    A = random_connection(3, SU2, 2)
    g = loop_corpus()[4]
    fam = family_continuity(A, lambda s: scale_loop(g, 1.0 - s), np.linspace(0, 1, 33))
    assert len(fam.increments) == 32
    assert np.isfinite(fam.lipschitz) and fam.lipschitz > 0
    assert max(fam.increments) <= fam.lipschitz / 32 * (1 + 1e-12)


def test_report_mentions_convention_and_full_precision():
    r = holonomy(magnetic_connection(1.0), circle_loop(1.0))
    text = format_report(r, seed=3, label="circle")
    assert text.startswith(CONVENTION)
    assert "seed: 3" in text
    assert "-1.0000000000000000e+00" in text or "-9.99999999999" in text
