import json

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from holonomy_lab.errors import DomainError, SingularityError
from holonomy_lab.gauge import (
    ALGEBRAS,
    Connection,
    GroupElement,
    algebra_exp,
    bracket,
    connection_eval,
    connection_from_json,
    connection_to_json,
    constant_connection,
    curvature,
    flat_puncture_connection,
    lie_algebra,
    magnetic_connection,
    membership_residual,
    project,
    random_connection,
    zero_connection,
)

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)


@pytest.mark.parametrize("name", ALGEBRAS)
def test_bracket_closure(name):
    assert lie_algebra(name).closure_residual() < 1e-12


def test_su2_generators():
    g = lie_algebra("su2").generators
    assert np.allclose(g[0], 0.5j * SIGMA1)
    for T in g:
        assert np.allclose(T.conj().T, -T) and abs(np.trace(T)) < 1e-15


def test_exp_zero_is_identity():
    for name in ALGEBRAS:
        alg = lie_algebra(name)
        m = alg.matrix_size
        assert np.array_equal(algebra_exp(np.zeros((m, m), dtype=complex)), np.eye(m))


def test_exp_euler_identity():
    assert np.allclose(algebra_exp(np.array([[1j * np.pi]])), [[-1.0]], atol=1e-15)


def test_exp_su2_closed_form():
    X = 1j * np.pi * SIGMA1 / 2
    assert np.allclose(algebra_exp(X), [[0, 1j], [1j, 0]], atol=1e-15)
    theta = 0.7
    assert np.allclose(
        algebra_exp(1j * theta * SIGMA1 / 2), np.cos(theta / 2) * np.eye(2) + 1j * np.sin(theta / 2) * SIGMA1
    )


def test_exp_returns_group_element_with_algebra():
    alg = lie_algebra("su2")
    g = algebra_exp(alg.element([0.3, -0.2, 0.5]), alg)
    assert isinstance(g, GroupElement) and g.residual() < 1e-14


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(ALGEBRAS), st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_exp_inverse_property(name, coeffs):
    alg = lie_algebra(name)
    X = alg.element(coeffs[: alg.dimension])
    E = algebra_exp(X) @ algebra_exp(-X)
    assert np.linalg.norm(E - np.eye(alg.matrix_size)) < 1e-12
    assert np.allclose(algebra_exp(X), scipy.linalg.expm(X), atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(ALGEBRAS), st.lists(st.floats(-2, 2), min_size=3, max_size=3), st.floats(-2, 2))
def test_exp_commuting_pairs(name, coeffs, s):
    alg = lie_algebra(name)
    X = alg.element(coeffs[: alg.dimension])
    Y = s * X  # multiples of X commute with X
    assert np.linalg.norm(bracket(X, Y)) < 1e-12
    lhs = algebra_exp(X) @ algebra_exp(Y)
    assert np.linalg.norm(lhs - algebra_exp(X + Y)) < 1e-10


def test_zero_connection_evaluates_to_zero():
    A = zero_connection(lie_algebra("su2"))
    assert np.all(connection_eval(A, [0.3, -1.0]) == 0)
    assert np.all(curvature(A, [0.3, -1.0], 0, 1) == 0)


def test_magnetic_connection():
    A = magnetic_connection(1.0)
    v = connection_eval(A, [1.0, 0.0])
    assert np.allclose(v[0], 0.0) and np.allclose(v[1], [[0.5j]])
    assert np.allclose(curvature(A, [0.4, -2.0], 0, 1), [[1j]])
    assert np.allclose(curvature(A, [0.4, -2.0], 1, 0), [[-1j]])


def test_constant_connection_curvature_is_bracket():
    alg = lie_algebra("su2")
    C = np.array([[0.3, -1.0, 0.2], [0.5, 0.1, -0.7]])
    A = constant_connection(alg, C)
    v = connection_eval(A, [5.0, -3.0])
    C1, C2 = alg.element(C[0]), alg.element(C[1])
    assert np.allclose(v[0], C1) and np.allclose(v[1], C2)
    assert np.allclose(curvature(A, [5.0, -3.0], 0, 1), C1 @ C2 - C2 @ C1, atol=1e-15)


def test_curvature_needs_distinct_axes():
    with pytest.raises(DomainError):
        curvature(magnetic_connection(), [0.0, 0.0], 1, 1)


def test_random_connection_determinism():
    alg = lie_algebra("su2")
    a = random_connection(7, alg, 2)
    b = random_connection(7, alg, 2)
    assert np.array_equal(a.coeffs, b.coeffs)
    c = random_connection(8, alg, 2)
    assert not np.array_equal(a.coeffs, c.coeffs)


def test_random_connection_statistics():
    A = random_connection(3, lie_algebra("su2"), 4, scale=2.0)
    c = A.coeffs.ravel()
    assert abs(np.mean(c)) < 0.6 and 1.5 < np.std(c) < 2.5


def test_random_connection_scale_zero():
    A = random_connection(1, lie_algebra("su2"), 2, scale=0.0)
    assert np.all(connection_eval(A, [0.7, 0.2]) == 0)


def test_random_degree_zero_is_constant():
    A = random_connection(5, lie_algebra("su2"), 0)
    assert np.allclose(connection_eval(A, [0, 0]), connection_eval(A, [3, -1]))
    v = connection_eval(A, [0, 0])
    assert np.allclose(curvature(A, [2, 2], 0, 1), bracket(v[0], v[1]))


def test_random_rejects_negative_degree():
    with pytest.raises(DomainError):
        random_connection(0, lie_algebra("u1"), -1)


def _fd_curvature(A, x, h):
    def comp(p, j):
        return connection_eval(A, p)[j]

    e0, e1 = np.array([h, 0.0]), np.array([0.0, h])
    d0A1 = (comp(x + e0, 1) - comp(x - e0, 1)) / (2 * h)
    d1A0 = (comp(x + e1, 0) - comp(x - e1, 0)) / (2 * h)
    v = connection_eval(A, x)
    return d0A1 - d1A0 + bracket(v[0], v[1])


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_curvature_against_finite_differences(seed):
    A = random_connection(seed, lie_algebra("su2"), 3)
    x = np.array([0.4, -0.3])
    F = curvature(A, x, 0, 1)
    e1 = np.linalg.norm(_fd_curvature(A, x, 1e-2) - F)
    e2 = np.linalg.norm(_fd_curvature(A, x, 5e-3) - F)
    assert 3.5 <= e1 / e2 <= 4.5


def test_puncture_connection():
    A = flat_puncture_connection(0.3)
    v = connection_eval(A, [1.0, 0.0])
    assert np.allclose(v[0], 0.0) and np.allclose(v[1], [[0.3j]])
    with pytest.raises(SingularityError):
        connection_eval(A, [0.0, 0.0])
    with pytest.raises(SingularityError):
        connection_eval(A, [0.01, 0.02])
    assert not A.polynomial


def test_puncture_is_flat_by_finite_differences():
    A = flat_puncture_connection(0.3)
    F = _fd_curvature(A, np.array([1.0, 1.0]), 1e-4)
    assert np.linalg.norm(F) < 1e-8
    assert np.linalg.norm(curvature(A, [1.0, 1.0], 0, 1)) < 1e-10


@pytest.mark.parametrize("name", ALGEBRAS)
def test_projection_restores_membership(name):
    alg = lie_algebra(name)
    rng = np.random.default_rng(0)
    U = algebra_exp(alg.element(rng.normal(size=alg.dimension)))
    noisy = U + 1e-6 * rng.normal(size=U.shape)
    assert membership_residual(noisy, alg) > 1e-8
    P = project(noisy, alg)
    assert membership_residual(P, alg) < 1e-12
    assert np.linalg.norm(P - U) < 1e-5


def test_connection_json_round_trip():
    for A in (random_connection(4, lie_algebra("sl2r"), 2), magnetic_connection(2.0), flat_puncture_connection(0.5)):
        text = connection_to_json(A)
        B = connection_from_json(text)
        assert connection_to_json(B) == text
        x = np.array([0.8, -0.6])
        assert np.array_equal(connection_eval(A, x), connection_eval(B, x))
        json.loads(text)


def test_connection_json_rejects_degree_overflow():
    d = json.loads(connection_to_json(magnetic_connection()))
    d["components"][0].append({"exponent": [3, 0], "coefficients": [1.0]})
    with pytest.raises(DomainError):
        Connection.from_dict(d)
