import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_spd
from robscatter.core import (
    NotPositiveDefiniteError,
    acg_terms,
    as_symmetric,
    check_general_position,
    condition_number,
    custom_weight,
    lower_median,
    riemannian_distance,
    shape_of,
    shifted_weight,
    spectral_decompose,
    sqrtm_spd,
    tyler_weight,
)


def test_spectral_identity():
    sd = spectral_decompose(np.eye(2))
    np.testing.assert_array_equal(sd.eigenvalues, [1.0, 1.0])


def test_spectral_model_one_eigenvalues():
    sd = spectral_decompose(np.diag([10.0, 1, 1, 1, 1]))
    np.testing.assert_allclose(sd.eigenvalues, [10, 1, 1, 1, 1])


@pytest.mark.parametrize("q", range(2, 11))
def test_spectral_reconstruction_and_orthogonality(q):
    rng = np.random.default_rng(q)
    for _ in range(100 // 9 + 1):
        A = rng.standard_normal((q, q))
        M = A @ A.T + np.eye(q)
        sd = spectral_decompose(M)
        P = sd.eigenvectors
        assert np.linalg.norm(sd.reconstruct() - M) / np.linalg.norm(M) < 1e-9
        assert np.max(np.abs(P.T @ P - np.eye(q))) < 1e-10
        assert np.all(np.diff(sd.eigenvalues) <= 0)
        idx = np.argmax(np.abs(P), axis=0)
        assert np.all(P[idx, np.arange(q)] > 0)


def test_spectral_rejects_asymmetric():
    with pytest.raises(ValueError):
        spectral_decompose(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_symmetrization_within_tolerance():
    M = np.array([[2.0, 1.0], [1.0 + 1e-14, 3.0]])
    S = as_symmetric(M)
    assert S[0, 1] == S[1, 0]


def test_condition_number_examples():
    assert condition_number(np.eye(4)) == 1.0
    assert condition_number(np.diag([10.0, 1, 1, 1, 1])) == pytest.approx(10.0)
    assert condition_number(np.diag(np.linspace(10, 1, 50))) == pytest.approx(10.0)
    with pytest.raises(NotPositiveDefiniteError):
        condition_number(np.diag([1.0, 0.0]))


def test_riemannian_examples():
    M = random_spd(np.random.default_rng(0), 3)
    assert riemannian_distance(M, M) == pytest.approx(0.0, abs=1e-12)
    assert riemannian_distance(np.eye(2), np.e**2 * np.eye(2)) == pytest.approx(2 * np.sqrt(2))
    with pytest.raises(ValueError):
        riemannian_distance(np.eye(2), np.eye(3))


def test_riemannian_matches_matrix_log_oracle(rng):
    from scipy.linalg import logm

    for _ in range(20):
        q = rng.integers(2, 6)
        A, B = random_spd(rng, q), random_spd(rng, q)
        Ah = sqrtm_spd(A, -0.5)
        oracle = np.linalg.norm(np.real(logm(Ah @ B @ Ah)), "fro")
        assert riemannian_distance(A, B) == pytest.approx(oracle, rel=1e-8)


def test_shape_examples():
    np.testing.assert_allclose(shape_of(7.3 * np.eye(3)), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(shape_of(np.diag([3.0, 1.0])), np.diag([1.5, 0.5]))
    M = random_spd(np.random.default_rng(1), 4)
    np.testing.assert_allclose(shape_of(shape_of(M)), shape_of(M), rtol=1e-14)
    assert np.trace(shape_of(M)) == pytest.approx(4.0, abs=1e-14)


@given(st.integers(2, 6), st.floats(1e-3, 1e3), st.integers(0, 2**31))
def test_scale_invariance_property(q, c, seed):
    M = random_spd(np.random.default_rng(seed), q)
    assert condition_number(c * M) == pytest.approx(condition_number(M), rel=1e-9)
    np.testing.assert_allclose(shape_of(c * M), shape_of(M), rtol=1e-9, atol=1e-12)


@given(st.integers(2, 6), st.integers(0, 2**31))
def test_riemannian_symmetry_property(q, seed):
    rng = np.random.default_rng(seed)
    A, B = random_spd(rng, q), random_spd(rng, q)
    assert riemannian_distance(A, B) == pytest.approx(riemannian_distance(B, A), abs=1e-9)
    assert riemannian_distance(A, B) > 0


def test_lower_median_convention():
    assert lower_median([4, 1, 3, 2]) == 2
    assert lower_median([5, 1, 3]) == 3
    assert lower_median([7]) == 7
    with pytest.raises(ValueError):
        lower_median([])


def test_acg_terms_direct(rng):
    Z = rng.standard_normal((9, 3))
    S = random_spd(rng, 3)
    Si = np.linalg.inv(S)
    oracle = [3 * np.log(z @ Si @ z / (z @ z)) + np.log(np.linalg.det(S)) for z in Z]
    np.testing.assert_allclose(acg_terms(Z, S), oracle, rtol=1e-10, atol=1e-12)


# weights


@given(st.floats(1e-3, 50), st.floats(1e-8, 1e10))
def test_tyler_psi_is_constant(kappa, s):
    w = tyler_weight(kappa)
    assert w.psi(s) == kappa
    assert w.is_tyler


def test_shifted_weight():
    w = shifted_weight(3.0)
    assert w.u(1.0) == pytest.approx(1.0)
    assert w.psi(1e12) == pytest.approx(3.0, rel=1e-9)


def test_custom_weight_validation():
    w = custom_weight(lambda s: 2.0 / (1.0 + s))
    assert w.kappa == pytest.approx(2.0, abs=1e-6)
    custom_weight(lambda s: 2.0 / (1.0 + s), kappa=2.0)
    with pytest.raises(ValueError):
        custom_weight(lambda s: 2.0 / (1.0 + s), kappa=3.0)
    with pytest.raises(ValueError):
        custom_weight(lambda s: np.exp(-s) + 0 * s)  # psi not monotone
    with pytest.raises(ValueError):
        custom_weight(lambda s: 1.0 + 0.5 * np.sin(s) ** 2 / (1 + s))


# general position


def test_general_position_examples():
    assert check_general_position(np.array([[1.0, 0], [0, 1], [1, 1]]))
    assert not check_general_position(np.array([[1.0, 0], [2, 0], [0, 1]]))
    assert not check_general_position(np.array([[1.0, 0], [0, 0], [0, 1]]))


def test_general_position_random_matches_rank_oracle(rng):
    X = rng.standard_normal((20, 3))
    res = check_general_position(X)
    assert res.holds and not res.probabilistic and res.subsets_checked == 1140
    oracle = all(np.linalg.matrix_rank(X[list(c)]) == 3 for c in itertools.combinations(range(20), 3))
    assert oracle


def test_general_position_probabilistic_flag(rng):
    X = rng.standard_normal((60, 6))
    res = check_general_position(X, max_subsets=1000, n_random=500)
    assert res.holds and res.probabilistic and res.subsets_checked == 500
