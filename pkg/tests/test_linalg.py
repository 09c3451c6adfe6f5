import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcoreset import linalg


def random_psd(rng, n, rank=None):
    a = rng.normal(size=(n, rank or n))
    return a @ a.T


def test_identity_and_diagonal():
    assert np.all(linalg.sym_eig(np.eye(4)).eigenvalues == 1.0)
    eig = linalg.sym_eig(np.diag([1.0, 3.0]))
    np.testing.assert_allclose(eig.eigenvalues, [3, 1])
    np.testing.assert_allclose(np.abs(eig.eigenvectors), [[0, 1], [1, 0]])


@pytest.mark.parametrize("method", ["jacobi", "lapack"])
def test_reconstruction(method, rng):
    a = rng.normal(size=(6, 6))
    a = a + a.T
    eig = linalg.sym_eig(a, method=method)
    np.testing.assert_allclose(eig.reconstruct(), a, atol=1e-8)
    assert np.all(np.diff(eig.eigenvalues) <= 0)


@given(st.integers(0, 2**31 - 1), st.integers(1, 12))
def test_eigen_invariants(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    a = a + a.T
    eig = linalg.sym_eig(a)
    scale = np.linalg.norm(a)
    v, w = eig.eigenvectors, eig.eigenvalues
    np.testing.assert_allclose(a @ v, v * w, atol=1e-8 * scale)
    np.testing.assert_allclose(v.T @ v, np.eye(n), atol=1e-10)
    assert abs(w.sum() - np.trace(a)) <= 1e-8 * max(scale, 1)


def test_non_symmetric_rejected():
    with pytest.raises(ValueError, match="symmetric"):
        linalg.sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_jacobi_nonconvergence_reported(rng):
    a = rng.normal(size=(8, 8))
    with pytest.raises(RuntimeError):
        linalg.sym_eig(a + a.T, method="jacobi", max_sweeps=1)


def test_matrix_sqrt():
    np.testing.assert_allclose(linalg.matrix_sqrt_psd(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(linalg.matrix_sqrt_psd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)


def test_matrix_sqrt_square_back(rng):
    a = random_psd(rng, 7, rank=4)
    r = linalg.matrix_sqrt_psd(a)
    np.testing.assert_allclose(r @ r, a, atol=1e-7)


def test_matrix_sqrt_rejects_indefinite():
    with pytest.raises(ValueError):
        linalg.matrix_sqrt_psd(np.diag([1.0, -1e-3]))


def test_regularized_inverse():
    np.testing.assert_allclose(linalg.regularized_inverse(np.eye(3), 0.0), np.eye(3))
    np.testing.assert_allclose(linalg.regularized_inverse(np.diag([2.0, 4.0]), 0.0), np.diag([0.5, 0.25]), atol=1e-12)


def test_regularized_inverse_product(rng):
    a = random_psd(rng, 6) + np.eye(6)
    np.testing.assert_allclose(a @ linalg.regularized_inverse(a), np.eye(6), atol=1e-6)


def test_regularized_inverse_rejects_negative_definite():
    with pytest.raises(ValueError):
        linalg.regularized_inverse(-np.eye(2))
