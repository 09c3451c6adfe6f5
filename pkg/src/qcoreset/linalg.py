"""Symmetric eigendecomposition and the spectral matrix functions built on it."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend

JACOBI_MAX_N = 160


@dataclass(frozen=True)
class EigDecomposition:
    eigenvalues: np.ndarray  # nonincreasing
    eigenvectors: np.ndarray  # orthonormal columns
    method: str = "jacobi"
    sweeps: int = 0

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


def _check_symmetric(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if a.size and np.abs(a - a.T).max() > 1e-10 * max(1.0, np.abs(a).max()):
        raise ValueError("matrix is not symmetric")
    return 0.5 * (a + a.T)


def sym_eig(a: np.ndarray, tol: float | None = None, method: str = "auto", max_sweeps: int = 100) -> EigDecomposition:
    """Eigendecomposition of a real symmetric matrix, eigenvalues descending.

    ``method="jacobi"`` runs cyclic Jacobi rotations until the off-diagonal
    Frobenius norm drops below ``tol`` (default ``1e-13 * ||A||_F``);
    ``"lapack"`` defers to ``numpy.linalg.eigh``; ``"auto"`` picks Jacobi up to
    ``JACOBI_MAX_N`` rows.
    """
    a = _check_symmetric(a)
    n = a.shape[0]
    if method == "auto":
        method = "jacobi" if n <= JACOBI_MAX_N else "lapack"
    sweeps = 0
    if method == "jacobi":
        if tol is None:
            tol = 1e-13 * max(float(np.linalg.norm(a)), 1e-300)
        w, v, sweeps, off = _backend.jacobi_eig(a, float(tol), int(max_sweeps))
        if off >= tol:
            raise RuntimeError(f"Jacobi did not converge after {sweeps} sweeps (off-norm {off:.3e})")
    elif method == "lapack":
        w, v = np.linalg.eigh(a)
    else:
        raise ValueError(f"unknown method {method!r}")
    order = np.argsort(-w, kind="stable")
    return EigDecomposition(w[order], v[:, order], method, sweeps)


def matrix_sqrt_psd(a: np.ndarray, floor: float = 0.0, method: str = "auto") -> np.ndarray:
    eig = sym_eig(a, method=method)
    lam = eig.eigenvalues
    if lam.size and lam.min() < -1e-8:
        raise ValueError(f"matrix is not PSD (eigenvalue {lam.min():.3e})")
    root = np.sqrt(np.maximum(lam, floor))
    v = eig.eigenvectors
    return (v * root) @ v.T


def regularized_inverse(a: np.ndarray, lambda_rel: float = 1e-10, method: str = "auto") -> np.ndarray:
    """``V diag(1 / (lam_i + lambda_rel * lam_max)) V^T``."""
    eig = sym_eig(a, method=method)
    lam = eig.eigenvalues
    if lam.size == 0 or lam.max() <= 0:
        raise ValueError("all eigenvalues are nonpositive")
    v = eig.eigenvectors
    return (v / (lam + lambda_rel * lam.max())) @ v.T
