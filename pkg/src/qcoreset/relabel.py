"""Relabel a dataset so the quantum kernel is favored over a classical one.

The labels come from the top eigenvector of ``sqrt(KQ) KC^-1 sqrt(KQ)``,
median-thresholded, which approximately maximizes the ratio
``y' KQ^-1 y / y' KC^-1 y``.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .data import LabeledDataset
from .linalg import matrix_sqrt_psd, regularized_inverse, sym_eig


def geometric_objective(kq: np.ndarray, kc: np.ndarray, y: np.ndarray, lambda_rel: float = 1e-10) -> float:
    kq = np.asarray(kq, dtype=float)
    kc = np.asarray(kc, dtype=float)
    y = np.asarray(y, dtype=float)
    if kq.shape != kc.shape or kq.shape[0] != y.shape[0]:
        raise ValueError("kernel and label sizes do not match")
    num = y @ regularized_inverse(kq, lambda_rel) @ y
    den = y @ regularized_inverse(kc, lambda_rel) @ y
    return float(num / den)


def geometric_difference(kq: np.ndarray, kc: np.ndarray, y: np.ndarray, lambda_rel: float = 1e-10) -> float:
    """``y' KC^-1 y / y' KQ^-1 y``, the ratio the spectral labeling maximizes.

    With ``y = sqrt(KQ) v`` this is the Rayleigh quotient of
    ``sqrt(KQ) KC^-1 sqrt(KQ)``, so its top eigenvector is the relaxed optimum.
    It is the reciprocal of :func:`geometric_objective`.
    """
    return 1.0 / geometric_objective(kq, kc, y, lambda_rel)


def geometric_relabel(kq: np.ndarray, kc: np.ndarray, lambda_rel: float = 1e-10) -> np.ndarray:
    """+1/-1 labels: +1 where ``z = sqrt(KQ) v`` is strictly above its median."""
    kq = np.asarray(kq, dtype=float)
    kc = np.asarray(kc, dtype=float)
    if kq.shape != kc.shape:
        raise ValueError("kernel sizes do not match")
    root = matrix_sqrt_psd(kq)
    m = root @ regularized_inverse(kc, lambda_rel) @ root
    m = 0.5 * (m + m.T)
    v = sym_eig(m).eigenvectors[:, 0]
    z = root @ v
    if z[np.argmax(np.abs(z))] < 0:
        z = -z
    return np.where(z > np.median(z), 1, -1)


def _hash(arr: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr).tobytes()).hexdigest()[:16]


def relabel_dataset(ds: LabeledDataset, kq: np.ndarray, kc: np.ndarray, lambda_rel: float = 1e-10) -> LabeledDataset:
    """Replace labels with the geometric-difference labels (class 1 = +1)."""
    y = geometric_relabel(kq, kc, lambda_rel)
    prov = dict(
        ds.provenance,
        relabel={"source_hash": _hash(ds.features), "kq_hash": _hash(kq), "kc_hash": _hash(kc)},
    )
    return LabeledDataset(ds.features, (y > 0).astype(np.int64), 2, prov)
