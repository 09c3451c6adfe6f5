"""Soft-margin SVM dual with per-sample box constraints ``0 <= a_i <= C * gamma_i``."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _backend

SV_THRESHOLD = 1e-8
MAX_PAIR_UPDATES = 1_000_000


@dataclass(frozen=True)
class DualProblem:
    gram: np.ndarray
    labels: np.ndarray  # +1 / -1
    C: float
    caps: np.ndarray

    def __post_init__(self):
        gram = np.asarray(self.gram, dtype=float)
        y = np.asarray(self.labels, dtype=float)
        caps = np.asarray(self.caps, dtype=float)
        n = len(y)
        if gram.shape != (n, n):
            raise ValueError("gram must be square and match the label count")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must be +1 or -1")
        if caps.shape != (n,) or np.any(caps < 0):
            raise ValueError("caps must be nonnegative, one per sample")
        if self.C <= 0:
            raise ValueError("C must be positive")
        object.__setattr__(self, "gram", gram)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "caps", caps)

    @classmethod
    def weighted(cls, gram, labels, C: float = 1.0, weights=None) -> DualProblem:
        y = np.asarray(labels, dtype=float)
        w = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=float)
        return cls(gram, y, C, C * w)

    def objective(self, alpha: np.ndarray) -> float:
        """Dual objective ``sum(a) - 0.5 sum a_i a_j y_i y_j K_ij`` (to maximise)."""
        ay = alpha * self.labels
        return float(alpha.sum() - 0.5 * ay @ self.gram @ ay)


@dataclass
class SvmModel:
    alpha: np.ndarray
    b: float
    support: np.ndarray
    labels: np.ndarray
    C: float
    caps: np.ndarray
    n_iter: int = 0
    gap: float = 0.0
    converged: bool = True
    jitter: float = 0.0
    history: list | None = field(default=None, repr=False)
    kernel_ref: str = ""

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha.tolist(),
            "b": self.b,
            "support_indices": [int(i) for i in self.support],
            "C": self.C,
            "caps": self.caps.tolist(),
            "labels": self.labels.tolist(),
            "kernel_ref": self.kernel_ref,
        }

    @classmethod
    def from_json(cls, d: dict) -> SvmModel:
        return cls(
            alpha=np.asarray(d["alpha"], dtype=float),
            b=float(d["b"]),
            support=np.asarray(d["support_indices"], dtype=np.int64),
            labels=np.asarray(d["labels"], dtype=float),
            C=float(d["C"]),
            caps=np.asarray(d["caps"], dtype=float),
            kernel_ref=d.get("kernel_ref", ""),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))


def _bias(alpha, grad, y, caps) -> float:
    # b = -rho with rho the mean of y_i G_i over free vectors, else the midpoint
    # of the interval allowed by the bounded ones.
    yg = y * grad
    at_up = alpha >= caps - 1e-12
    at_low = alpha <= 1e-12
    free = ~at_up & ~at_low
    if free.any():
        return -float(yg[free].mean())
    ub, lb = np.inf, -np.inf
    for i in range(len(y)):
        if at_up[i]:
            if y[i] < 0:
                ub = min(ub, yg[i])
            else:
                lb = max(lb, yg[i])
        else:
            if y[i] > 0:
                ub = min(ub, yg[i])
            else:
                lb = max(lb, yg[i])
    if not np.isfinite(ub) or not np.isfinite(lb):
        return -float(ub if np.isfinite(ub) else lb if np.isfinite(lb) else 0.0)
    return -0.5 * (ub + lb)


def solve_weighted_dual(p: DualProblem, tol: float = 1e-6, max_iter: int = MAX_PAIR_UPDATES, track: bool = False) -> SvmModel:
    """SMO with maximal-violating-pair selection.

    Stops when the KKT gap drops below ``tol``; if ``max_iter`` pair updates
    pass first the best-so-far model is returned with ``converged=False``.
    """
    y = p.labels
    if not ((y > 0).any() and (y < 0).any()):
        raise ValueError("need samples of both signs")
    gram = p.gram
    jitter = 0.0
    lam_min = float(np.linalg.eigvalsh(0.5 * (gram + gram.T)).min())
    if lam_min < -1e-8:
        jitter = 1e-8 * float(np.diag(gram).max())
        gram = gram + jitter * np.eye(len(y))
    q = (y[:, None] * y[None, :]) * gram
    alpha, grad, n_iter, gap, history = _backend.smo_solve(q, y, p.caps, float(tol), int(max_iter), bool(track))
    alpha = np.clip(alpha, 0.0, p.caps)
    b = _bias(alpha, grad, y, p.caps)
    return SvmModel(
        alpha=alpha,
        b=b,
        support=np.flatnonzero(alpha > SV_THRESHOLD),
        labels=y.copy(),
        C=p.C,
        caps=p.caps.copy(),
        n_iter=int(n_iter),
        gap=float(gap),
        converged=bool(gap < tol),
        jitter=jitter,
        history=None if history is None else [-h for h in history],
    )


def decision_function(m: SvmModel, kernel_row) -> np.ndarray | float:
    """``sum_i a_i y_i K(x, x_i) + b`` for one row or a stack of rows."""
    k = np.asarray(kernel_row, dtype=float)
    if k.shape[-1] != len(m.alpha):
        raise ValueError(f"kernel row length {k.shape[-1]} != training size {len(m.alpha)}")
    out = k @ (m.alpha * m.labels) + m.b
    return float(out) if k.ndim == 1 else out


def predict(m: SvmModel, rows) -> np.ndarray:
    f = np.atleast_1d(decision_function(m, np.atleast_2d(rows)))
    return np.where(f >= 0, 1, -1)


@dataclass(frozen=True)
class KktReport:
    residuals: np.ndarray
    equality: float
    bound_violation: float

    @property
    def max_violation(self) -> float:
        return float(max(self.residuals.max(initial=0.0), self.equality, self.bound_violation))


def kkt_report(m: SvmModel, p: DualProblem, tol: float = 1e-6) -> KktReport:
    """Per-sample complementary-slackness residuals plus ``|sum y_i a_i|``."""
    a, y, caps = m.alpha, p.labels, p.caps
    margin = y * (p.gram @ (a * y) + m.b)
    res = np.zeros(len(a))
    at_low = a <= tol
    at_up = a >= caps - tol
    free = ~at_low & ~at_up
    res[at_low & ~at_up] = np.maximum(0.0, 1.0 - margin[at_low & ~at_up])
    res[at_up & ~at_low] = np.maximum(0.0, margin[at_up & ~at_low] - 1.0)
    res[free] = np.abs(margin[free] - 1.0)
    bound = float(max(np.maximum(-a, 0).max(initial=0.0), np.maximum(a - caps, 0).max(initial=0.0)))
    return KktReport(res, float(abs(y @ a)), bound)


class OneVsRest:
    """``n_c`` binary machines on a shared Gram matrix; predicted class = argmax."""

    def __init__(self, C: float = 1.0, tol: float = 1e-6):
        self.C = C
        self.tol = tol
        self.models: list[SvmModel] = []

    def fit(self, gram: np.ndarray, labels: np.ndarray, n_c: int, weights=None) -> OneVsRest:
        labels = np.asarray(labels)
        if n_c < 2:
            raise ValueError("need at least two classes")
        if n_c == 2:
            y = np.where(labels == 1, 1.0, -1.0)
            self.models = [solve_weighted_dual(DualProblem.weighted(gram, y, self.C, weights), self.tol)]
        else:
            self.models = [
                solve_weighted_dual(DualProblem.weighted(gram, np.where(labels == c, 1.0, -1.0), self.C, weights), self.tol)
                for c in range(n_c)
            ]
        return self

    def decision(self, rows: np.ndarray) -> np.ndarray:
        return np.column_stack([np.atleast_1d(decision_function(m, np.atleast_2d(rows))) for m in self.models])

    def predict(self, rows: np.ndarray) -> np.ndarray:
        f = self.decision(rows)
        if len(self.models) == 1:
            return (f[:, 0] >= 0).astype(np.int64)
        return np.argmax(f, axis=1)
