"""Lipschitz constants and term-by-term coreset generalization bounds.

Big-O constants are set to 1 and logs are natural, so the numbers are a
relative scale for comparing configurations, not absolute error guarantees.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

SCALE_NOTE = "relative scale - valid for comparisons only"


@dataclass(frozen=True)
class BoundInputs:
    N_t: int
    N_c: int
    m: int = 1
    d: int = 1
    d_x: int = 1
    n_c: int = 2
    delta_c: float = 0.0
    lambda_eta: float = 1.0
    L: float = 4.0
    max_w: float = 1.0
    norm_M: float = 1.0
    max_y: float = 1.0
    N_q: int = 1
    r: float = math.pi
    w_norm: float = 0.0
    delta: float = 0.05
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("N_t", "N_c", "m", "d", "d_x", "n_c", "delta_c", "lambda_eta", "L", "max_w", "norm_M", "max_y", "N_q", "r", "w_norm"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not self.N_t >= self.N_c >= 1:
            raise ValueError("need N_t >= N_c >= 1")
        if self.N_q < 1:
            raise ValueError("N_q must be >= 1")

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BoundReport:
    kind: str
    capacity: float
    confidence: float
    coreset: float
    inputs: BoundInputs

    @property
    def total(self) -> float:
        return self.capacity + self.confidence + self.coreset

    @property
    def terms(self) -> tuple[float, float, float]:
        return (self.capacity, self.confidence, self.coreset)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "note": SCALE_NOTE,
            "capacity": self.capacity,
            "confidence": self.confidence,
            "coreset": self.coreset,
            "sum": self.total,
            "inputs": self.inputs.to_json(),
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2))


def qnn_lipschitz(d: float, d_x: float, max_w: float, norm_M: float, max_y: float) -> float:
    return 2.0 * d * math.sqrt(d_x) * max_w * norm_M * (norm_M + max_y)


def kernel_lipschitz(k_c: float, d_x: float, max_w: float, N_q: int, r: float) -> float:
    if N_q < 1:
        raise ValueError("N_q must be >= 1")
    return 2.0 * k_c * math.sqrt(d_x) * max_w * (1.0 + (N_q - 1) * r)


def qnn_coreset_bound(b: BoundInputs) -> BoundReport:
    """Capacity ``sqrt(m log m / N_t)`` (log floored at 1), confidence, radius term.

    The radius term is ``delta_c * (lambda_eta L n_c + lambda_l)`` with the
    full loss Lipschitz constant ``lambda_l`` of :func:`qnn_lipschitz`.
    """
    t1 = math.sqrt(b.m * max(math.log(b.m), 1.0) / b.N_t) if b.m > 0 else 0.0
    t2 = math.sqrt(math.log(1.0 / b.delta) / b.N_t)
    lip = qnn_lipschitz(b.d, b.d_x, b.max_w, b.norm_M, b.max_y)
    t3 = b.delta_c * (b.lambda_eta * b.L * b.n_c + lip)
    return BoundReport("qnn", t1, t2, t3, b)


def qkernel_coreset_bound(b: BoundInputs) -> BoundReport:
    """Radius term ``delta_c * (lambda_eta L n_c + N_c sqrt(d_x) max|w| (1 + (N_q - 1) r))``."""
    t1 = math.sqrt(math.ceil(b.w_norm) ** 2 / b.N_t)
    t2 = math.sqrt(math.log(4.0 / b.delta) / b.N_t)
    lip = 0.5 * kernel_lipschitz(b.N_c, b.d_x, b.max_w, b.N_q, b.r)
    t3 = b.delta_c * (b.lambda_eta * b.L * b.n_c + lip)
    return BoundReport("qkernel", t1, t2, t3, b)


def measure_bound_inputs(
    coreset,
    dataset,
    *,
    qnn_config=None,
    svm_models=None,
    gram=None,
    n_qubits: int | None = None,
    delta: float = 0.05,
    lambda_eta: float = 1.0,
    L: float | None = None,
) -> BoundInputs:
    """Fill measurable fields from a coreset, its dataset and a trained model.

    For a QNN pass ``qnn_config``; for a kernel SVM pass the fitted
    ``svm_models`` with the coreset ``gram`` so the RKHS norm
    ``sqrt(a' Q a)`` and ``max |a_i y_i|`` can be read off.
    """
    n_t = dataset.n
    n_c = int(coreset.size)
    if n_c > n_t or np.any(np.asarray(coreset.center_indices) >= n_t):
        raise ValueError("coreset does not index into this dataset")
    feats = np.asarray(dataset.features)
    r = float(np.abs(feats).max()) if np.isrealobj(feats) and feats.size else 0.0
    d_x = int(np.prod(feats.shape[1:])) if feats.ndim > 1 else 1
    prov = {"N_t": "measured", "N_c": "measured", "delta_c": "measured", "r": "measured", "d_x": "measured",
            "lambda_eta": "supplied", "L": "supplied" if L is not None else "default"}
    kw = dict(N_t=n_t, N_c=n_c, delta_c=float(coreset.radius), d_x=d_x, n_c=dataset.n_c, r=r,
              delta=delta, lambda_eta=lambda_eta)
    if qnn_config is not None:
        if np.isrealobj(feats) and feats.ndim == 2 and d_x > qnn_config.n_qubits:
            raise ValueError("feature dimension exceeds the circuit width")
        norm_m = max(h.spectral_norm for h in qnn_config.heads)
        max_y = 1.0
        kw.update(m=qnn_config.n_params, d=qnn_config.layers, max_w=float(np.abs(qnn_config.encoding_weights).max()),
                  norm_M=norm_m, max_y=max_y, N_q=qnn_config.n_qubits,
                  L=(norm_m + max_y) ** 2 if L is None else L)
        prov.update(m="measured", d="measured", max_w="measured", norm_M="measured")
    elif svm_models is not None:
        if gram is None:
            raise ValueError("kernel bounds need the coreset Gram matrix")
        gram = np.asarray(gram, dtype=float)
        if gram.shape != (n_c, n_c):
            raise ValueError("Gram matrix does not match the coreset size")
        norms, maxw = [], []
        for mdl in svm_models:
            ay = mdl.alpha * mdl.labels
            norms.append(math.sqrt(max(float(ay @ gram @ ay), 0.0)))
            maxw.append(float(np.abs(ay).max(initial=0.0)))
        kw.update(w_norm=max(norms), max_w=max(maxw), N_q=n_qubits or d_x, L=4.0 if L is None else L)
        prov.update(w_norm="measured", max_w="measured", N_q="measured")
    else:
        raise ValueError("pass either qnn_config or svm_models")
    return BoundInputs(provenance=prov, **kw)
