"""Data-reuploading QNN, weighted risk, parameter-shift gradients and training.

A model is a :class:`ReuploadConfig`; its circuit is compiled into a
:class:`ParamCircuit` whose gate angles are affine in the trainable vector.
Gradients use the two-term shift rule gate by gate and then the chain rule
into parameters, so trainable encoding weights (angle ``w * x``) and plain
rotation angles share one code path.  All shifted circuits of a step run as
one batch through :func:`qsim.run_batch`.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import qsim
from .coreset import weighted_mean
from .data import LabeledDataset, StatePairDataset
from .qsim import GateOp, Observable

AXES = ("X", "Y", "Z")
ENTANGLERS = ("ring", "line", "none")
SHIFT = math.pi / 2
DIVERGENCE_LIMIT = 1e6
COMPILE_THRESHOLD = 1e-5


@dataclass(frozen=True)
class ParamCircuit:
    """Gates plus, per gate, ``angle = coef * (theta[param] or 1) * (x[feature] or 1)``.

    ``param`` / ``feature`` are -1 where absent; non-parametric gates carry NaN
    coefficients.  ``trainable`` flags gates whose angle depends on theta.
    """

    gates: tuple[GateOp, ...]
    param: np.ndarray
    feature: np.ndarray
    coef: np.ndarray
    n_params: int
    n_qubits: int

    @property
    def trainable(self) -> np.ndarray:
        return self.param >= 0

    def angles(self, theta: np.ndarray, x: np.ndarray | None) -> np.ndarray:
        """Angle matrix (B, G) for parameter rows ``theta`` (B, m) and features ``x`` (B, d)."""
        theta = np.atleast_2d(theta)
        b = theta.shape[0]
        out = np.tile(self.coef, (b, 1))
        has_p = self.param >= 0
        if has_p.any():
            out[:, has_p] *= theta[:, self.param[has_p]]
        has_f = self.feature >= 0
        if has_f.any():
            if x is None:
                raise ValueError("circuit encodes features but none were given")
            out[:, has_f] *= np.atleast_2d(x)[:, self.feature[has_f]]
        return out

    def angle_derivative(self, x: np.ndarray | None) -> np.ndarray:
        """d angle_g / d theta_param(g) per sample (B, G); zero for fixed gates."""
        b = 1 if x is None else np.atleast_2d(x).shape[0]
        out = np.where(self.param >= 0, self.coef, 0.0)
        out = np.tile(out, (b, 1))
        has_f = (self.feature >= 0) & (self.param >= 0)
        if has_f.any():
            out[:, has_f] *= np.atleast_2d(x)[:, self.feature[has_f]]
        return out


@dataclass(frozen=True)
class ReuploadConfig:
    """Layered circuit: ``d`` blocks of [encode] -> variational rotations -> CNOT entangler.

    Features are assigned to qubits round-robin.  ``heads`` lists the
    observables read out (one per class for one-vs-rest); ``measurement`` is
    the single head used for binary tasks and defaults to Z on qubit 0.
    """

    n_qubits: int
    layers: int
    encoding_axis: str = "Y"
    variational_axes: tuple[str, ...] | None = None
    entangler: str = "ring"
    encoding_weights: np.ndarray | None = None
    trainable_encoding: bool = False
    measurement: Observable | None = None
    heads: tuple[Observable, ...] | None = None

    def __post_init__(self):
        if self.layers < 1 or self.n_qubits < 1:
            raise ValueError("need layers >= 1 and n_qubits >= 1")
        if self.encoding_axis not in AXES:
            raise ValueError(f"encoding axis must be one of {AXES}")
        axes = self.variational_axes or (self.encoding_axis,)
        if any(a not in AXES for a in axes):
            raise ValueError(f"variational axes must be drawn from {AXES}")
        object.__setattr__(self, "variational_axes", tuple(axes))
        if self.entangler not in ENTANGLERS:
            raise ValueError(f"entangler must be one of {ENTANGLERS}")
        w = np.ones((self.layers, self.n_qubits)) if self.encoding_weights is None else np.asarray(self.encoding_weights, dtype=float)
        if w.shape != (self.layers, self.n_qubits) or not np.all(np.isfinite(w)):
            raise ValueError("encoding weights must be a finite layers x n_qubits array")
        object.__setattr__(self, "encoding_weights", w)
        if self.heads is None:
            m = self.measurement or Observable.z(0, self.n_qubits)
            object.__setattr__(self, "measurement", m)
            object.__setattr__(self, "heads", (m,))
        elif self.measurement is None:
            object.__setattr__(self, "measurement", self.heads[0])
        for h in self.heads:
            if h.n_qubits != self.n_qubits:
                raise ValueError("observable qubit count does not match the circuit")

    @property
    def n_theta(self) -> int:
        return self.layers * self.n_qubits * len(self.variational_axes)

    @property
    def n_params(self) -> int:
        extra = self.layers * self.n_qubits if self.trainable_encoding else 0
        return self.n_theta + extra

    def entangling_pairs(self) -> list[tuple[int, int]]:
        n = self.n_qubits
        if self.entangler == "none" or n == 1:
            return []
        pairs = [(q, q + 1) for q in range(n - 1)]
        if self.entangler == "ring" and n > 2:
            pairs.append((n - 1, 0))
        return pairs

    def circuit(self, d_x: int | None) -> ParamCircuit:
        """Compile to a :class:`ParamCircuit`; ``d_x=None`` drops the encoding gates."""
        n = self.n_qubits
        if d_x is not None and not 1 <= d_x <= n:
            raise ValueError(f"{d_x} features do not fit on {n} qubits")
        gates, param, feat, coef = [], [], [], []

        def add(g, p=-1, f=-1, c=float("nan")):
            gates.append(g)
            param.append(p)
            feat.append(f)
            coef.append(c)

        slot = 0
        w_slot = self.n_theta
        for layer in range(self.layers):
            if d_x is not None:
                for q in range(n):
                    if self.trainable_encoding:
                        add(GateOp("R" + self.encoding_axis, (q,)), w_slot + layer * n + q, q % d_x, 1.0)
                    else:
                        add(GateOp("R" + self.encoding_axis, (q,)), -1, q % d_x, float(self.encoding_weights[layer, q]))
            for q in range(n):
                for axis in self.variational_axes:
                    add(GateOp("R" + axis, (q,)), slot, -1, 1.0)
                    slot += 1
            for c, t in self.entangling_pairs():
                add(GateOp("CNOT", (c, t)))
        return ParamCircuit(
            tuple(gates), np.array(param, dtype=np.int64), np.array(feat, dtype=np.int64),
            np.array(coef, dtype=float), self.n_params, n,
        )

    def initial_params(self, init: str, rng: np.random.Generator) -> np.ndarray:
        if init == "zeros":
            theta = np.zeros(self.n_theta)
        elif init == "uniform":
            theta = rng.uniform(-math.pi, math.pi, self.n_theta)
        else:
            raise ValueError(f"unknown init {init!r}")
        if self.trainable_encoding:
            theta = np.concatenate([theta, self.encoding_weights.ravel()])
        return theta

    def to_json(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "layers": self.layers,
            "encoding_axis": self.encoding_axis,
            "variational_axes": list(self.variational_axes),
            "entangler": self.entangler,
            "encoding_weights": self.encoding_weights.tolist(),
            "trainable_encoding": self.trainable_encoding,
            "heads": [_obs_to_json(h) for h in self.heads],
        }

    @classmethod
    def from_json(cls, d: dict) -> ReuploadConfig:
        heads = tuple(_obs_from_json(h, d["n_qubits"]) for h in d["heads"])
        return cls(
            n_qubits=d["n_qubits"], layers=d["layers"], encoding_axis=d["encoding_axis"],
            variational_axes=tuple(d["variational_axes"]), entangler=d["entangler"],
            encoding_weights=np.asarray(d["encoding_weights"]), trainable_encoding=d["trainable_encoding"],
            heads=heads,
        )


def _obs_to_json(o: Observable) -> dict:
    if o.terms is not None:
        return {"terms": [[c, w] for c, w in o.terms]}
    if o.diagonal is not None:
        return {"diagonal": o.diagonal.tolist()}
    return {"matrix": qsim.state_to_json(o.matrix.ravel())}


def _obs_from_json(d: dict, n: int) -> Observable:
    if "terms" in d:
        return Observable(n, terms=tuple((c, w) for c, w in d["terms"]))
    if "diagonal" in d:
        return Observable(n, diagonal=np.asarray(d["diagonal"]))
    dim = 1 << n
    return Observable(n, matrix=qsim.state_from_json(d["matrix"]).reshape(dim, dim))


def one_vs_rest_config(n_qubits: int, layers: int, n_c: int, **kw) -> ReuploadConfig:
    """Config with one ``2|c><c| - I`` head per class (binary: a single Z head)."""
    if n_c <= 2:
        return ReuploadConfig(n_qubits, layers, **kw)
    if n_c > 1 << n_qubits:
        raise ValueError(f"{n_c} classes need more than {n_qubits} qubits")
    heads = tuple(Observable.basis_indicator(c, n_qubits) for c in range(n_c))
    return ReuploadConfig(n_qubits, layers, heads=heads, **kw)


def label_targets(labels: np.ndarray, n_heads: int) -> np.ndarray:
    """Head targets: binary labels -> +-1 column; otherwise one-vs-rest +-1 rows."""
    labels = np.asarray(labels)
    if n_heads == 1:
        return np.where(labels > 0, 1.0, -1.0)[:, None]
    return np.where(labels[:, None] == np.arange(n_heads)[None, :], 1.0, -1.0)


# --------------------------------------------------------------------------
# batched evaluation


def _readout_states(heads: Sequence[Observable], states: np.ndarray) -> np.ndarray:
    return np.column_stack([h.expect_batch(states) for h in heads])


def _readout_density(heads: Sequence[Observable], rhos: np.ndarray) -> np.ndarray:
    return np.column_stack([h.expect_density_batch(rhos) for h in heads])


class _Evaluator:
    """Forward passes of one ParamCircuit on a fixed set of inputs.

    ``kind``: ``"features"`` (start from |0..0>, encode rows of ``x``),
    ``"density"`` (evolve density matrices, no encoding) or ``"pairs"``
    (evolve input states; output is the fidelity with per-row targets).
    """

    def __init__(self, cfg: ReuploadConfig, kind: str, inputs: np.ndarray, targets: np.ndarray | None = None):
        self.cfg = cfg
        self.kind = kind
        self.inputs = np.asarray(inputs)
        self.targets = targets
        if kind == "features":
            x = np.asarray(inputs, dtype=float)
            if x.ndim == 1:
                x = x[None, :]
            self.inputs = x
            self.circuit = cfg.circuit(x.shape[1])
        elif kind in ("density", "pairs"):
            self.circuit = cfg.circuit(None)
            dim = self.inputs.shape[1]
            if dim != 1 << cfg.n_qubits:
                raise ValueError(f"input dimension {dim} does not match {cfg.n_qubits} qubits")
        else:
            raise ValueError(kind)
        self.n_circuits = 0

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    def _run(self, angles: np.ndarray, rows: np.ndarray) -> np.ndarray:
        """Outputs (B, H) for angle rows evaluated on sample indices ``rows``."""
        gates = self.circuit.gates
        self.n_circuits += len(rows)
        if self.kind == "features":
            psi = np.zeros((len(rows), 1 << self.cfg.n_qubits), dtype=complex)
            psi[:, 0] = 1.0
            out = qsim.run_batch(gates, psi, angles)
            return _readout_states(self.cfg.heads, out)
        if self.kind == "density":
            out = qsim.run_density_batch(gates, self.inputs[rows], angles)
            return _readout_density(self.cfg.heads, out)
        out = qsim.run_batch(gates, self.inputs[rows], angles)
        fid = np.abs(np.einsum("bi,bi->b", self.targets[rows].conj(), out)) ** 2
        fid = np.clip(fid, 0.0, 1.0)  # round-off can overshoot 1
        return fid[:, None]

    def _feats(self, rows):
        return self.inputs[rows] if self.kind == "features" else None

    def forward(self, theta: np.ndarray, rows: np.ndarray | None = None) -> np.ndarray:
        rows = np.arange(self.n) if rows is None else np.asarray(rows)
        th = np.broadcast_to(np.asarray(theta, dtype=float), (len(rows), self.circuit.n_params))
        return self._run(self.circuit.angles(th, self._feats(rows)), rows)

    def jacobian(self, theta: np.ndarray, rows: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Outputs (R, H) and parameter-shift Jacobian (R, H, m) for sample ``rows``."""
        rows = np.arange(self.n) if rows is None else np.asarray(rows)
        pc = self.circuit
        theta = np.asarray(theta, dtype=float)
        r = len(rows)
        th = np.broadcast_to(theta, (r, pc.n_params))
        feats = self._feats(rows)
        base = pc.angles(th, feats)  # (R, G)
        shifted = np.flatnonzero(pc.trainable)
        for g in shifted:
            if pc.gates[g].kind not in qsim.ROTATIONS:
                raise ValueError(f"shift rule needs a rotation gate, got {pc.gates[g].kind}")
        s = len(shifted)
        # block layout: [base; +shift for each gate; -shift for each gate], sample-major
        ang = np.repeat(base[:, None, :], 1 + 2 * s, axis=1)
        k = np.arange(s)
        ang[:, 1 + k, shifted] += SHIFT
        ang[:, 1 + s + k, shifted] -= SHIFT
        out = self._run(ang.reshape(-1, base.shape[1]), np.repeat(rows, 1 + 2 * s))
        out = out.reshape(r, 1 + 2 * s, -1)
        values = out[:, 0, :]
        dgate = 0.5 * (out[:, 1 : 1 + s, :] - out[:, 1 + s :, :])  # (R, S, H)
        dangle = pc.angle_derivative(feats)
        if dangle.shape[0] == 1 and r > 1:
            dangle = np.repeat(dangle, r, axis=0)
        jac = np.zeros((r, values.shape[1], pc.n_params))
        contrib = dgate * dangle[:, shifted][:, :, None]  # (R, S, H)
        for idx, g in enumerate(shifted):
            jac[:, :, pc.param[g]] += contrib[:, idx, :]
        return values, jac


# --------------------------------------------------------------------------
# public forward / loss API


def _as_params(cfg: ReuploadConfig, params) -> np.ndarray:
    p = np.asarray(params, dtype=float).ravel()
    if p.shape != (cfg.n_params,):
        raise ValueError(f"expected {cfg.n_params} parameters, got {p.size}")
    if not np.all(np.isfinite(p)):
        raise ValueError("unbound or non-finite parameter")
    return p


def qnn_outputs(cfg: ReuploadConfig, params, x) -> np.ndarray:
    """All head values for feature rows ``x`` (N, d) -> (N, H)."""
    return _Evaluator(cfg, "features", x).forward(_as_params(cfg, params))


def qnn_forward(cfg: ReuploadConfig, params, x) -> float:
    """``<M>`` of the first head for one feature vector."""
    return float(qnn_outputs(cfg, params, np.asarray(x, dtype=float)[None, :])[0, 0])


def qnn_forward_density(cfg: ReuploadConfig, params, rho) -> float:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (1 << cfg.n_qubits,) * 2:
        raise ValueError("density matrix dimension does not match the circuit")
    return float(_Evaluator(cfg, "density", rho[None]).forward(_as_params(cfg, params))[0, 0])


def qnn_loss(pred: float, y: float) -> float:
    return float((pred - y) ** 2)


def _input_kind(x: np.ndarray) -> str:
    return "density" if np.asarray(x).ndim == 3 else "features"


def sample_losses(cfg: ReuploadConfig, params, x, targets) -> np.ndarray:
    """Per-sample MSE averaged over heads; ``targets`` is (N,) or (N, H)."""
    out = _Evaluator(cfg, _input_kind(x), x).forward(_as_params(cfg, params))
    t = np.asarray(targets, dtype=float).reshape(out.shape[0], -1)
    return ((out - t) ** 2).mean(axis=1)


def weighted_risk(cfg: ReuploadConfig, params, x, targets, weights=None, mode: str = "normalized") -> float:
    losses = sample_losses(cfg, params, x, targets)
    w = np.ones(len(losses)) if weights is None else weights
    return weighted_mean(losses, w, mode)


def _loss_grad(ev: _Evaluator, theta, targets, rows) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample losses (R,) and gradients (R, m) of the head-averaged MSE."""
    values, jac = ev.jacobian(theta, rows)
    resid = values - targets[rows]
    losses = (resid**2).mean(axis=1)
    grads = (2.0 * resid[:, :, None] * jac).mean(axis=1)
    return losses, grads


def parameter_shift_grad(cfg: ReuploadConfig, params, sample, y) -> np.ndarray:
    """Gradient of ``(<M> - y)^2`` (head-averaged) by the parameter-shift rule."""
    sample = np.asarray(sample)
    kind = "density" if sample.ndim == 2 else "features"
    ev = _Evaluator(cfg, kind, sample[None])
    t = np.asarray(y, dtype=float).reshape(1, -1)
    return _loss_grad(ev, _as_params(cfg, params), t, np.array([0]))[1][0]


def finite_difference_grad(fn, params, h: float = 1e-5) -> np.ndarray:
    """Central differences of a scalar function of the parameter vector."""
    p = np.asarray(params, dtype=float)
    out = np.empty_like(p)
    for k in range(p.size):
        e = np.zeros_like(p)
        e[k] = h
        out[k] = (fn(p + e) - fn(p - e)) / (2 * h)
    return out


# --------------------------------------------------------------------------
# training


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    max_epochs: int = 50
    seed: int = 0
    weight_mode: str = "normalized"
    gradient_mode: str = "parameter-shift"
    init: str = "uniform"
    full_batch: bool = False
    tol: float = 1e-9

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning rate must be nonnegative")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.weight_mode not in ("normalized", "raw"):
            raise ValueError("weight_mode must be 'normalized' or 'raw'")
        if self.gradient_mode not in ("parameter-shift", "finite-difference"):
            raise ValueError("gradient_mode must be 'parameter-shift' or 'finite-difference'")
        if self.init not in ("zeros", "uniform"):
            raise ValueError("init must be 'zeros' or 'uniform'")


@dataclass
class TrainReport:
    loss_trace: list[float]
    params: np.ndarray
    wall_time: float
    grad_evals: int
    initial_loss: float
    epochs: list[dict] = field(default_factory=list)
    converged: bool = False
    extra: dict = field(default_factory=dict)

    def write_epoch_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "weighted_risk", "grad_norm", "wall_ms"])
            for row in self.epochs:
                w.writerow([row["epoch"], f"{row['weighted_risk']:.12g}", f"{row['grad_norm']:.12g}", f"{row['wall_ms']:.3f}"])


def save_checkpoint(path, cfg: ReuploadConfig, report: TrainReport) -> None:
    theta = report.params[: cfg.n_theta]
    w = report.params[cfg.n_theta :] if cfg.trainable_encoding else cfg.encoding_weights.ravel()
    Path(path).write_text(json.dumps({
        "config": cfg.to_json(),
        "theta": theta.tolist(),
        "w": np.asarray(w).tolist(),
        "epoch": len(report.loss_trace),
        "loss_trace": report.loss_trace,
    }, indent=2))


def load_checkpoint(path) -> tuple[ReuploadConfig, np.ndarray]:
    d = json.loads(Path(path).read_text())
    cfg = ReuploadConfig.from_json(d["config"])
    params = np.asarray(d["theta"], dtype=float)
    if cfg.trainable_encoding:
        params = np.concatenate([params, np.asarray(d["w"], dtype=float)])
    return cfg, params


def _update_weights(weights, n: int, mode: str) -> np.ndarray:
    g = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if g.shape != (n,):
        raise ValueError("weights must align with the training samples")
    if mode == "normalized":
        return g * n / g.sum()
    return g


def _fit(ev: _Evaluator, targets: np.ndarray, theta: np.ndarray, weights, tcfg: TrainConfig, loss_sign: float = 1.0) -> TrainReport:
    """Shared SGD / full-batch loop.

    ``loss_sign=+1`` with ``targets`` = head targets trains MSE; the compiler
    passes ``loss_sign=-1`` and ``targets=None`` (loss = 1 - fidelity).
    """
    n = ev.n
    step_w = _update_weights(weights, n, tcfg.weight_mode)
    risk_w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    rng = np.random.default_rng(tcfg.seed)
    eta = tcfg.learning_rate

    def losses_and_grads(th, rows):
        if tcfg.gradient_mode == "finite-difference":
            losses = per_sample(th, rows)
            grads = np.stack([
                finite_difference_grad(lambda p, r=r: float(per_sample(p, np.array([r]))[0]), th) for r in rows
            ])
            return losses, grads
        if targets is None:
            vals, jac = ev.jacobian(th, rows)
            return 1.0 - vals[:, 0], -jac[:, 0, :]
        return _loss_grad(ev, th, targets, rows)

    def per_sample(th, rows=None):
        out = ev.forward(th, rows)
        if targets is None:
            return 1.0 - out[:, 0]
        t = targets if rows is None else targets[rows]
        return ((out - t) ** 2).mean(axis=1)

    def risk(th):
        return weighted_mean(per_sample(th), risk_w, tcfg.weight_mode)

    start = time.perf_counter()
    current = risk(theta)
    initial = current
    trace, epochs = [], []
    converged = False
    for epoch in range(1, tcfg.max_epochs + 1):
        t0 = time.perf_counter()
        if tcfg.full_batch:
            _, grads = losses_and_grads(theta, np.arange(n))
            g = (step_w[:, None] * grads).sum(axis=0) / n
            theta = theta - eta * g
            gnorm = float(np.linalg.norm(g))
        else:
            sq = 0.0
            for j in rng.permutation(n):
                _, grads = losses_and_grads(theta, np.array([j]))
                theta = theta - eta * step_w[j] * grads[0]
                sq += float(grads[0] @ grads[0])
            gnorm = math.sqrt(sq / n)
        new = risk(theta)
        trace.append(new)
        epochs.append({"epoch": epoch, "weighted_risk": new, "grad_norm": gnorm, "wall_ms": 1e3 * (time.perf_counter() - t0)})
        if not np.isfinite(new) or new > DIVERGENCE_LIMIT:
            raise FloatingPointError(f"training diverged at epoch {epoch} (risk {new:.3e})")
        if abs(current - new) < tcfg.tol:
            converged = True
            current = new
            break
        current = new
    return TrainReport(trace, theta, time.perf_counter() - start, ev.n_circuits, initial, epochs, converged)


def train_qnn(cfg: ReuploadConfig, data: LabeledDataset, weights=None, tcfg: TrainConfig = TrainConfig(), params=None) -> TrainReport:
    """Weighted per-sample gradient descent on the head-averaged MSE."""
    if data.n == 0:
        raise ValueError("empty training set")
    kind = _input_kind(data.features)
    ev = _Evaluator(cfg, kind, data.features)
    targets = label_targets(data.labels, len(cfg.heads))
    rng = np.random.default_rng(tcfg.seed)
    theta = cfg.initial_params(tcfg.init, rng) if params is None else _as_params(cfg, params).copy()
    return _fit(ev, targets, theta, weights, tcfg)


def predict_qnn(cfg: ReuploadConfig, params, x) -> np.ndarray:
    """Class predictions: sign of the single head, or argmax over heads."""
    out = _Evaluator(cfg, _input_kind(x), x).forward(_as_params(cfg, params))
    if out.shape[1] == 1:
        return (out[:, 0] >= 0).astype(np.int64)
    return np.argmax(out, axis=1)


def qnn_accuracy(cfg: ReuploadConfig, params, data: LabeledDataset) -> float:
    return float(np.mean(predict_qnn(cfg, params, data.features) == data.labels))


def compile_ansatz(n_qubits: int, layers: int) -> ReuploadConfig:
    """Hardware-efficient ansatz: ZYZ rotations on every qubit, then a CNOT chain."""
    return ReuploadConfig(n_qubits, layers, encoding_axis="Z", variational_axes=("Z", "Y", "Z"), entangler="line")


def compile_fidelities(cfg: ReuploadConfig, params, pairs: StatePairDataset) -> np.ndarray:
    ev = _Evaluator(cfg, "pairs", pairs.inputs, pairs.targets)
    return ev.forward(_as_params(cfg, params))[:, 0]


def compile_success_fraction(cfg: ReuploadConfig, params, pairs: StatePairDataset, threshold: float = COMPILE_THRESHOLD) -> float:
    """Fraction of pairs whose output is within ``threshold`` trace distance of the target."""
    fid = compile_fidelities(cfg, params, pairs)
    dist = np.sqrt(np.clip(1.0 - fid, 0.0, None))
    return float(np.mean(dist < threshold))


def train_compiler(
    pairs: StatePairDataset,
    cfg: ReuploadConfig,
    tcfg: TrainConfig = TrainConfig(),
    weights=None,
    test: StatePairDataset | None = None,
    params=None,
) -> TrainReport:
    """Minimise the mean squared trace distance ``1 - |<target|V(theta)|input>|^2``."""
    if pairs.n_qubits != cfg.n_qubits:
        raise ValueError("ansatz qubit count does not match the data")
    ev = _Evaluator(cfg, "pairs", pairs.inputs, pairs.targets)
    rng = np.random.default_rng(tcfg.seed)
    theta = cfg.initial_params(tcfg.init, rng) if params is None else _as_params(cfg, params).copy()
    report = _fit(ev, None, theta, weights, tcfg)
    if test is not None:
        report.extra["test_success_fraction"] = compile_success_fraction(cfg, report.params, test)
    report.extra["train_success_fraction"] = compile_success_fraction(cfg, report.params, pairs)
    return report
