"""Dataset ingestion, preprocessing and the analytic task generators."""

from __future__ import annotations

import csv
import gzip
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import qsim
from .qsim import GateOp

SEPARABLE, ENTANGLED, STEERABLE, NONLOCAL = 0, 1, 2, 3
CORRELATION_NAMES = ("separable", "entangled", "one-way-steerable", "non-local")


@dataclass(frozen=True)
class LabeledDataset:
    """Rows of ``features`` (first axis) with contiguous integer labels.

    Features are usually an ``(N, d_x)`` real matrix, but quantum tasks store
    density matrices ``(N, D, D)`` or statevectors ``(N, D)`` here as well.
    """

    features: np.ndarray
    labels: np.ndarray
    n_c: int
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        feats = np.asarray(self.features)
        labels = np.asarray(self.labels, dtype=np.int64)
        if feats.ndim < 2 or feats.shape[0] < 1:
            raise ValueError("need at least one row of features")
        if labels.shape != (feats.shape[0],):
            raise ValueError("one label per row required")
        if not np.all(np.isfinite(feats)):
            raise ValueError("features must be finite")
        if labels.min() < 0 or labels.max() >= self.n_c:
            raise ValueError("labels must lie in [0, n_c)")
        if len(np.unique(labels)) != self.n_c:
            raise ValueError("every class must appear at least once")
        feats.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d_x(self) -> int:
        return int(np.prod(self.features.shape[1:]))

    def subset(self, idx) -> LabeledDataset:
        idx = np.asarray(idx, dtype=np.int64)
        labels = self.labels[idx]
        present = np.unique(labels)
        if len(present) == self.n_c:
            return LabeledDataset(self.features[idx], labels, self.n_c, dict(self.provenance))
        # a subset may miss classes; keep the original numbering in provenance
        remap = {int(c): i for i, c in enumerate(present)}
        prov = dict(self.provenance, class_map=[int(c) for c in present])
        return LabeledDataset(self.features[idx], np.array([remap[int(c)] for c in labels]), len(present), prov)

    def class_indices(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.labels == c)

    def to_json(self) -> dict:
        feats = self.features
        out = {"n_c": self.n_c, "d_x": self.d_x, "labels": self.labels.tolist(), "shape": list(feats.shape)}
        if np.iscomplexobj(feats):
            flat = feats.reshape(self.n, -1)
            out["features"] = [qsim.state_to_json(row) for row in flat]
            out["complex"] = True
        else:
            out["features"] = feats.reshape(self.n, -1).tolist()
        out["provenance"] = self.provenance
        return out

    @classmethod
    def from_json(cls, d: dict) -> LabeledDataset:
        if d.get("complex"):
            feats = np.array([qsim.state_from_json(r) for r in d["features"]])
        else:
            feats = np.asarray(d["features"], dtype=float)
        shape = d.get("shape")
        if shape is not None:
            feats = feats.reshape(shape)
        return cls(feats, np.asarray(d["labels"]), int(d["n_c"]), d.get("provenance", {}))


def save_dataset(ds: LabeledDataset, path) -> None:
    Path(path).write_text(json.dumps(ds.to_json()))


def load_dataset(path) -> LabeledDataset:
    """Load a dataset JSON file, or a CSV (label in the last column)."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return load_csv(path, -1)
    return LabeledDataset.from_json(json.loads(path.read_text()))


def remap_labels(raw: Sequence) -> tuple[np.ndarray, list]:
    """Contiguous labels in order of first appearance, plus the original values."""
    order: dict = {}
    out = np.empty(len(raw), dtype=np.int64)
    for i, v in enumerate(raw):
        out[i] = order.setdefault(v, len(order))
    return out, list(order)


def load_csv(path, label_column: int | str = -1) -> LabeledDataset:
    """Read a headed CSV; ``label_column`` is an index or a header name."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]
    if len(rows) < 2:
        raise ValueError(f"{path}: empty file (need a header and at least one row)")
    header, body = rows[0], rows[1:]
    width = len(header)
    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if label_column not in header:
            raise ValueError(f"{path}: no column named {label_column!r}")
        col = header.index(label_column)
    else:
        col = int(label_column) % width
    feats, raw_labels = [], []
    for lineno, row in enumerate(body, start=2):
        if len(row) != width:
            raise ValueError(f"{path}:{lineno}: ragged row ({len(row)} cells, expected {width})")
        vals = []
        for j, cell in enumerate(row):
            if j == col:
                continue
            try:
                vals.append(float(cell))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric feature cell {cell!r}") from None
        try:
            lab = float(row[col])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-numeric label {row[col]!r}") from None
        if lab != int(lab):
            raise ValueError(f"{path}:{lineno}: label {row[col]!r} is not an integer")
        feats.append(vals)
        raw_labels.append(int(lab))
    labels, original = remap_labels(raw_labels)
    return LabeledDataset(
        np.asarray(feats, dtype=float).reshape(len(body), width - 1),
        labels,
        len(original),
        {"generator": "csv", "source": str(path), "original_labels": original},
    )


def _read_idx(path) -> np.ndarray:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4 or raw[0] != 0 or raw[1] != 0:
        raise ValueError(f"{path}: not an IDX file")
    dtypes = {0x08: ">u1", 0x09: ">i1", 0x0B: ">i2", 0x0C: ">i4", 0x0D: ">f4", 0x0E: ">f8"}
    if raw[2] not in dtypes:
        raise ValueError(f"{path}: unknown IDX type code {raw[2]:#x}")
    ndim = raw[3]
    dims = struct.unpack(">" + "I" * ndim, raw[4 : 4 + 4 * ndim])
    data = np.frombuffer(raw, dtype=dtypes[raw[2]], offset=4 + 4 * ndim)
    return data.reshape(dims)


def load_idx(images_path, labels_path) -> LabeledDataset:
    """Read an IDX image/label pair (e.g. MNIST-style corpora), flattened per row."""
    images = _read_idx(images_path)
    raw_labels = _read_idx(labels_path)
    if images.shape[0] != raw_labels.shape[0]:
        raise ValueError("image and label counts differ")
    labels, original = remap_labels(raw_labels.tolist())
    return LabeledDataset(
        images.reshape(images.shape[0], -1).astype(float),
        labels,
        len(original),
        {"generator": "idx", "source": str(images_path), "original_labels": original},
    )


# --------------------------------------------------------------------------
# preprocessing


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) @ self.components.T

    def inverse_transform(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float) @ self.components + self.mean


def pca_fit_transform(ds: LabeledDataset, d_out: int) -> tuple[PcaModel, LabeledDataset]:
    """Project onto the top ``d_out`` eigenvectors of the sample covariance."""
    x = np.asarray(ds.features, dtype=float).reshape(ds.n, -1)
    n, d = x.shape
    if not 1 <= d_out <= min(n, d):
        raise ValueError(f"d_out={d_out} outside [1, {min(n, d)}]")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / max(n - 1, 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:d_out]
    var = np.clip(evals[order], 0.0, None)
    comps = evecs[:, order].T
    # sign gauge: largest-magnitude loading positive
    flip = np.sign(comps[np.arange(d_out), np.abs(comps).argmax(axis=1)])
    comps = comps * flip[:, None]
    model = PcaModel(mean, comps, var)
    prov = dict(ds.provenance, pca={"d_out": d_out})
    return model, LabeledDataset(model.transform(x), ds.labels, ds.n_c, prov)


@dataclass(frozen=True)
class ScalerParams:
    min: np.ndarray
    max: np.ndarray
    lo: float
    hi: float

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        span = self.max - self.min
        mid = 0.5 * (self.lo + self.hi)
        safe = np.where(span > 0, span, 1.0)
        out = self.lo + (x - self.min) / safe * (self.hi - self.lo)
        return np.where(span > 0, out, mid)


def scale_features(ds: LabeledDataset, lo: float = 0.0, hi: float = math.pi) -> tuple[ScalerParams, LabeledDataset]:
    """Affinely map every feature column onto ``[lo, hi]``."""
    if not hi > lo:
        raise ValueError("need hi > lo")
    x = np.asarray(ds.features, dtype=float).reshape(ds.n, -1)
    params = ScalerParams(x.min(axis=0), x.max(axis=0), float(lo), float(hi))
    prov = dict(ds.provenance, scale=[lo, hi])
    return params, LabeledDataset(params.transform(x), ds.labels, ds.n_c, prov)


def split_indices(labels: np.ndarray, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if len(idx) < 2:
            raise ValueError(f"class {c} has fewer than 2 members; cannot stratify")
        idx = rng.permutation(idx)
        k = min(max(int(round(test_fraction * len(idx))), 1), len(idx) - 1)
        test.append(idx[:k])
        train.append(idx[k:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def split(ds: LabeledDataset, test_fraction: float, seed: int) -> tuple[LabeledDataset, LabeledDataset]:
    """Stratified, seeded train/test partition."""
    tr, te = split_indices(ds.labels, test_fraction, seed)
    return ds.subset(tr), ds.subset(te)


def gaussian_mixture(n: int, dim: int, n_components: int, seed: int, spread: float = 3.0) -> LabeledDataset:
    """Unlabeled-style feature cloud; labels record the generating component."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(scale=spread, size=(n_components, dim))
    comp = np.arange(n) % n_components
    rng.shuffle(comp)
    x = centers[comp] + rng.standard_normal((n, dim))
    labels, _ = remap_labels(comp.tolist())
    return LabeledDataset(
        x, labels, n_components,
        {"generator": "gaussian_mixture", "seed": seed, "params": {"n": n, "dim": dim, "n_components": n_components}},
    )


# --------------------------------------------------------------------------
# correlation-identification task


def nonlocal_threshold(theta: float) -> float:
    return 1.0 / math.sqrt(1.0 + math.sin(2.0 * theta) ** 2)


def correlation_label(p: float, theta: float) -> int:
    """Closed-form correlation class of ``rho_AB(p, theta)``."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p={p} outside (0, 1)")
    if not 0.0 < theta < 2.0 * math.pi:
        raise ValueError(f"theta={theta} outside (0, 2pi)")
    if p < 1.0 / 3.0:
        return SEPARABLE
    t = nonlocal_threshold(theta)
    if p > t:
        return NONLOCAL
    if p > 1.0 / math.sqrt(2.0):
        return STEERABLE
    return ENTANGLED


def correlation_state(p: float, theta: float) -> np.ndarray:
    """``p |psi><psi| + (1 - p) I/2 (x) tr_A |psi><psi|`` with ``|psi> = cos|00> + sin|11>``."""
    c, s = math.cos(theta), math.sin(theta)
    psi = np.array([c, 0.0, 0.0, s], dtype=complex)
    proj = np.outer(psi, psi.conj())
    reduced_b = np.diag([c * c, s * s]).astype(complex)
    return p * proj + (1.0 - p) * np.kron(np.eye(2) / 2.0, reduced_b)


@dataclass(frozen=True)
class CorrelationSample:
    p: float
    theta: float
    rho: np.ndarray
    label: int


def gen_correlation_dataset(n: int, seed: int) -> list[CorrelationSample]:
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        # open intervals: resample the (measure-zero) endpoints
        p = 0.0
        while not 0.0 < p < 1.0:
            p = rng.uniform(0.0, 1.0)
        theta = 0.0
        while not 0.0 < theta < 2 * math.pi:
            theta = rng.uniform(0.0, 2 * math.pi)
        out.append(CorrelationSample(p, theta, correlation_state(p, theta), correlation_label(p, theta)))
    return out


def correlation_to_dataset(samples: Sequence[CorrelationSample], seed: int | None = None) -> LabeledDataset:
    rhos = np.stack([s.rho for s in samples])
    labels = np.array([s.label for s in samples])
    present = sorted(set(labels.tolist()))
    remap = {c: i for i, c in enumerate(present)}
    prov = {
        "generator": "correlation",
        "seed": seed,
        "params": {"p": [s.p for s in samples], "theta": [s.theta for s in samples]},
        "class_map": present,
    }
    return LabeledDataset(rhos, np.array([remap[c] for c in labels.tolist()]), len(present), prov)


# --------------------------------------------------------------------------
# compiling task


def random_target_unitary(n_qubits: int, n_gates: int, seed: int) -> list[GateOp]:
    """Random circuit over {RX, RY, RZ, CNOT}; CNOT draws are redrawn on one qubit."""
    if n_qubits < 1 or n_gates < 1:
        raise ValueError("need n_qubits >= 1 and n_gates >= 1")
    rng = np.random.default_rng(seed)
    kinds = ("RX", "RY", "RZ", "CNOT")
    gates = []
    while len(gates) < n_gates:
        kind = kinds[rng.integers(4)]
        if kind == "CNOT":
            if n_qubits == 1:
                continue
            c, t = rng.choice(n_qubits, size=2, replace=False)
            gates.append(GateOp("CNOT", (int(c), int(t))))
        else:
            q = int(rng.integers(n_qubits))
            gates.append(GateOp(kind, (q,), float(rng.uniform(0.0, 2 * math.pi))))
    return gates


@dataclass(frozen=True)
class StatePairDataset:
    inputs: np.ndarray
    targets: np.ndarray
    n_qubits: int

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    def subset(self, idx) -> StatePairDataset:
        idx = np.asarray(idx, dtype=np.int64)
        return StatePairDataset(self.inputs[idx], self.targets[idx], self.n_qubits)

    def as_labeled(self) -> LabeledDataset:
        """Inputs as a one-class dataset (for coreset selection)."""
        return LabeledDataset(self.inputs, np.zeros(self.n, dtype=np.int64), 1, {"generator": "compile"})


def gen_compiling_dataset(target: Sequence[GateOp], n: int, seed: int, n_qubits: int | None = None) -> StatePairDataset:
    if n < 1:
        raise ValueError("n must be positive")
    if n_qubits is None:
        n_qubits = 1 + max((max(g.targets) for g in target), default=0)
    rng = np.random.default_rng(seed)
    inputs = qsim.haar_states(n, n_qubits, rng)
    targets = qsim.run_batch(list(target), inputs)
    return StatePairDataset(inputs, targets, n_qubits)
