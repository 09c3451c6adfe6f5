"""Pauli-Z feature map kernels and the classical RBF kernel."""

from __future__ import annotations

import hashlib
import json
import struct
import time
from dataclasses import asdict, dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

from . import _backend, qsim
from .data import LabeledDataset

VARIANTS = ("eq22", "eq9")


@dataclass(frozen=True)
class FeatureMapConfig:
    """``(U(x) H^n)^repetitions |0...0>`` with a Z / ZZ diagonal ``U(x)``.

    ``variant="eq22"`` uses pair coefficients ``x_i x_j``; ``"eq9"`` uses
    ``(pi - x_i)(pi - x_j)``.  Single-qubit coefficients are ``x_i`` in both.
    """

    n_qubits: int
    repetitions: int = 2
    include_pairwise: bool = True
    variant: str = "eq22"

    def __post_init__(self):
        if self.n_qubits < 1 or self.repetitions < 1:
            raise ValueError("need n_qubits >= 1 and repetitions >= 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.n_qubits > qsim.MAX_QUBITS:
            raise ValueError("too many qubits")

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True).encode()).hexdigest()[:16]

    def circuit(self, x) -> list[qsim.GateOp]:
        """Explicit gate list (H layer, RZ(2 c_i), ZZ(c_ij)) per repetition."""
        x = self._check(x)
        n = self.n_qubits
        single, pairs = self._coefficients(x[None, :])
        gates = []
        for _ in range(self.repetitions):
            gates += [qsim.GateOp("H", (q,)) for q in range(n)]
            gates += [qsim.GateOp("RZ", (q,), 2.0 * float(single[0, q])) for q in range(n)]
            if self.include_pairwise:
                gates += [qsim.GateOp("ZZ", (i, j), float(pairs[0, p])) for p, (i, j) in enumerate(combinations(range(n), 2))]
        return gates

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n_qubits:
            raise ValueError(f"feature length {x.shape[-1]} != n_qubits {self.n_qubits}")
        return x

    def _coefficients(self, x: np.ndarray):
        pairs = list(combinations(range(self.n_qubits), 2))
        if not pairs or not self.include_pairwise:
            return x, np.zeros((x.shape[0], 0))
        i, j = np.array(pairs).T
        base = x if self.variant == "eq22" else np.pi - x
        return x, base[:, i] * base[:, j]


def _signs(n: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(1 << n)
    z = 1.0 - 2.0 * ((idx[None, :] >> (n - 1 - np.arange(n)[:, None])) & 1)
    pairs = list(combinations(range(n), 2))
    zz = np.array([z[i] * z[j] for i, j in pairs]).reshape(len(pairs), 1 << n)
    return z, zz


def _hadamard_all(psi: np.ndarray, n: int) -> np.ndarray:
    b = psi.shape[0]
    v = psi.reshape((b,) + (2,) * n)
    for q in range(n):
        a0 = np.take(v, 0, axis=q + 1)
        a1 = np.take(v, 1, axis=q + 1)
        v = np.stack([a0 + a1, a0 - a1], axis=q + 1)
    return v.reshape(b, -1) / np.sqrt(2.0) ** n


def feature_states(cfg: FeatureMapConfig, x: np.ndarray) -> np.ndarray:
    """Encoded states for every row of ``x`` (shape (N, N_q)) as (N, 2**N_q)."""
    x = cfg._check(np.atleast_2d(x))
    n = cfg.n_qubits
    z, zz = _signs(n)
    single, pair = cfg._coefficients(x)
    # RZ(2c) = exp(-i c Z), ZZ(c) = exp(-i c ZZ): one diagonal phase per basis state
    phase = single @ z
    if pair.shape[1]:
        phase = phase + pair @ zz
    diag = np.exp(-1j * phase)
    psi = np.zeros((x.shape[0], 1 << n), dtype=complex)
    psi[:, 0] = 1.0
    for _ in range(cfg.repetitions):
        psi = _hadamard_all(psi, n) * diag
    return psi


def feature_state(cfg: FeatureMapConfig, x) -> np.ndarray:
    return feature_states(cfg, np.asarray(x, dtype=float)[None, :])[0]


def kernel_entry(cfg: FeatureMapConfig, x, x2) -> float:
    return qsim.overlap_sq(feature_state(cfg, x), feature_state(cfg, x2))


@dataclass(frozen=True)
class KernelMatrix:
    entries: np.ndarray
    kind: str
    params: dict
    rows: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def restrict(self, idx) -> KernelMatrix:
        idx = np.asarray(idx, dtype=np.int64)
        base = self.rows if self.rows is not None else np.arange(self.n)
        return KernelMatrix(self.entries[np.ix_(idx, idx)], self.kind, self.params, base[idx])

    def save(self, path) -> None:
        """Binary: JSON header line, then row-major little-endian float64."""
        header = json.dumps({"kind": self.kind, "n": self.n, "config_hash": self.params.get("hash", "")}).encode()
        with open(path, "wb") as fh:
            fh.write(struct.pack("<I", len(header)))
            fh.write(header)
            fh.write(np.ascontiguousarray(self.entries, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> KernelMatrix:
        raw = Path(path).read_bytes()
        (hlen,) = struct.unpack("<I", raw[:4])
        header = json.loads(raw[4 : 4 + hlen])
        n = header["n"]
        entries = np.frombuffer(raw, dtype="<f8", offset=4 + hlen).reshape(n, n).copy()
        return cls(entries, header["kind"], {"hash": header["config_hash"]})

    def to_csv(self, path) -> None:
        np.savetxt(path, self.entries, delimiter=",", fmt="%.17g")


def dataset_digest(x: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(x, dtype=float).tobytes()).hexdigest()[:16]


def kernel_matrix(cfg: FeatureMapConfig, ds: LabeledDataset | np.ndarray, cache_dir=None) -> KernelMatrix:
    """Quantum Gram matrix from cached feature states.

    ``params`` records the wall time of state encoding (linear in N) and of
    entry collection (quadratic) separately.  With ``cache_dir`` the matrix
    is stored under the (dataset, config) hash and reloaded on the next call.
    """
    x = ds.features if isinstance(ds, LabeledDataset) else np.asarray(ds, dtype=float)
    x = np.asarray(x, dtype=float).reshape(x.shape[0], -1)
    key = f"{dataset_digest(x)}-{cfg.digest()}"
    params = {"feature_map": asdict(cfg), "hash": key}
    path = Path(cache_dir) / f"kernel-{key}.bin" if cache_dir is not None else None
    if path is not None and path.exists():
        cached = KernelMatrix.load(path)
        return KernelMatrix(cached.entries, "quantum", params)
    t0 = time.perf_counter()
    states = feature_states(cfg, x)
    t1 = time.perf_counter()
    entries = _backend.gram_overlaps(states)
    t2 = time.perf_counter()
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        KernelMatrix(entries, "quantum", params).save(path)
    timing = {"states_ms": 1e3 * (t1 - t0), "entries_ms": 1e3 * (t2 - t1)}
    return KernelMatrix(entries, "quantum", dict(params, **timing))


def kernel_rows(cfg: FeatureMapConfig, x: np.ndarray, support: np.ndarray) -> np.ndarray:
    """``kappa(x_i, s_j)`` for every query row ``x_i`` and support row ``s_j``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    support = np.asarray(support, dtype=float)
    if support.size == 0:
        return np.zeros((x.shape[0], 0))
    return _backend.cross_overlaps(feature_states(cfg, x), feature_states(cfg, np.atleast_2d(support)))


def kernel_row(cfg: FeatureMapConfig, x, support) -> np.ndarray:
    return kernel_rows(cfg, np.asarray(x, dtype=float)[None, :], support)[0]


def median_sigma(x: np.ndarray) -> float:
    """Median pairwise Euclidean distance (1.0 if every row coincides)."""
    x = np.asarray(x, dtype=float).reshape(len(x), -1)
    sq = _sq_dists(x, x)
    iu = np.triu_indices(len(x), k=1)
    med = float(np.median(np.sqrt(sq[iu]))) if len(iu[0]) else 0.0
    return med if med > 0 else 1.0


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    sq = (a**2).sum(1)[:, None] + (b**2).sum(1)[None, :] - 2.0 * a @ b.T
    return np.maximum(sq, 0.0)


def rbf_matrix(ds: LabeledDataset | np.ndarray, sigma: float | None = None) -> KernelMatrix:
    x = ds.features if isinstance(ds, LabeledDataset) else np.asarray(ds, dtype=float)
    x = np.asarray(x, dtype=float).reshape(x.shape[0], -1)
    if sigma is None:
        sigma = median_sigma(x)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    k = np.exp(-_sq_dists(x, x) / (2.0 * sigma**2))
    np.fill_diagonal(k, 1.0)
    return KernelMatrix(0.5 * (k + k.T), "rbf", {"sigma": float(sigma)})


def rbf_rows(x: np.ndarray, support: np.ndarray, sigma: float) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    support = np.atleast_2d(np.asarray(support, dtype=float))
    return np.exp(-_sq_dists(x, support) / (2.0 * sigma**2))
