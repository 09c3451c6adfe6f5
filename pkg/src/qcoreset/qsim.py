"""Exact statevector / density-matrix simulator.

Conventions used everywhere in the package:

* qubit 0 is the most significant bit of a basis index,
* ``RX/RY/RZ(phi) = exp(-i phi P / 2)``,
* ``ZZ(phi) = exp(-i phi Z (x) Z)`` (no half factor),
* ``CNOT`` targets are ``(control, target)``.

Single states are plain 1-D complex arrays of length ``2**n``.  The batched
engine (:func:`run_batch`) works on ``(B, 2**n)`` arrays with an optional
per-row angle for every gate; the parameter-shift code relies on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

MAX_QUBITS = 12
MAX_DENSE_QUBITS = 12
MAX_DENSITY_QUBITS = 6

ROTATIONS = ("RX", "RY", "RZ")
GATE_KINDS = ("H", "X", "RX", "RY", "RZ", "CNOT", "ZZ")
_TWO_QUBIT = ("CNOT", "ZZ")
_PARAMETRIC = ("RX", "RY", "RZ", "ZZ")

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": _X,
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class GateOp:
    """One gate. ``angle`` is the bound value; ``param`` an optional slot index."""

    kind: str
    targets: tuple[int, ...]
    angle: float | None = None
    param: int | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        targets = tuple(int(t) for t in self.targets)
        object.__setattr__(self, "targets", targets)
        want = 2 if self.kind in _TWO_QUBIT else 1
        if len(targets) != want:
            raise ValueError(f"{self.kind} acts on {want} qubit(s), got {targets}")
        if len(set(targets)) != len(targets):
            raise ValueError(f"repeated target in {targets}")
        if self.angle is not None and not np.isfinite(self.angle):
            raise ValueError("gate angle must be finite")

    @property
    def parametric(self) -> bool:
        return self.kind in _PARAMETRIC

    def bind(self, params: Sequence[float]) -> GateOp:
        if self.param is None:
            return self
        return GateOp(self.kind, self.targets, float(params[self.param]), None)

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind, "targets": list(self.targets)}
        if self.angle is not None:
            out["angle"] = self.angle
        if self.param is not None:
            out["param"] = self.param
        return out

    @classmethod
    def from_json(cls, d: dict) -> GateOp:
        return cls(d["kind"], tuple(d["targets"]), d.get("angle"), d.get("param"))


def gates_to_json(gates: Sequence[GateOp]) -> list[dict]:
    return [g.to_json() for g in gates]


def gates_from_json(items: Sequence[dict]) -> list[GateOp]:
    return [GateOp.from_json(d) for d in items]


def state_to_json(psi: np.ndarray) -> list[float]:
    """Interleaved ``[re0, im0, re1, im1, ...]``."""
    psi = np.asarray(psi, dtype=complex)
    return np.column_stack([psi.real, psi.imag]).ravel().tolist()


def state_from_json(values: Sequence[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=float).reshape(-1, 2)
    return arr[:, 0] + 1j * arr[:, 1]


def n_qubits_of(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if n < 0 or (1 << n) != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def zero_state(n_qubits: int) -> np.ndarray:
    _check_qubits(n_qubits, MAX_QUBITS)
    psi = np.zeros(1 << n_qubits, dtype=complex)
    psi[0] = 1.0
    return psi


def basis_state(index: int, n_qubits: int) -> np.ndarray:
    psi = np.zeros(1 << n_qubits, dtype=complex)
    psi[index] = 1.0
    return psi


def _check_qubits(n: int, cap: int) -> None:
    if n < 1:
        raise ValueError("need at least one qubit")
    if n > cap:
        raise ValueError(f"{n} qubits exceeds the cap of {cap}")


# --------------------------------------------------------------------------
# gate matrices


def rotation_matrices(kind: str, angles) -> np.ndarray:
    """``(..., 2, 2)`` rotation matrices for an array of angles."""
    a = np.asarray(angles, dtype=float)
    c = np.cos(a / 2)
    s = np.sin(a / 2)
    out = np.empty(a.shape + (2, 2), dtype=complex)
    if kind == "RX":
        out[..., 0, 0] = c
        out[..., 0, 1] = -1j * s
        out[..., 1, 0] = -1j * s
        out[..., 1, 1] = c
    elif kind == "RY":
        out[..., 0, 0] = c
        out[..., 0, 1] = -s
        out[..., 1, 0] = s
        out[..., 1, 1] = c
    elif kind == "RZ":
        out[..., 0, 0] = np.exp(-0.5j * a)
        out[..., 0, 1] = 0
        out[..., 1, 0] = 0
        out[..., 1, 1] = np.exp(0.5j * a)
    else:
        raise ValueError(f"{kind} is not a rotation")
    return out


def gate_matrix(gate: GateOp) -> np.ndarray:
    """Dense matrix of a bound gate on its own target qubits."""
    if gate.parametric and gate.angle is None:
        raise ValueError(f"unbound parameter slot {gate.param} on {gate.kind}")
    if gate.kind == "H":
        return _H.copy()
    if gate.kind == "X":
        return _X.copy()
    if gate.kind in ROTATIONS:
        return rotation_matrices(gate.kind, gate.angle)
    if gate.kind == "CNOT":
        m = np.eye(4, dtype=complex)
        m[2:, 2:] = _X
        return m
    # ZZ
    ph = np.exp(-1j * gate.angle * np.array([1, -1, -1, 1]))
    return np.diag(ph)


# --------------------------------------------------------------------------
# batched engine


def _apply_1q(psi: np.ndarray, mats: np.ndarray, q: int, n: int) -> np.ndarray:
    """Apply 2x2 ``mats`` (shape (2,2) or (B,2,2)) to qubit ``q`` of ``psi`` (B, 2**n)."""
    b = psi.shape[0]
    v = psi.reshape(b, 1 << q, 2, 1 << (n - q - 1))
    if mats.ndim == 2:
        out = np.einsum("ij,bajc->baic", mats, v)
    else:
        out = np.einsum("bij,bajc->baic", mats, v)
    return out.reshape(b, -1)


def _apply_cnot(psi: np.ndarray, control: int, target: int, n: int) -> np.ndarray:
    b = psi.shape[0]
    v = psi.reshape((b,) + (2,) * n).copy()
    idx1 = [slice(None)] * (n + 1)
    idx1[1 + control] = 1
    idx1[1 + target] = 0
    idx2 = list(idx1)
    idx2[1 + target] = 1
    idx1, idx2 = tuple(idx1), tuple(idx2)
    tmp = v[idx1].copy()
    v[idx1] = v[idx2]
    v[idx2] = tmp
    return v.reshape(b, -1)


def _zz_signs(i: int, j: int, n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    zi = 1 - 2 * ((idx >> (n - 1 - i)) & 1)
    zj = 1 - 2 * ((idx >> (n - 1 - j)) & 1)
    return (zi * zj).astype(float)


def _apply_zz(psi: np.ndarray, angles, i: int, j: int, n: int) -> np.ndarray:
    signs = _zz_signs(i, j, n)
    a = np.asarray(angles, dtype=float)
    if a.ndim == 0:
        return psi * np.exp(-1j * a * signs)
    return psi * np.exp(-1j * a[:, None] * signs[None, :])


def _apply_one(psi: np.ndarray, gate: GateOp, angle, n: int) -> np.ndarray:
    for t in gate.targets:
        if not 0 <= t < n:
            raise ValueError(f"qubit index {t} out of range for {n} qubits")
    kind = gate.kind
    if kind == "H":
        return _apply_1q(psi, _H, gate.targets[0], n)
    if kind == "X":
        return _apply_1q(psi, _X, gate.targets[0], n)
    if kind == "CNOT":
        return _apply_cnot(psi, gate.targets[0], gate.targets[1], n)
    if angle is None:
        raise ValueError(f"unbound parameter slot {gate.param} on {kind}")
    if kind == "ZZ":
        return _apply_zz(psi, angle, gate.targets[0], gate.targets[1], n)
    return _apply_1q(psi, rotation_matrices(kind, angle), gate.targets[0], n)


def run_batch(gates: Sequence[GateOp], states: np.ndarray, angles: np.ndarray | None = None) -> np.ndarray:
    """Apply ``gates`` to every row of ``states``.

    ``angles`` has shape ``(B, len(gates))``; column ``g`` overrides the bound
    angle of gate ``g`` row by row (NaN entries fall back to ``gate.angle``).
    """
    psi = np.array(states, dtype=complex, copy=True)
    if psi.ndim == 1:
        psi = psi[None, :]
    n = n_qubits_of(psi.shape[1])
    _check_qubits(n, MAX_QUBITS)
    for g, gate in enumerate(gates):
        angle = gate.angle
        if angles is not None and gate.parametric:
            col = angles[:, g]
            if not np.isnan(col).any():
                angle = col
        psi = _apply_one(psi, gate, angle, n)
    return psi


def run_density_batch(gates: Sequence[GateOp], rhos: np.ndarray, angles: np.ndarray | None = None) -> np.ndarray:
    """``rho -> U rho U^dagger`` for a batch ``(B, D, D)`` with per-row angles."""
    rho = np.asarray(rhos, dtype=complex)
    if rho.ndim == 2:
        rho = rho[None]
    b, d, _ = rho.shape
    n = n_qubits_of(d)
    _check_qubits(n, MAX_DENSITY_QUBITS)

    def left(mat_b, a):
        # U @ mat for every batch element; columns folded into the batch axis
        cols = np.swapaxes(mat_b, 1, 2).reshape(b * d, d)
        rep = None if a is None else np.repeat(a, d, axis=0)
        cols = run_batch(gates, cols, rep)
        return np.swapaxes(cols.reshape(b, d, d), 1, 2)

    x = left(rho, angles)
    x = left(np.conj(np.swapaxes(x, 1, 2)), angles)
    return np.conj(np.swapaxes(x, 1, 2))


# --------------------------------------------------------------------------
# single-state API


def apply_gate(state: np.ndarray, gate: GateOp) -> np.ndarray:
    psi = np.asarray(state, dtype=complex)
    n = n_qubits_of(psi.shape[0])
    _check_qubits(n, MAX_QUBITS)
    return _apply_one(psi[None, :], gate, gate.angle, n)[0]


def apply_circuit(state: np.ndarray, gates: Sequence[GateOp]) -> np.ndarray:
    return run_batch(gates, np.asarray(state, dtype=complex)[None, :])[0]


def evolve_density(rho: np.ndarray, gates: Sequence[GateOp]) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    return run_density_batch(gates, rho[None])[0]


def dense_unitary(gates: Sequence[GateOp], n_qubits: int) -> np.ndarray:
    _check_qubits(n_qubits, MAX_DENSE_QUBITS)
    eye = np.eye(1 << n_qubits, dtype=complex)
    # row k of the batch is U|e_k>, i.e. column k of U
    return run_batch(gates, eye).T


# --------------------------------------------------------------------------
# observables


@dataclass
class Observable:
    """Hermitian measurement operator.

    Exactly one representation is set: a weighted sum of Pauli strings
    (``terms``, strings like ``"ZIZ"``), a real diagonal, or a dense matrix.
    """

    n_qubits: int
    terms: tuple[tuple[float, str], ...] | None = None
    diagonal: np.ndarray | None = None
    matrix: np.ndarray | None = None
    _norm: float | None = field(default=None, repr=False)

    def __post_init__(self):
        given = [x is not None for x in (self.terms, self.diagonal, self.matrix)]
        if sum(given) != 1:
            raise ValueError("give exactly one of terms, diagonal, matrix")
        d = 1 << self.n_qubits
        if self.terms is not None:
            terms = []
            for coef, word in self.terms:
                if len(word) != self.n_qubits or set(word) - set("IXYZ"):
                    raise ValueError(f"bad Pauli string {word!r}")
                if np.iscomplexobj(coef) and abs(np.imag(coef)) > 0:
                    raise ValueError("Pauli coefficients must be real")
                terms.append((float(np.real(coef)), word))
            self.terms = tuple(terms)
        if self.diagonal is not None:
            diag = np.asarray(self.diagonal)
            if np.iscomplexobj(diag):
                if np.abs(diag.imag).max() > 1e-12:
                    raise ValueError("diagonal observable must be real")
                diag = diag.real
            self.diagonal = diag.astype(float)
            if self.diagonal.shape != (d,):
                raise ValueError("diagonal length mismatch")
        if self.matrix is not None:
            m = np.asarray(self.matrix, dtype=complex)
            if m.shape != (d, d):
                raise ValueError("matrix shape mismatch")
            if np.abs(m - m.conj().T).max() > 1e-12:
                raise ValueError("observable is not Hermitian")
            self.matrix = m

    @classmethod
    def pauli(cls, word: str, coef: float = 1.0) -> Observable:
        return cls(len(word), terms=((coef, word),))

    @classmethod
    def z(cls, qubit: int, n_qubits: int) -> Observable:
        word = ["I"] * n_qubits
        word[qubit] = "Z"
        return cls.pauli("".join(word))

    @classmethod
    def basis_indicator(cls, index: int, n_qubits: int) -> Observable:
        """``2|index><index| - I``: +1 on one basis state, -1 elsewhere."""
        diag = -np.ones(1 << n_qubits)
        diag[index] = 1.0
        return cls(n_qubits, diagonal=diag)

    @classmethod
    def projector(cls, psi: np.ndarray) -> Observable:
        psi = np.asarray(psi, dtype=complex)
        return cls(n_qubits_of(psi.shape[0]), matrix=np.outer(psi, psi.conj()))

    def to_matrix(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix
        if self.diagonal is not None:
            return np.diag(self.diagonal).astype(complex)
        d = 1 << self.n_qubits
        out = np.zeros((d, d), dtype=complex)
        for coef, word in self.terms:
            m = np.array([[1.0]], dtype=complex)
            for ch in word:
                m = np.kron(m, _PAULI[ch])
            out += coef * m
        return out

    @property
    def spectral_norm(self) -> float:
        if self._norm is None:
            if self.diagonal is not None:
                self._norm = float(np.abs(self.diagonal).max())
            elif self.terms is not None and len(self.terms) == 1:
                self._norm = abs(self.terms[0][0])
            else:
                self._norm = float(np.abs(np.linalg.eigvalsh(self.to_matrix())).max())
        return self._norm

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """``M @ psi`` row-wise for ``psi`` of shape (B, D)."""
        if self.diagonal is not None:
            return psi * self.diagonal[None, :]
        if self.matrix is not None:
            return psi @ self.matrix.T
        n = self.n_qubits
        out = np.zeros_like(psi)
        for coef, word in self.terms:
            v = psi
            for q, ch in enumerate(word):
                if ch != "I":
                    v = _apply_1q(v, _PAULI[ch], q, n)
            out += coef * v
        return out

    def expect_batch(self, psi: np.ndarray) -> np.ndarray:
        """Real expectation values for a batch of statevectors (B, D)."""
        psi = np.atleast_2d(psi)
        if psi.shape[1] != 1 << self.n_qubits:
            raise ValueError("state dimension does not match observable")
        if self.diagonal is not None:
            return (np.abs(psi) ** 2) @ self.diagonal
        return np.einsum("bi,bi->b", psi.conj(), self.apply(psi)).real

    def expect_density_batch(self, rho: np.ndarray) -> np.ndarray:
        """``tr(M rho)`` for a batch of density matrices (B, D, D)."""
        rho = np.asarray(rho)
        if rho.ndim == 2:
            rho = rho[None]
        if rho.shape[1] != 1 << self.n_qubits:
            raise ValueError("density dimension does not match observable")
        if self.diagonal is not None:
            return np.einsum("bii,i->b", rho, self.diagonal).real
        m = self.to_matrix()
        return np.einsum("ij,bji->b", m, rho).real


def expectation(state: np.ndarray, obs: Observable) -> float:
    psi = np.asarray(state, dtype=complex)
    if psi.shape != (1 << obs.n_qubits,):
        raise ValueError("state dimension does not match observable")
    return float(obs.expect_batch(psi[None, :])[0])


def overlap_sq(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError("state dimensions differ")
    return float(abs(np.vdot(b, a)) ** 2)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Pure-state trace distance ``sqrt(1 - |<a|b>|^2)``."""
    return float(np.sqrt(max(0.0, 1.0 - overlap_sq(a, b))))


def pure_density(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


def check_density(rho: np.ndarray, tol: float = 1e-12) -> None:
    """Raise if ``rho`` is not Hermitian, unit trace and PSD within ``tol``."""
    rho = np.asarray(rho, dtype=complex)
    if np.abs(rho - rho.conj().T).max() > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError("density matrix trace is not 1")
    if np.linalg.eigvalsh(rho).min() < -max(tol, 1e-10):
        raise ValueError("density matrix is not positive semidefinite")


def haar_states(n: int, n_qubits: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` Haar-random pure states as rows (normalized complex Gaussians)."""
    d = 1 << n_qubits
    z = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)
