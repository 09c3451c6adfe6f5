"""Independent reference computations shared by the unit and acceptance tests."""

from itertools import combinations, product

import numpy as np


def _z_on(q, n):
    out = np.array([[1.0]])
    for k in range(n):
        out = np.kron(out, np.diag([1.0, -1.0]) if k == q else np.eye(2))
    return out


def feature_map_unitary(x, repetitions=2, variant="eq22"):
    """Dense ``(U(x) H^n)^r`` built from Kronecker products of Z operators."""
    n = len(x)
    h1 = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    h = np.array([[1.0]])
    for _ in range(n):
        h = np.kron(h, h1)
    gen = sum(x[i] * _z_on(i, n) for i in range(n))
    base = x if variant == "eq22" else np.pi - np.asarray(x)
    for i, j in combinations(range(n), 2):
        gen = gen + base[i] * base[j] * _z_on(i, n) @ _z_on(j, n)
    u = np.diag(np.exp(-1j * np.diag(gen)))
    layer = u @ h
    out = np.eye(1 << n)
    for _ in range(repetitions):
        out = layer @ out
    return out


def density_kernel(x, x2, repetitions=2, variant="eq22"):
    """``tr(rho rho')`` from dense density matrices."""
    e0 = np.zeros(1 << len(x))
    e0[0] = 1.0
    a = feature_map_unitary(x, repetitions, variant) @ e0
    b = feature_map_unitary(x2, repetitions, variant) @ e0
    rho, rho2 = np.outer(a, a.conj()), np.outer(b, b.conj())
    return float(np.trace(rho @ rho2).real)


def dual_active_set_optimum(gram, y, caps):
    """Exact maximum of the box-constrained SVM dual by enumerating active sets.

    Each sample is at 0, at its cap, or free; free variables solve the
    stationarity system with the equality multiplier, via least squares.
    """
    n = len(y)
    q = np.outer(y, y) * gram
    best, best_alpha = -np.inf, None
    for state in product((0, 1, 2), repeat=n):
        free = [i for i in range(n) if state[i] == 1]
        alpha = np.array([caps[i] if state[i] == 2 else 0.0 for i in range(n)])
        if free:
            fixed = [i for i in range(n) if state[i] != 1]
            f = len(free)
            # [Q_ff  y_f] [a_f]   [1 - Q_fx a_x]
            # [y_f'   0 ] [ b ] = [ -y_x' a_x  ]
            lhs = np.zeros((f + 1, f + 1))
            lhs[:f, :f] = q[np.ix_(free, free)]
            lhs[:f, f] = y[free]
            lhs[f, :f] = y[free]
            rhs = np.concatenate([1.0 - q[np.ix_(free, fixed)] @ alpha[fixed], [-(y[fixed] @ alpha[fixed])]])
            sol = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
            alpha[free] = sol[:f]
        if abs(alpha @ y) > 1e-9 or np.any(alpha < -1e-9) or np.any(alpha > caps + 1e-9):
            continue
        alpha = np.clip(alpha, 0.0, caps)
        obj = alpha.sum() - 0.5 * alpha @ q @ alpha
        if obj > best:
            best, best_alpha = obj, alpha
    return best, best_alpha
