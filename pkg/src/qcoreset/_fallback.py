"""Pure-Python implementations of the compiled kernels in ``_ext.pyx``.

Same signatures and return values; used when the extension is not built or
``QCORESET_BACKEND=python`` is set.
"""

from __future__ import annotations

import math

import numpy as np


def gram_overlaps(states):
    s = np.asarray(states, dtype=complex)
    out = np.abs(s.conj() @ s.T) ** 2
    upper = np.triu_indices(s.shape[0], 1)
    out.T[upper] = out[upper]  # exact symmetry despite BLAS round-off
    return out


def cross_overlaps(a_states, b_states):
    a = np.asarray(a_states, dtype=complex)
    b = np.asarray(b_states, dtype=complex)
    if a.shape[1] != b.shape[1]:
        raise ValueError("state dimensions differ")
    return np.abs(a.conj() @ b.T) ** 2


def smo_solve(Q, y, caps, tol=1e-6, max_iter=1000000, track=False):
    Q = np.asarray(Q, dtype=float)
    y = np.asarray(y, dtype=float)
    C = np.asarray(caps, dtype=float)
    n = Q.shape[0]
    A = np.zeros(n)
    G = -np.ones(n)
    history = [] if track else None
    it = 0
    pos = y > 0
    while True:
        v = -y * G
        up = (pos & (A < C)) | (~pos & (A > 0))
        low = (pos & (A > 0)) | (~pos & (A < C))
        if not up.any() or not low.any():
            gap = 0.0
            break
        cand = np.where(up, v, -np.inf)
        i = int(np.argmax(cand))
        cand = np.where(low, v, np.inf)
        j = int(np.argmin(cand))
        gap = float(v[i] - v[j])
        if gap < tol or it >= max_iter:
            break
        oi, oj = A[i], A[j]
        ai, aj = oi, oj
        Ci, Cj = C[i], C[j]
        if y[i] != y[j]:
            quad = Q[i, i] + Q[j, j] + 2.0 * Q[i, j]
            if quad <= 0:
                quad = 1e-12
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > Ci - Cj:
                if ai > Ci:
                    ai, aj = Ci, Ci - diff
            elif aj > Cj:
                aj, ai = Cj, Cj + diff
        else:
            quad = Q[i, i] + Q[j, j] - 2.0 * Q[i, j]
            if quad <= 0:
                quad = 1e-12
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            ai -= delta
            aj += delta
            if total > Ci:
                if ai > Ci:
                    ai, aj = Ci, total - Ci
            elif aj < 0:
                aj, ai = 0.0, total
            if total > Cj:
                if aj > Cj:
                    aj, ai = Cj, total - Cj
            elif ai < 0:
                ai, aj = 0.0, total
        A[i], A[j] = ai, aj
        G += Q[:, i] * (ai - oi) + Q[:, j] * (aj - oj)
        it += 1
        if track:
            history.append(0.5 * float(A @ (G - 1.0)))
    return A, G, it, gap, history


def jacobi_eig(A, tol, max_sweeps=100):
    M = np.array(A, dtype=float, copy=True)
    n = M.shape[0]
    V = np.eye(n)
    sweep = 0
    while True:
        # sum the off-diagonal directly; subtracting the diagonal cancels badly
        off = math.sqrt(float((M[~np.eye(n, dtype=bool)] ** 2).sum()))
        if off < tol or sweep >= max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = M[p, q]
                if apq == 0.0:
                    continue
                diff = M[q, q] - M[p, p]
                if abs(diff) * 1e-150 > abs(apq):
                    # tiny pivot: small-angle limit of t = 1 / (2 tau)
                    t = apq / diff
                else:
                    tau = diff / (2.0 * apq)
                    if tau >= 0:
                        t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                    else:
                        t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                colp, colq = M[:, p].copy(), M[:, q].copy()
                M[:, p] = c * colp - s * colq
                M[:, q] = s * colp + c * colq
                rowp, rowq = M[p, :].copy(), M[q, :].copy()
                M[p, :] = c * rowp - s * rowq
                M[q, :] = s * rowp + c * rowq
                M[p, q] = M[q, p] = 0.0
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
        sweep += 1
    return np.diag(M).copy(), V, sweep, off
