# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: pairwise state overlaps, weighted-box SMO, cyclic Jacobi.

Signatures mirror ``qcoreset._fallback`` exactly; ``qcoreset._backend`` picks one.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, INFINITY

cnp.import_array()


def gram_overlaps(states):
    """Symmetric matrix of ``|<a_i|a_j>|^2`` over the rows of ``states``."""
    cdef cnp.ndarray[double, ndim=2] re = np.ascontiguousarray(np.real(states), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] im = np.ascontiguousarray(np.imag(states), dtype=np.float64)
    cdef Py_ssize_t n = re.shape[0], d = re.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] R = re, I = im, K = out
    cdef Py_ssize_t i, j, k
    cdef double sr, si
    with nogil:
        for i in range(n):
            for j in range(i, n):
                sr = 0.0
                si = 0.0
                for k in range(d):
                    sr += R[i, k] * R[j, k] + I[i, k] * I[j, k]
                    si += R[i, k] * I[j, k] - I[i, k] * R[j, k]
                K[i, j] = sr * sr + si * si
                K[j, i] = K[i, j]
    return out


def cross_overlaps(a_states, b_states):
    """``|<a_i|b_j>|^2`` for every row pair of two state batches."""
    cdef cnp.ndarray[double, ndim=2] ar = np.ascontiguousarray(np.real(a_states), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] ai = np.ascontiguousarray(np.imag(a_states), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] br = np.ascontiguousarray(np.real(b_states), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=2] bi = np.ascontiguousarray(np.imag(b_states), dtype=np.float64)
    if ar.shape[1] != br.shape[1]:
        raise ValueError("state dimensions differ")
    cdef Py_ssize_t m = ar.shape[0], n = br.shape[0], d = ar.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] AR = ar, AI = ai, BR = br, BI = bi, K = out
    cdef Py_ssize_t i, j, k
    cdef double sr, si
    with nogil:
        for i in range(m):
            for j in range(n):
                sr = 0.0
                si = 0.0
                for k in range(d):
                    sr += AR[i, k] * BR[j, k] + AI[i, k] * BI[j, k]
                    si += AR[i, k] * BI[j, k] - AI[i, k] * BR[j, k]
                K[i, j] = sr * sr + si * si
    return out


def smo_solve(Q, y, caps, double tol=1e-6, long max_iter=1000000, bint track=False):
    """Minimise ``0.5 a'Qa - sum(a)`` s.t. ``y'a = 0``, ``0 <= a_i <= caps_i``.

    ``Q_ij = y_i y_j K_ij``.  Maximal-violating-pair working set.
    Returns ``(alpha, grad, n_iter, gap, history)``; ``history`` holds the
    minimisation objective after every accepted step when ``track`` is set.
    """
    cdef cnp.ndarray[double, ndim=2] q = np.ascontiguousarray(Q, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] yy = np.ascontiguousarray(y, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] cc = np.ascontiguousarray(caps, dtype=np.float64)
    cdef Py_ssize_t n = q.shape[0]
    cdef cnp.ndarray[double, ndim=1] alpha = np.zeros(n, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] grad = -np.ones(n, dtype=np.float64)
    cdef double[:, ::1] QQ = q
    cdef double[::1] Y = yy, C = cc, A = alpha, G = grad
    cdef Py_ssize_t t, i, j
    cdef long it = 0
    cdef double gmax, gmin, v, quad, delta, diff, total, oi, oj, di, dj, gap = 0.0, obj
    cdef double TAU = 1e-12
    history = [] if track else None
    while True:
        gmax = -INFINITY
        gmin = INFINITY
        i = -1
        j = -1
        for t in range(n):
            v = -Y[t] * G[t]
            if (Y[t] > 0 and A[t] < C[t]) or (Y[t] < 0 and A[t] > 0):
                if v > gmax:
                    gmax = v
                    i = t
            if (Y[t] > 0 and A[t] > 0) or (Y[t] < 0 and A[t] < C[t]):
                if v < gmin:
                    gmin = v
                    j = t
        if i < 0 or j < 0:
            gap = 0.0
            break
        gap = gmax - gmin
        if gap < tol:
            break
        if it >= max_iter:
            break
        oi = A[i]
        oj = A[j]
        if Y[i] != Y[j]:
            quad = QQ[i, i] + QQ[j, j] + 2.0 * QQ[i, j]
            if quad <= 0:
                quad = TAU
            delta = (-G[i] - G[j]) / quad
            diff = A[i] - A[j]
            A[i] += delta
            A[j] += delta
            if diff > 0:
                if A[j] < 0:
                    A[j] = 0
                    A[i] = diff
            else:
                if A[i] < 0:
                    A[i] = 0
                    A[j] = -diff
            if diff > C[i] - C[j]:
                if A[i] > C[i]:
                    A[i] = C[i]
                    A[j] = C[i] - diff
            else:
                if A[j] > C[j]:
                    A[j] = C[j]
                    A[i] = C[j] + diff
        else:
            quad = QQ[i, i] + QQ[j, j] - 2.0 * QQ[i, j]
            if quad <= 0:
                quad = TAU
            delta = (G[i] - G[j]) / quad
            total = A[i] + A[j]
            A[i] -= delta
            A[j] += delta
            if total > C[i]:
                if A[i] > C[i]:
                    A[i] = C[i]
                    A[j] = total - C[i]
            else:
                if A[j] < 0:
                    A[j] = 0
                    A[i] = total
            if total > C[j]:
                if A[j] > C[j]:
                    A[j] = C[j]
                    A[i] = total - C[j]
            else:
                if A[i] < 0:
                    A[i] = 0
                    A[j] = total
        di = A[i] - oi
        dj = A[j] - oj
        for t in range(n):
            G[t] += QQ[t, i] * di + QQ[t, j] * dj
        it += 1
        if track:
            obj = 0.0
            for t in range(n):
                obj += A[t] * (G[t] - 1.0)
            history.append(0.5 * obj)
    return alpha, grad, it, gap, history


def jacobi_eig(A, double tol, int max_sweeps=100):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns ``(eigenvalues, eigenvectors, sweeps, off_norm)`` with eigenvalues
    unsorted (diagonal order) and eigenvectors as columns.
    """
    cdef cnp.ndarray[double, ndim=2] a = np.array(A, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = a.shape[0]
    cdef cnp.ndarray[double, ndim=2] v = np.eye(n, dtype=np.float64)
    cdef double[:, ::1] M = a, V = v
    cdef Py_ssize_t p, q, k
    cdef int sweep = 0
    cdef double off, apq, diff, tau, t, c, s, mkp, mkq
    while True:
        off = 0.0
        for p in range(n):
            for q in range(n):
                if p != q:
                    off += M[p, q] * M[p, q]
        off = sqrt(off)
        if off < tol or sweep >= max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = M[p, q]
                if apq == 0.0:
                    continue
                diff = M[q, q] - M[p, p]
                if fabs(diff) * 1e-150 > fabs(apq):
                    # tiny pivot: small-angle limit of t = 1 / (2 tau)
                    t = apq / diff
                else:
                    tau = diff / (2.0 * apq)
                    if tau >= 0:
                        t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                    else:
                        t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    mkp = M[k, p]
                    mkq = M[k, q]
                    M[k, p] = c * mkp - s * mkq
                    M[k, q] = s * mkp + c * mkq
                for k in range(n):
                    mkp = M[p, k]
                    mkq = M[q, k]
                    M[p, k] = c * mkp - s * mkq
                    M[q, k] = s * mkp + c * mkq
                M[p, q] = 0.0
                M[q, p] = 0.0
                for k in range(n):
                    mkp = V[k, p]
                    mkq = V[k, q]
                    V[k, p] = c * mkp - s * mkq
                    V[k, q] = s * mkp + c * mkq
        sweep += 1
    return np.diag(a).copy(), v, sweep, off
