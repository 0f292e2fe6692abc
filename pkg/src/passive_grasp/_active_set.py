"""Compiled primal active-set iterations used by :mod:`passive_grasp.qpcore`.

The iteration works on a row-normalized problem.  Each step factors the
working-set matrix with Householder QR, takes the Newton step in the
nullspace (Cholesky of the reduced Hessian, least squares if that fails),
and either drops the most negative multiplier or moves until the first
blocking constraint (lowest index on ratio ties).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

ST_OPTIMAL = 0
ST_UNBOUNDED = 1
ST_MAXITER = 2


@njit(cache=True)
def _householder_qr(Mt):
    """Full ``Q`` (n x n) and upper-triangular ``R`` (k x k) with ``Mt = Q[:, :k] R``."""
    n, k = Mt.shape
    R = Mt.copy()
    Q = np.eye(n)
    v = np.empty(n)
    for j in range(min(k, n)):
        m = n - j
        normx = 0.0
        for i in range(m):
            normx += R[j + i, j] ** 2
        normx = math.sqrt(normx)
        if normx == 0.0:
            continue
        alpha = -normx if R[j, j] >= 0 else normx
        vn = 0.0
        for i in range(m):
            v[i] = R[j + i, j]
        v[0] -= alpha
        for i in range(m):
            vn += v[i] ** 2
        vn = math.sqrt(vn)
        if vn == 0.0:
            continue
        for i in range(m):
            v[i] /= vn
        for c in range(j, k):
            s = 0.0
            for i in range(m):
                s += v[i] * R[j + i, c]
            for i in range(m):
                R[j + i, c] -= 2.0 * s * v[i]
        for r in range(n):
            s = 0.0
            for i in range(m):
                s += Q[r, j + i] * v[i]
            for i in range(m):
                Q[r, j + i] -= 2.0 * s * v[i]
    Rk = np.zeros((k, k))
    for i in range(k):
        for c in range(i, k):
            Rk[i, c] = R[i, c]
    return Q, Rk


@njit(cache=True)
def _back_substitute(R, y):
    k = R.shape[0]
    x = np.zeros(k)
    for i in range(k - 1, -1, -1):
        s = y[i]
        for c in range(i + 1, k):
            s -= R[i, c] * x[c]
        x[i] = s / R[i, i]
    return x


@njit(cache=True)
def _cholesky_solve(H, g):
    """Solve ``H x = g``; returns (x, ok) with ok False if H is not positive definite."""
    n = H.shape[0]
    L = np.zeros((n, n))
    for j in range(n):
        s = H[j, j]
        for c in range(j):
            s -= L[j, c] ** 2
        if not s > 0.0:
            return np.zeros(n), False
        L[j, j] = math.sqrt(s)
        for i in range(j + 1, n):
            t = H[i, j]
            for c in range(j):
                t -= L[i, c] * L[j, c]
            L[i, j] = t / L[j, j]
    y = np.zeros(n)
    for i in range(n):
        s = g[i]
        for c in range(i):
            s -= L[i, c] * y[c]
        y[i] = s / L[i, i]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        s = y[i]
        for c in range(i + 1, n):
            s -= L[c, i] * x[c]
        x[i] = s / L[i, i]
    return x, True


@njit(cache=True)
def _maxabs(v):
    m = 0.0
    for i in range(v.size):
        a = abs(v[i])
        if a > m:
            m = a
    return m


@njit(cache=True)
def _subproblem(H, g, A, C, u, W, nw):
    n = u.size
    me = A.shape[0]
    k = me + nw
    M = np.empty((k, n))
    for i in range(me):
        M[i] = A[i]
    for i in range(nw):
        M[me + i] = C[W[i]]
    Hu = H @ u
    grad = Hu + g
    p = np.zeros(n)
    gscale = 1.0 + _maxabs(g) + _maxabs(Hu)
    if k:
        Q, R = _householder_qr(M.T.copy())
    else:
        Q, R = np.eye(n), np.zeros((0, 0))
    Z = Q[:, k:].copy()
    if Z.shape[1] > 0:
        gz = Z.T @ grad
        if _maxabs(gz) > 1e-13 * gscale:
            Hz = Z.T @ H @ Z
            pz, ok = _cholesky_solve(Hz, gz)
            if not ok:
                pz = np.linalg.lstsq(Hz, gz)[0]
            p = -(Z @ pz)
    lam = np.zeros(k)
    if k:
        Y = Q[:, :k].copy()
        lam = -_back_substitute(R, Y.T @ (grad + H @ p))
    return p, lam, grad


@njit(cache=True)
def active_set(H, g, A, C, d, Qcurv, has_curv, u, W0, tol, max_iter, detect_unbounded):
    """Returns (status, u, W, nw, lam, ray, iterations)."""
    me = A.shape[0]
    n_ineq = C.shape[0]
    n = u.size
    W = np.empty(n_ineq + 1, dtype=np.int64)
    nw = 0
    in_W = np.zeros(n_ineq, dtype=np.bool_)
    for j in W0:
        W[nw] = j
        nw += 1
        in_W[j] = True
    u = u.copy()
    ray = np.zeros(n)
    lam = np.zeros(me + nw)
    it = 0
    qmax = _maxabs(Qcurv.ravel()) if has_curv else 0.0
    while it < max_iter:
        it += 1
        p, lam, grad = _subproblem(H, g, A, C, u, W, nw)
        pnorm = _maxabs(p)
        if pnorm <= 1e-14 * (1.0 + _maxabs(u)):
            if nw == 0:
                return ST_OPTIMAL, u, W[:nw].copy(), nw, lam, ray, it
            jmin = 0
            for j in range(1, nw):
                if lam[me + j] < lam[me + jmin]:
                    jmin = j
            if lam[me + jmin] >= -tol * (1.0 + _maxabs(lam)):
                return ST_OPTIMAL, u, W[:nw].copy(), nw, lam, ray, it
            in_W[W[jmin]] = False
            for j in range(jmin, nw - 1):
                W[j] = W[j + 1]
            nw -= 1
            continue
        Cp = C @ p
        Cu = C @ u
        alpha = 1.0
        block = -1
        best = np.inf
        any_cand = False
        for j in range(n_ineq):
            if in_W[j] or not Cp[j] > 1e-12 * pnorm:
                continue
            any_cand = True
            slack = d[j] - Cu[j]
            if slack < 0.0:
                slack = 0.0
            ratio = slack / Cp[j]
            if ratio < best:
                best = ratio
                if ratio < 1.0:
                    block = j
        if block >= 0:
            alpha = best
        if block < 0 and detect_unbounded and has_curv and not any_cand:
            nrm = math.sqrt(np.sum(p * p))
            unit = p / nrm
            curv = unit @ (Qcurv @ unit)
            if curv <= 1e-9 * max(1.0, qmax) and grad @ unit < 0.0 and pnorm > 1e6 * (1.0 + _maxabs(u)):
                return ST_UNBOUNDED, u, W[:nw].copy(), nw, lam, unit, it
        u = u + alpha * p
        if block >= 0:
            W[nw] = block
            nw += 1
            in_W[block] = True
    return ST_MAXITER, u, W[:nw].copy(), nw, lam, ray, it


@njit(cache=True)
def independent_rows(fixed, candidates, order, tol):
    """Indices from ``order`` whose rows are independent of ``fixed`` and each other
    (two-pass Gram-Schmidt)."""
    n = candidates.shape[1]
    basis = np.zeros((fixed.shape[0] + order.size, n))
    nb = 0
    keep = np.empty(order.size, dtype=np.int64)
    nk = 0
    for stage in range(2):
        rows = fixed.shape[0] if stage == 0 else order.size
        for idx in range(rows):
            row = fixed[idx] if stage == 0 else candidates[order[idx]]
            v = row.copy()
            for _ in range(2):
                for b in range(nb):
                    s = 0.0
                    for c in range(n):
                        s += basis[b, c] * v[c]
                    for c in range(n):
                        v[c] -= s * basis[b, c]
            nv = math.sqrt(np.sum(v * v))
            if nv <= tol * max(1.0, math.sqrt(np.sum(row * row))):
                continue
            basis[nb] = v / nv
            nb += 1
            if stage == 1:
                keep[nk] = order[idx]
                nk += 1
    return keep[:nk].copy()
