"""Dense convex QP solver with KKT certificates.

Solves::

    minimize    1/2 u' Q u + g' u
    subject to  A u  = b
                C u <= d

with a primal active-set method.  A phase-1 problem (minimize the largest
inequality violation) supplies the starting point; when that minimum is
positive its multipliers form a Farkas certificate of infeasibility.

``Q`` may be singular.  A diagonal regularization (default ``1e-10``) is added
so that ties between optimal points resolve to the minimum-norm one.  The
answer is then polished by a few proximal steps (the same diagonal term,
centred on the previous answer rather than the origin), which removes the
bias the regularization puts on solutions with large entries.
Finally the KKT system of the optimal working set is refined with residuals
and objective accumulated in extended precision.
``QPResult.regularization`` is the diagonal the reported KKT residual
refers to: zero once the proximal steps or the refinement have run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _active_set as _kernel

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL_FAILURE = "numerical_failure"

DEFAULT_MAX_ITER = 10_000
DEFAULT_REGULARIZATION = 1e-10
PROX_REFINEMENTS = 8
PHASE1_RESTARTS = 4


class QPDimensionError(ValueError):
    pass


class QPNumericalError(RuntimeError):
    """Raised when the iteration cap is reached; ``result`` holds the best iterate."""

    def __init__(self, message: str, result: "QPResult"):
        super().__init__(message)
        self.result = result


def _matrix(M, rows, cols, name):
    if M is None:
        return np.zeros((rows if rows is not None else 0, cols))
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return M.reshape(0, cols)
    if M.ndim == 1:
        M = M.reshape(1, -1)
    if M.ndim != 2 or M.shape[1] != cols:
        raise QPDimensionError(f"{name} must have {cols} columns, got shape {M.shape}")
    return M


def _vector(v, size, name):
    if v is None:
        v = np.zeros(size)
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != size:
        raise QPDimensionError(f"{name} must have {size} entries, got {v.size}")
    return v


@dataclass(frozen=True)
class QuadraticProgram:
    Q: np.ndarray
    g: np.ndarray
    A: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    C: Optional[np.ndarray] = None
    d: Optional[np.ndarray] = None

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        m = Q.shape[0]
        if Q.shape != (m, m):
            raise QPDimensionError(f"Q must be square, got {Q.shape}")
        if m and not np.all(np.isfinite(Q)):
            raise QPDimensionError("Q has non-finite entries")
        scale = max(1.0, float(np.abs(Q).max())) if m else 1.0
        if m and np.abs(Q - Q.T).max() > 1e-12 * scale:
            raise QPDimensionError("Q must be symmetric")
        g = _vector(self.g, m, "g")
        A = _matrix(self.A, 0, m, "A")
        b = _vector(self.b, A.shape[0], "b")
        C = _matrix(self.C, 0, m, "C")
        d = _vector(self.d, C.shape[0], "d")
        for k, v in dict(Q=0.5 * (Q + Q.T), g=g, A=A, b=b, C=C, d=d).items():
            object.__setattr__(self, k, v)

    @property
    def m(self) -> int:
        return self.Q.shape[0]

    def objective(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return float(0.5 * u @ self.Q @ u + self.g @ u)

    def check_convex(self, tol: float = 1e-10) -> None:
        if self.m and np.linalg.eigvalsh(self.Q).min() < -tol * max(1.0, float(np.abs(self.Q).max())):
            raise QPDimensionError("Q is not positive semidefinite")


@dataclass
class QPResult:
    status: str
    u: np.ndarray
    lambda_eq: np.ndarray
    lambda_ineq: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int
    regularization: float
    active: tuple[int, ...] = ()
    certificate: Optional[tuple[np.ndarray, np.ndarray]] = None
    ray: Optional[np.ndarray] = None
    detail: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def kkt_residual(qp: QuadraticProgram, u, lam_eq, lam_ineq, regularization: float = 0.0) -> float:
    """Scaled KKT residual: stationarity, feasibility, dual sign, complementarity."""
    Q = qp.Q + regularization * np.eye(qp.m)
    Hu = Q @ u
    At = qp.A.T @ lam_eq
    Ct = qp.C.T @ lam_ineq
    stat = np.abs(Hu + qp.g + At + Ct).max(initial=0.0)
    stat /= 1.0 + max(np.abs(Hu).max(initial=0), np.abs(qp.g).max(initial=0), np.abs(At).max(initial=0), np.abs(Ct).max(initial=0))
    absu = np.abs(u)
    eq = np.abs(qp.A @ u - qp.b).max(initial=0.0) / (1.0 + max(np.abs(qp.b).max(initial=0), (np.abs(qp.A) @ absu).max(initial=0)))
    cscale = 1.0 + max(np.abs(qp.d).max(initial=0), (np.abs(qp.C) @ absu).max(initial=0))
    slack = qp.d - qp.C @ u
    ineq = max(0.0, -slack.min(initial=0.0)) / cscale
    dual = max(0.0, -lam_ineq.min(initial=0.0)) / (1.0 + np.abs(lam_ineq).max(initial=0))
    comp = np.abs(lam_ineq * slack).max(initial=0.0) / ((1.0 + np.abs(lam_ineq).max(initial=0)) * cscale)
    return float(max(stat, eq, ineq, dual, comp))


def _independent_rows(fixed: np.ndarray, candidates: np.ndarray, order: Sequence[int], tol: float = 1e-9) -> list[int]:
    """Indices from ``order`` whose rows are independent of ``fixed`` and each other."""
    n = candidates.shape[1] if candidates.ndim == 2 else fixed.shape[1]
    fixed = np.ascontiguousarray(fixed, dtype=float).reshape(-1, n)
    candidates = np.ascontiguousarray(candidates, dtype=float).reshape(-1, n)
    order = np.asarray(list(order), dtype=np.int64)
    return [int(j) for j in _kernel.independent_rows(fixed, candidates, order, float(tol))]


class _Engine:
    """Primal active-set iterations on a row-normalized problem."""

    def __init__(self, H, g, A, b, C, d, Qcurv, tol, max_iter):
        self.H, self.g, self.A, self.b, self.C, self.d = H, g, A, b, C, d
        self.Qcurv = Qcurv
        self.tol = tol
        self.max_iter = max_iter
        self.iterations = 0

    def run(self, u, W, detect_unbounded=True):
        """Iterate to optimality from a feasible ``u``.  Returns (status, u, W, lam, ray)."""
        has_curv = self.Qcurv is not None
        Qcurv = np.ascontiguousarray(self.Qcurv, dtype=float) if has_curv else np.zeros((1, 1))
        m = u.size
        code, u, Wa, _, lam, ray, its = _kernel.active_set(
            np.ascontiguousarray(self.H, dtype=float),
            np.ascontiguousarray(self.g, dtype=float),
            np.ascontiguousarray(self.A, dtype=float).reshape(-1, m),
            np.ascontiguousarray(self.C, dtype=float).reshape(-1, m),
            np.ascontiguousarray(self.d, dtype=float),
            Qcurv, has_curv,
            np.ascontiguousarray(u, dtype=float),
            np.asarray(list(W), dtype=np.int64),
            float(self.tol), int(self.max_iter), bool(detect_unbounded),
        )
        self.iterations += int(its)
        W = [int(j) for j in Wa]
        if code == _kernel.ST_OPTIMAL:
            return OPTIMAL, u, W, lam, None
        if code == _kernel.ST_UNBOUNDED:
            return UNBOUNDED, u, W, lam, ray
        return NUMERICAL_FAILURE, u, W, None, None


def solve_qp(
    qp: QuadraticProgram,
    *,
    tol: float = 1e-10,
    max_iter: int = DEFAULT_MAX_ITER,
    regularization: float = DEFAULT_REGULARIZATION,
    warm_start: Optional[np.ndarray] = None,
    working_set: Optional[Sequence[int]] = None,
    check_convexity: bool = True,
) -> QPResult:
    """Solve a convex QP; see module docstring.

    ``warm_start``/``working_set`` seed the iterate and the active inequality
    guess (both optional).  Raises :class:`QPNumericalError` if the iteration
    cap is hit.
    """
    if check_convexity:
        qp.check_convex()
    m = qp.m
    reg = regularization * max(1.0, float(np.abs(qp.Q).max(initial=0.0)))
    H = qp.Q + reg * np.eye(m)

    # row normalization
    an = np.linalg.norm(qp.A, axis=1) if qp.A.size else np.zeros(0)
    cn = np.linalg.norm(qp.C, axis=1) if qp.C.size else np.zeros(0)
    zero_eq = an == 0
    zero_in = cn == 0
    empty_cert = None
    if np.any(zero_eq & (np.abs(qp.b) > 0)):
        j = int(np.flatnonzero(zero_eq & (np.abs(qp.b) > 0))[0])
        y = np.zeros(qp.A.shape[0])
        y[j] = -np.sign(qp.b[j])
        empty_cert = (y, np.zeros(qp.C.shape[0]))
    if empty_cert is None and np.any(zero_in & (qp.d < 0)):
        j = int(np.flatnonzero(zero_in & (qp.d < 0))[0])
        y = np.zeros(qp.C.shape[0])
        y[j] = 1.0
        empty_cert = (np.zeros(qp.A.shape[0]), y)
    if empty_cert is not None:
        return _infeasible(qp, np.zeros(m), empty_cert, reg, 0)

    eq_rows = np.flatnonzero(~zero_eq)
    in_rows = np.flatnonzero(~zero_in)
    A = qp.A[eq_rows] / an[eq_rows, None]
    b = qp.b[eq_rows] / an[eq_rows]
    C = qp.C[in_rows] / cn[in_rows, None]
    d = qp.d[in_rows] / cn[in_rows]

    keep_eq = _independent_rows(np.zeros((0, m)), A, range(A.shape[0]))
    A_ind, b_ind = A[keep_eq], b[keep_eq]

    # equality-feasible starting point
    u0 = np.zeros(m) if warm_start is None else np.asarray(warm_start, dtype=float).copy()
    if A_ind.shape[0]:
        u0 = u0 + np.linalg.lstsq(A_ind, b_ind - A_ind @ u0, rcond=None)[0]
    eq_res = A @ u0 - b
    eq_scale = 1.0 + np.abs(b).max(initial=0) + np.abs(u0).max(initial=0)
    if np.abs(eq_res).max(initial=0) > 1e-9 * eq_scale:
        # inconsistent equalities: the least-squares residual certifies it
        r = A @ np.linalg.lstsq(A, b, rcond=None)[0] - b
        y = np.zeros(qp.A.shape[0])
        y[eq_rows] = r / an[eq_rows]
        return _infeasible(qp, u0, (y, np.zeros(qp.C.shape[0])), reg, 0)

    # translate working-set guess into normalized row indices
    pos = {int(r): k for k, r in enumerate(in_rows)}
    guess = [pos[j] for j in (working_set or ()) if j in pos]

    iterations = 0
    viol = C @ u0 - d
    # per-row scale: big right-hand sides elsewhere must not hide a violation
    feas_tol = 1e-9 * (1.0 + np.abs(d) + np.abs(C) @ np.abs(u0))
    if working_set is None and warm_start is not None:
        # rows tight at the warm start are the natural working-set guess
        guess = [int(j) for j in np.flatnonzero(np.abs(viol) <= feas_tol)]
    if viol.size == 0 or np.all(viol <= feas_tol):
        u = u0
        active = [j for j in guess if viol[j] >= -feas_tol[j]]
        W = _independent_rows(A_ind, C, active)
    else:
        # phase 1: minimize t  s.t.  A u = b,  C u - t <= d,  t >= 0, with a
        # proximal term pulling u towards the start.  When feasible points lie
        # far away that term can stall t above zero, so an infeasibility claim
        # is only accepted once its Farkas certificate checks out; otherwise
        # phase 1 restarts from where it stopped with a much weaker pull.
        n1 = m + 1
        A1 = np.hstack([A_ind, np.zeros((A_ind.shape[0], 1))])
        C1 = np.vstack([np.hstack([C, -np.ones((C.shape[0], 1))]), np.eye(1, n1, m) * -1.0])
        d1 = np.concatenate([d, [0.0]])
        t0 = float(viol.max())
        start_active = [int(j) for j in guess if viol[j] >= t0 - feas_tol[j]]
        worst = int(np.argmax(viol))
        if worst not in start_active:
            start_active.insert(0, worst)
        W1 = _independent_rows(A1, C1, start_active)
        v = np.concatenate([u0, [t0]])
        reg1 = reg
        for attempt in range(PHASE1_RESTARTS + 1):
            H1 = reg1 * np.eye(n1)
            g1 = np.zeros(n1)
            g1[:m] = -reg1 * v[:m]
            g1[m] = 1.0
            eng1 = _Engine(H1, g1, A1, b_ind, C1, d1, None, tol, max_iter)
            status1, v, W1, lam1, _ = eng1.run(v, W1, detect_unbounded=False)
            iterations += eng1.iterations
            if status1 != OPTIMAL:
                res = _pack(qp, v[:m], np.zeros(qp.A.shape[0]), np.zeros(qp.C.shape[0]), reg, iterations, NUMERICAL_FAILURE, ())
                raise QPNumericalError("phase-1 iteration cap reached", res)
            t_star = float(v[m])
            t_tol = 1e-9 * (1.0 + np.abs(d).max(initial=0) + np.abs(v[:m]).max(initial=0))
            if t_star <= t_tol:
                break
            me1 = A1.shape[0]
            mu_n = np.zeros(C1.shape[0])
            mu_n[W1] = lam1[me1:]
            y_eq_n = np.zeros(A.shape[0])
            y_eq_n[keep_eq] = lam1[:me1]
            y_eq = np.zeros(qp.A.shape[0])
            y_eq[eq_rows] = y_eq_n / an[eq_rows]
            y_in = np.zeros(qp.C.shape[0])
            y_in[in_rows] = np.maximum(mu_n[: C.shape[0]], 0.0) / cn[in_rows]
            if attempt == PHASE1_RESTARTS or farkas_check(qp, y_eq, y_in)["valid"]:
                res = _infeasible(qp, v[:m], (y_eq, y_in), reg, iterations)
                res.detail["phase1_restarts"] = attempt
                return res
            reg1 *= 1e-3
        u = v[:m]
        W = _independent_rows(A_ind, C, [j for j in W1 if j < C.shape[0]])

    eng = _Engine(H, qp.g, A_ind, b_ind, C, d, qp.Q, tol, max(1, max_iter - iterations))
    status, u, W, lam, ray = eng.run(u, W)
    iterations += eng.iterations
    refined = False
    if status == OPTIMAL and reg > 0:
        # proximal refinement: the diagonal term pulls towards the previous
        # answer instead of the origin, so the bias it causes vanishes as the
        # iterates settle while ties keep their minimum-norm resolution
        for _ in range(PROX_REFINEMENTS):
            eng = _Engine(H, qp.g - reg * u, A_ind, b_ind, C, d, qp.Q, tol, max(1, max_iter - iterations))
            nxt = eng.run(u, W)
            iterations += eng.iterations
            if nxt[0] != OPTIMAL:
                break
            step = np.abs(nxt[1] - u).max(initial=0.0)
            status, u, W, lam, ray = nxt
            refined = True
            if step <= 1e-13 * (1.0 + np.abs(u).max(initial=0.0)):
                break
    if status == UNBOUNDED:
        res = _pack(qp, u, np.zeros(qp.A.shape[0]), np.zeros(qp.C.shape[0]), reg, iterations, UNBOUNDED, ())
        res.ray = ray
        return res
    if status != OPTIMAL:
        res = _pack(qp, u, np.zeros(qp.A.shape[0]), np.zeros(qp.C.shape[0]), reg, iterations, NUMERICAL_FAILURE, ())
        raise QPNumericalError("iteration cap reached", res)

    me = A_ind.shape[0]
    objective = None
    polished = _polish(qp.Q, qp.g, np.vstack([A_ind, C[W]]), np.concatenate([b_ind, d[W]]), u, lam, me)
    if polished is not None:
        u_p, lam_p, objective = polished
        if np.all(C @ u_p - d <= feas_tol):
            u, lam = u_p, lam_p
        else:
            objective = None
    lam_eq_n = np.zeros(A.shape[0])
    lam_eq_n[keep_eq] = lam[:me] if lam is not None else 0.0
    lam_in_n = np.zeros(C.shape[0])
    if W:
        lam_in_n[W] = np.maximum(lam[me:], 0.0)
    lam_eq = np.zeros(qp.A.shape[0])
    lam_eq[eq_rows] = lam_eq_n / an[eq_rows]
    lam_in = np.zeros(qp.C.shape[0])
    lam_in[in_rows] = lam_in_n / cn[in_rows]
    active = tuple(sorted(int(in_rows[j]) for j in W))
    res = _pack(qp, u, lam_eq, lam_in, 0.0 if refined or objective is not None else reg, iterations, OPTIMAL, active)
    if objective is not None:
        res.objective = objective
    res.detail["tie_regularization"] = reg
    res.detail["kkt_polished"] = objective is not None
    return res


def _polish(Q, g, M, b, u, lam, n_eq, sweeps: int = 3):
    """Iterative refinement of the KKT system on the final working set.

    Residuals and the objective are accumulated in extended precision, so the
    reported optimum does not depend on the round-off of the path that found
    it.  Returns ``None`` when the refined multipliers change sign.
    """
    m, k = u.size, M.shape[0]
    if lam is None or lam.size != k:
        return None
    K = np.block([[Q, M.T], [M, np.zeros((k, k))]])
    ext = np.longdouble
    Qx, gx, Mx, bx = Q.astype(ext), g.astype(ext), M.astype(ext), b.astype(ext)
    z = np.concatenate([u, lam]).astype(ext)
    for _ in range(sweeps):
        ux, lx = z[:m], z[m:]
        r = np.concatenate([-gx - Qx @ ux - Mx.T @ lx, bx - Mx @ ux])
        if not np.all(np.isfinite(r)):
            return None
        step = np.linalg.lstsq(K, r.astype(float), rcond=None)[0]
        z = z + step.astype(ext)
        if np.abs(step).max(initial=0.0) <= 1e-15 * (1.0 + np.abs(z).max(initial=0.0)):
            break
    ux, lx = z[:m], z[m:]
    if np.any(lx[n_eq:] < -1e-9 * (1.0 + np.abs(lx).max(initial=0.0))):
        return None
    objective = float(ext(0.5) * ux @ Qx @ ux + gx @ ux)
    return ux.astype(float), np.asarray(lx, dtype=float), objective


def _pack(qp, u, lam_eq, lam_in, reg, iterations, status, active) -> QPResult:
    obj = float(0.5 * u @ qp.Q @ u + qp.g @ u) if status == OPTIMAL else float("nan")
    kkt = kkt_residual(qp, u, lam_eq, lam_in, reg) if status == OPTIMAL else float("nan")
    return QPResult(status, u, lam_eq, lam_in, obj, kkt, iterations, reg, active)


def _infeasible(qp, u, cert, reg, iterations) -> QPResult:
    y_eq, y_in = cert
    res = _pack(qp, u, np.zeros(qp.A.shape[0]), np.zeros(qp.C.shape[0]), reg, iterations, INFEASIBLE, ())
    res.certificate = (y_eq, y_in)
    res.detail["farkas"] = farkas_check(qp, y_eq, y_in)
    return res


def farkas_check(qp: QuadraticProgram, y_eq, y_in) -> dict:
    """Verify ``A'y_eq + C'y_in = 0, y_in >= 0, b'y_eq + d'y_in < 0`` (scaled)."""
    y_eq = np.asarray(y_eq, float)
    y_in = np.asarray(y_in, float)
    scale = max(np.abs(y_eq).max(initial=0), np.abs(y_in).max(initial=0), 1e-300)
    y_eq, y_in = y_eq / scale, y_in / scale
    ray = qp.A.T @ y_eq + qp.C.T @ y_in
    gap = -(qp.b @ y_eq + qp.d @ y_in)
    mag = 1.0 + (np.abs(qp.A).T @ np.abs(y_eq)).max(initial=0) + (np.abs(qp.C).T @ np.abs(y_in)).max(initial=0)
    ray_res = float(np.abs(ray).max(initial=0.0) / mag)
    return {
        "ray_residual": ray_res,
        "gap": float(gap),
        "dual_sign_ok": bool(np.all(y_in >= -1e-12)),
        "valid": bool(gap > 1e-9 and np.all(y_in >= -1e-12) and ray_res < 1e-7),
    }
