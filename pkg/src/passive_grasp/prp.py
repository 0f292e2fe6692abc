"""Passive response problems as mixed-integer QPs.

Two encodings share one variable layout::

    beta  (E)   pyramid edge amplitudes, contact forces c = D beta
    x     (6)   virtual object displacement (direct problem only)
    s     (1)   step along the previous residual (movement-constrained only)
    q     (d)   virtual joint motion, positive closes the hand
    tau   (d)   equilibrium joint torque      (direct actuation)
    f     (a)   equilibrium actuator force    (tendon actuation)

Each contact and each joint/actuator owns one binary regime variable.  A
contact's normal force and its virtual spring compression are
complementary::

    0 <= c_n  _|_  c_n - k * compression >= 0,   compression = (J q - G' x)_n

with unit stiffness ``k``; a joint's motion and its torque excess over the
command are complementary the same way.  With normals pointing into the
object, hand motion towards the object and object motion away from the
finger both change the compression with the signs above.

The big-M rewrite of every complementarity uses constants k1..k6.  The MIQP
is solved to global optimality by best-first branch-and-bound on the
continuous relaxation (binaries in [0, 1]); small problems can also be
enumerated exhaustively as an independent check.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .qpcore import INFEASIBLE, OPTIMAL, UNBOUNDED, QuadraticProgram, solve_qp
from .scene import Actuation, AssembledGrasp, DirectActuation, TendonActuation, as_wrench, validate_commands

log = logging.getLogger(__name__)

SPRING_STIFFNESS = 1.0


class BigMSaturationWarning(UserWarning):
    """A big-M virtual limit is binding at the optimum; increase kappa."""


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for :func:`solve_miqp`.

    Big-M constants left as ``None`` are derived from a reference force
    ``F = max(1, |w|, |tau_c|/L, |f_c| r_max/L)`` (infinity norms, ``r_max``
    the largest tendon moment arm) so that each carries its own unit::

        k1, k2  kappa F          normal force, spring separation [N]
        k3      kappa F / L      joint motion [rad]
        k4      kappa F L        joint torque excess [N m]
        k5      kappa F r_max/L  tendon excursion [m]
        k6      kappa F L/r_min  actuator force excess [N]

    where ``r_min`` is the smallest over actuators of each actuator's
    largest moment arm.
    """

    kappa: float = 1e3
    k1: Optional[float] = None
    k2: Optional[float] = None
    k3: Optional[float] = None
    k4: Optional[float] = None
    k5: Optional[float] = None
    k6: Optional[float] = None
    enumeration_threshold: int = 12
    qp_tol: float = 1e-10
    qp_max_iter: int = 10_000
    regularization: float = 1e-10
    prune_tol: float = 1e-9
    integrality_tol: float = 1e-7
    saturation_tol: float = 1e-6

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be > 0")
        for name in ("k1", "k2", "k3", "k4", "k5", "k6"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be > 0")

    def big_m(self, problem: "PRPProblem") -> np.ndarray:
        act = problem.actuation
        L = problem.grasp.characteristic_length
        ref = [1.0, float(np.abs(problem.w).max(initial=0.0))]
        r_max = r_min = 1.0
        if isinstance(act, DirectActuation):
            ref.append(float(np.abs(act.tau_c).max(initial=0.0)) / L)
        else:
            arms = np.abs(act.R).max(axis=0)
            if arms.size:
                r_max, r_min = float(arms.max()), float(arms.min())
            ref.append(float(np.abs(act.f_c).max(initial=0.0)) * r_max / L)
        F = self.kappa * max(ref)
        default = (F, F, F / L, F * L, F * r_max / L, F * L / r_min)
        return np.array([d if v is None else float(v) for d, v in zip(default, (self.k1, self.k2, self.k3, self.k4, self.k5, self.k6))])


@dataclass
class PRPProblem:
    """Structured MIQP data.

    Linear expressions are rows over the continuous variable vector ``u``:
    ``normal`` gives c_n, ``compression`` + ``compression0`` gives
    ``(J q - G' x)_n``, ``motion`` gives q_j or (R' q)_l and ``excess`` +
    ``excess0`` gives tau - tau_c or f - f_c.
    """

    kind: str
    grasp: AssembledGrasp
    actuation: Actuation
    w: np.ndarray
    slices: dict
    n_vars: int
    Q: np.ndarray
    g: np.ndarray
    const: float
    A: np.ndarray
    b: np.ndarray
    C: np.ndarray
    d: np.ndarray
    normal: np.ndarray
    compression: np.ndarray
    compression0: np.ndarray
    motion: np.ndarray
    excess: np.ndarray
    excess0: np.ndarray
    x_prev: Optional[np.ndarray] = None
    r_prev: Optional[np.ndarray] = None
    gamma: Optional[float] = None
    stiffness: float = SPRING_STIFFNESS

    @property
    def mode(self) -> str:
        return self.actuation.mode

    @property
    def n_contacts(self) -> int:
        return self.normal.shape[0]

    @property
    def n_loads(self) -> int:
        return self.motion.shape[0]

    @property
    def n_binaries(self) -> int:
        return self.n_contacts + self.n_loads

    @property
    def binary_names(self) -> list[str]:
        tag = "z_joint" if self.mode == "direct" else "z_actuator"
        return [f"y[{cid}]" for cid in self.grasp.contact_ids] + [f"{tag}[{k}]" for k in range(self.n_loads)]

    def spring_gap(self) -> tuple[np.ndarray, np.ndarray]:
        """Rows/offset of ``c_n - k * compression``."""
        k = self.stiffness
        return self.normal - k * self.compression, -k * self.compression0

    def big_m_system(self, big_m: Sequence[float]):
        """Full big-M system ``C u + B v <= d`` (base rows included)."""
        k1, k2, k3, k4, k5, k6 = big_m
        n, m, nv = self.n_contacts, self.n_loads, self.n_vars
        gap, gap0 = self.spring_gap()
        rows, brows, rhs = [self.C], [np.zeros((self.C.shape[0], n + m))], [self.d]
        for i in range(n):
            e = np.zeros(n + m)
            e[i] = 1.0
            rows += [-self.normal[i:i + 1], self.normal[i:i + 1], -gap[i:i + 1], gap[i:i + 1]]
            brows += [np.zeros((1, n + m)), -k1 * e[None], np.zeros((1, n + m)), k2 * e[None]]
            rhs += [[0.0], [0.0], [gap0[i]], [k2 - gap0[i]]]
        ka, kb = (k3, k4) if self.mode == "direct" else (k5, k6)
        for j in range(m):
            e = np.zeros(n + m)
            e[n + j] = 1.0
            rows += [-self.motion[j:j + 1], self.motion[j:j + 1], -self.excess[j:j + 1], self.excess[j:j + 1]]
            brows += [np.zeros((1, n + m)), -ka * e[None], np.zeros((1, n + m)), kb * e[None]]
            rhs += [[0.0], [0.0], [self.excess0[j]], [kb - self.excess0[j]]]
        C = np.vstack(rows) if rows else np.zeros((0, nv))
        return C, np.vstack(brows), np.concatenate([np.asarray(r, float) for r in rhs])

    def split(self, u) -> dict:
        return {k: np.asarray(u)[sl].copy() for k, sl in self.slices.items()}

    def displacement(self, u) -> np.ndarray:
        if self.kind == "prp":
            return np.asarray(u)[self.slices["x"]].copy()
        return self.x_prev + float(np.asarray(u)[self.slices["s"]][0]) * self.r_prev


def _layout(grasp: AssembledGrasp, actuation: Actuation, kind: str):
    E, d = grasp.E, grasp.n_joints
    a = d if isinstance(actuation, DirectActuation) else actuation.n_actuators
    sizes = [("beta", E), ("x", 6) if kind == "prp" else ("s", 1), ("q", d), ("tau" if isinstance(actuation, DirectActuation) else "f", a)]
    slices, start = {}, 0
    for name, size in sizes:
        slices[name] = slice(start, start + size)
        start += size
    return slices, start


def _encode(grasp, actuation, w, kind, x_prev=None, r_prev=None, gamma=None) -> PRPProblem:
    validate_commands(grasp, actuation)
    w = as_wrench(w)
    slices, nv = _layout(grasp, actuation, kind)
    sb, sq = slices["beta"], slices["q"]
    n, d = grasp.n, grasp.n_joints
    GD = grasp.G @ grasp.D
    JtD = grasp.J.T @ grasp.D
    nrows = grasp.normal_rows
    Dn = grasp.D[nrows]
    Jn = grasp.J[nrows]
    Gn = grasp.G[:, nrows]

    Q = np.zeros((nv, nv))
    g = np.zeros(nv)
    if kind == "prp":
        Q[sb, sb] = 2.0 * Dn.T @ Dn
        const = 0.0
    else:
        Q[sb, sb] = 2.0 * GD.T @ GD
        g[sb] = 2.0 * GD.T @ w
        const = float(w @ w)

    eq_rows, eq_rhs = [], []
    if kind == "prp":
        Aw = np.zeros((6, nv))
        Aw[:, sb] = GD
        eq_rows.append(Aw)
        eq_rhs.append(-w)
    Atau = np.zeros((d, nv))
    Atau[:, sb] = JtD
    if isinstance(actuation, DirectActuation):
        Atau[:, slices["tau"]] = -np.eye(d)
    else:
        Atau[:, slices["f"]] = -actuation.R
    eq_rows.append(Atau)
    eq_rhs.append(np.zeros(d))
    A = np.vstack(eq_rows)
    b = np.concatenate(eq_rhs)

    # base inequalities: F beta <= 0, and the step bounds
    C = [np.hstack([grasp.F, np.zeros((grasp.E, nv - grasp.E))])]
    dvec = [np.zeros(grasp.E)]
    if kind == "movement":
        srow = np.zeros((2, nv))
        srow[0, slices["s"]] = -1.0
        srow[1, slices["s"]] = 1.0
        C.append(srow)
        dvec.append(np.array([0.0, gamma]))
    C = np.vstack(C)
    dvec = np.concatenate(dvec)

    normal = np.zeros((n, nv))
    normal[:, sb] = Dn
    comp = np.zeros((n, nv))
    comp[:, sq] = Jn
    if kind == "prp":
        comp[:, slices["x"]] = -Gn.T
        comp0 = np.zeros(n)
    else:
        comp[:, slices["s"]] = -(Gn.T @ r_prev)[:, None]
        comp0 = -Gn.T @ x_prev

    if isinstance(actuation, DirectActuation):
        motion = np.zeros((d, nv))
        motion[:, sq] = np.eye(d)
        excess = np.zeros((d, nv))
        excess[:, slices["tau"]] = np.eye(d)
        excess0 = -actuation.tau_c.copy()
    else:
        a = actuation.n_actuators
        motion = np.zeros((a, nv))
        motion[:, sq] = actuation.R.T
        excess = np.zeros((a, nv))
        excess[:, slices["f"]] = np.eye(a)
        excess0 = -actuation.f_c.copy()

    return PRPProblem(
        kind=kind, grasp=grasp, actuation=actuation, w=w, slices=slices, n_vars=nv,
        Q=Q, g=g, const=const, A=A, b=b, C=C, d=dvec,
        normal=normal, compression=comp, compression0=comp0,
        motion=motion, excess=excess, excess0=excess0,
        x_prev=None if x_prev is None else np.asarray(x_prev, float),
        r_prev=None if r_prev is None else np.asarray(r_prev, float),
        gamma=gamma,
    )


def encode_prp(grasp: AssembledGrasp, commands: Actuation, w) -> PRPProblem:
    """Direct passive response problem: minimize the spring energy sum c_n^2
    subject to full object equilibrium ``G D beta = -w``."""
    return _encode(grasp, commands, w, "prp")


def encode_movement_constrained(grasp: AssembledGrasp, commands: Actuation, w, x_prev, r_prev, gamma: float) -> PRPProblem:
    """Movement-constrained problem: minimize |w + G D beta|^2 with the object
    displacement restricted to ``x_prev + s r_prev``, ``0 <= s <= gamma``."""
    if not gamma > 0:
        raise ValueError("gamma must be > 0")
    x_prev = as_wrench(x_prev)
    r_prev = as_wrench(r_prev)
    return _encode(grasp, commands, w, "movement", x_prev=x_prev, r_prev=r_prev, gamma=float(gamma))


# ---------------------------------------------------------------------------
# node problems


def _node_qp(problem: PRPProblem, big_m: np.ndarray, fixed: dict[int, int]):
    """QP for a node: fixed binaries substituted, free ones relaxed to [0, 1].

    Returns ``(qp, keep, free)`` where ``keep`` lists retained continuous
    variables (the rest are implied zero) and ``free`` the relaxed binaries,
    appended after the retained variables.
    """
    k1, k2, k3, k4, k5, k6 = big_m
    n, m, nv = problem.n_contacts, problem.n_loads, problem.n_vars
    grasp = problem.grasp
    direct = problem.mode == "direct"
    ka, kb = (k3, k4) if direct else (k5, k6)
    gap, gap0 = problem.spring_gap()
    free = [i for i in range(n + m) if i not in fixed]
    nf = len(free)
    fcol = {b: k for k, b in enumerate(free)}

    drop = np.zeros(nv, dtype=bool)
    sb = problem.slices["beta"]
    sq = problem.slices["q"]
    for i in range(n):
        if fixed.get(i) == 0:
            es = grasp.edge_slices[i]
            drop[sb.start + es.start:sb.start + es.stop] = True
    if direct:
        for j in range(m):
            if fixed.get(n + j) == 0:
                drop[sq.start + j] = True

    eq, eqr, ineq, ineqr = [problem.A], [problem.b], [problem.C], [problem.d]
    if nf:
        eq = [np.hstack([problem.A, np.zeros((problem.A.shape[0], nf))])]
        ineq = [np.hstack([problem.C, np.zeros((problem.C.shape[0], nf))])]

    def row(expr, bcoef=0.0, b=None):
        r = np.zeros(nv + nf)
        r[:nv] = expr
        if b is not None:
            r[nv + fcol[b]] = bcoef
        return r

    def add_pair(idx, first, first0, second, second0, M1, M2):
        """first >= 0, second >= 0, complementary; first <= M1 y, second <= M2 (1 - y)."""
        y = fixed.get(idx)
        if y is None:
            ineq.append(np.vstack([row(-first), row(first, -M1, idx), row(-second), row(second, M2, idx)]))
            ineqr.append(np.array([first0, -first0, second0, M2 - second0]))
        elif y == 1:
            eq.append(row(second)[None])
            eqr.append(np.array([-second0]))
            ineq.append(np.vstack([row(-first), row(first)]))
            ineqr.append(np.array([first0, M1 - first0]))
        else:
            eq.append(row(first)[None])
            eqr.append(np.array([-first0]))
            ineq.append(np.vstack([row(-second), row(second)]))
            ineqr.append(np.array([second0, M2 - second0]))

    for i in range(n):
        add_pair(i, problem.normal[i], 0.0, gap[i], gap0[i], k1, k2)
    for j in range(m):
        add_pair(n + j, problem.motion[j], 0.0, problem.excess[j], problem.excess0[j], ka, kb)

    if nf:
        box = np.zeros((2 * nf, nv + nf))
        box[:nf, nv:] = -np.eye(nf)
        box[nf:, nv:] = np.eye(nf)
        ineq.append(box)
        ineqr.append(np.concatenate([np.zeros(nf), np.ones(nf)]))

    A = np.vstack(eq)
    b = np.concatenate(eqr)
    C = np.vstack(ineq)
    d = np.concatenate(ineqr)
    keep_cols = np.concatenate([~drop, np.ones(nf, dtype=bool)])
    A, C = A[:, keep_cols], C[:, keep_cols]
    Q = np.zeros((keep_cols.sum(),) * 2)
    keep = np.flatnonzero(~drop)
    Q[: keep.size, : keep.size] = problem.Q[np.ix_(keep, keep)]
    g = np.concatenate([problem.g[keep], np.zeros(nf)])

    # rows emptied by dropping variables become constant checks
    zero_eq = ~np.any(A != 0, axis=1)
    zero_in = ~np.any(C != 0, axis=1)
    if np.any(np.abs(b[zero_eq]) > 1e-12) or np.any(d[zero_in] < -1e-12):
        return None, keep, free
    qp = QuadraticProgram(Q, g, A[~zero_eq], b[~zero_eq], C[~zero_in], d[~zero_in])
    return qp, keep, free


@dataclass
class _Node:
    fixed: dict
    bound: float
    u: Optional[np.ndarray]
    v: Optional[np.ndarray]
    result: object


def _solve_node(problem, big_m, fixed, config, warm=None) -> _Node:
    qp, keep, free = _node_qp(problem, big_m, fixed)
    if qp is None:
        return _Node(fixed, np.inf, None, None, None)
    ws = None
    if warm is not None:
        u_full, v_full = warm
        ws = np.concatenate([u_full[keep], v_full[free] if len(free) else np.zeros(0)])
    res = solve_qp(qp, tol=config.qp_tol, max_iter=config.qp_max_iter, regularization=config.regularization,
                   warm_start=ws, check_convexity=False)
    if res.status == INFEASIBLE:
        return _Node(fixed, np.inf, None, None, res)
    if res.status == UNBOUNDED:
        raise RuntimeError("passive response relaxation unbounded; the objective is bounded below by construction")
    u = np.zeros(problem.n_vars)
    u[keep] = res.u[: keep.size]
    v = np.zeros(problem.n_binaries)
    for b, val in fixed.items():
        v[b] = val
    for k, b in enumerate(free):
        v[b] = res.u[keep.size + k]
    return _Node(fixed, res.objective + problem.const, u, v, res)


@dataclass
class PRPSolution:
    status: str
    objective: float
    beta: Optional[np.ndarray] = None
    c: Optional[np.ndarray] = None
    x: Optional[np.ndarray] = None
    q: Optional[np.ndarray] = None
    tau: Optional[np.ndarray] = None
    f: Optional[np.ndarray] = None
    s: Optional[float] = None
    binaries: Optional[np.ndarray] = None
    complementarity_violation: float = float("nan")
    residual: Optional[np.ndarray] = None
    u: Optional[np.ndarray] = None
    kkt_residual: float = float("nan")
    nodes: int = 0
    qp_solves: int = 0
    warnings: list = field(default_factory=list)
    method: str = "bnb"

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    @property
    def c_normal(self) -> Optional[np.ndarray]:
        return None if self.c is None else self.c[:, 2].copy()


def complementarity_products(problem: PRPProblem, u) -> tuple[np.ndarray, np.ndarray]:
    """Per-contact ``c_n (c_n - k comp)`` and per-joint/actuator ``motion * excess``."""
    gap, gap0 = problem.spring_gap()
    cn = problem.normal @ u
    spring = cn * (gap @ u + gap0)
    load = (problem.motion @ u) * (problem.excess @ u + problem.excess0)
    return spring, load


def _finish(problem: PRPProblem, node: _Node, big_m, method, nodes, qp_solves, config) -> PRPSolution:
    u = node.u
    grasp = problem.grasp
    parts = problem.split(u)
    beta = parts["beta"]
    c = (grasp.D @ beta).reshape(grasp.n, 3)
    spring, load = complementarity_products(problem, u)
    viol = float(np.abs(np.concatenate([spring, load])).max(initial=0.0))
    sol = PRPSolution(
        status=OPTIMAL,
        objective=float(node.bound),
        beta=beta,
        c=c,
        x=problem.displacement(u),
        q=parts["q"],
        tau=parts.get("tau"),
        f=parts.get("f"),
        s=float(parts["s"][0]) if "s" in parts else None,
        binaries=np.rint(node.v).astype(int),
        complementarity_violation=viol,
        residual=problem.w + grasp.G @ grasp.D @ beta,
        u=u,
        kkt_residual=float(node.result.kkt_residual),
        nodes=nodes,
        qp_solves=qp_solves,
        method=method,
    )
    sol.warnings.extend(_saturation(problem, u, sol.binaries, big_m, config.saturation_tol))
    for msg in sol.warnings:
        warnings.warn(msg, BigMSaturationWarning, stacklevel=3)
    return sol


def _saturation(problem, u, binaries, big_m, tol) -> list[str]:
    k1, k2, k3, k4, k5, k6 = big_m
    direct = problem.mode == "direct"
    ka, kb = (k3, k4) if direct else (k5, k6)
    gap, gap0 = problem.spring_gap()
    out = []
    n = problem.n_contacts
    names = problem.binary_names
    for i in range(n):
        if binaries[i] == 1 and problem.normal[i] @ u >= k1 * (1 - tol):
            out.append(f"big-M saturation: {names[i]} normal force at k1={k1:g}")
        if binaries[i] == 0 and gap[i] @ u + gap0[i] >= k2 * (1 - tol):
            out.append(f"big-M saturation: {names[i]} spring separation at k2={k2:g}")
    for j in range(problem.n_loads):
        if binaries[n + j] == 1 and problem.motion[j] @ u >= ka * (1 - tol):
            out.append(f"big-M saturation: {names[n + j]} motion at limit {ka:g}")
        if binaries[n + j] == 0 and problem.excess[j] @ u + problem.excess0[j] >= kb * (1 - tol):
            out.append(f"big-M saturation: {names[n + j]} load excess at limit {kb:g}")
    return out


def _integral(v, tol):
    return np.all(np.minimum(np.abs(v), np.abs(1 - v)) <= tol)


def solve_miqp(
    problem: PRPProblem,
    config: SolverConfig = SolverConfig(),
    *,
    method: str = "bnb",
    hint: Optional[Sequence[int]] = None,
) -> PRPSolution:
    """Globally optimal solution over all binary regime assignments.

    ``method="bnb"`` runs best-first branch-and-bound (most-fractional
    branching, lowest index on ties); ``method="enumerate"`` solves the QP
    of every assignment and is limited to ``config.enumeration_threshold``
    binaries.  ``hint`` is an assignment tried first to seed the incumbent.
    """
    big_m = config.big_m(problem)
    nb = problem.n_binaries
    tol = config.prune_tol

    if method == "enumerate":
        if nb > config.enumeration_threshold:
            raise ValueError(f"{nb} binaries exceed the enumeration threshold {config.enumeration_threshold}")
        best = None
        solves = 0
        for assignment in itertools.product((0, 1), repeat=nb):
            node = _solve_node(problem, big_m, dict(enumerate(assignment)), config)
            solves += 1
            if node.u is not None and (best is None or node.bound < best.bound - tol):
                best = node
        if best is None:
            return PRPSolution(status=INFEASIBLE, objective=np.inf, nodes=solves, qp_solves=solves, method=method)
        return _finish(problem, best, big_m, method, solves, solves, config)

    if method != "bnb":
        raise ValueError(f"unknown method {method!r}")

    incumbent: Optional[_Node] = None
    solves = 0

    def consider(node):
        nonlocal incumbent
        if node.u is not None and (incumbent is None or node.bound < incumbent.bound - tol):
            incumbent = node

    def prunable(bound):
        return incumbent is not None and bound >= incumbent.bound - tol - tol * abs(incumbent.bound)

    if hint is not None and len(hint) == nb:
        consider(_solve_node(problem, big_m, {i: int(v) for i, v in enumerate(hint)}, config))
        solves += 1

    root = _solve_node(problem, big_m, {}, config)
    solves += 1
    heap: list = []
    seq = itertools.count()
    if root.u is not None:
        heapq.heappush(heap, (root.bound, next(seq), root))
    nodes = 1
    while heap:
        bound, _, node = heapq.heappop(heap)
        if prunable(bound):
            continue
        free = [i for i in range(nb) if i not in node.fixed]
        if not free:
            consider(node)
            continue
        vals = node.v[free]
        if _integral(vals, config.integrality_tol):
            leaf = _solve_node(problem, big_m, {**node.fixed, **{i: int(round(node.v[i])) for i in free}}, config,
                               warm=(node.u, node.v))
            solves += 1
            consider(leaf)
            if leaf.u is not None and leaf.bound <= node.bound + tol + tol * abs(node.bound):
                continue
            # rounding lost optimality (tolerance artefact): keep branching
        frac = np.abs(vals - 0.5)
        branch = free[int(np.argmin(frac))]
        for val in (0, 1) if node.v[branch] < 0.5 else (1, 0):
            child = _solve_node(problem, big_m, {**node.fixed, branch: val}, config, warm=(node.u, node.v))
            solves += 1
            nodes += 1
            if child.u is None or prunable(child.bound):
                continue
            if len(child.fixed) == nb:
                consider(child)
            else:
                heapq.heappush(heap, (child.bound, next(seq), child))

    if incumbent is None:
        return PRPSolution(status=INFEASIBLE, objective=np.inf, nodes=nodes, qp_solves=solves, method=method)
    return _finish(problem, incumbent, big_m, method, nodes, solves, config)
