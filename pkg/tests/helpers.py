"""Independent oracles and random scene generators shared by the tests."""

from __future__ import annotations

import itertools

import numpy as np

from passive_grasp.prp import encode_movement_constrained, encode_prp
from passive_grasp.scene import (
    Contact,
    DirectActuation,
    GraspScene,
    Joint,
    KinematicChain,
    Link,
    TendonActuation,
    assemble,
)


def kkt_enumerate(Q, g, A=None, b=None, C=None, d=None, tol=1e-9):
    """Optimal value of a convex QP by trying every active set.

    For each subset of inequalities the KKT system with those rows held as
    equalities is solved densely; a subset counts when its point is feasible
    and its inequality multipliers are nonnegative.  Returns ``(objective, u)``
    or ``(None, None)`` when no subset qualifies.
    """
    Q = np.asarray(Q, float)
    n = Q.shape[0]
    g = np.asarray(g, float)
    A = np.zeros((0, n)) if A is None else np.asarray(A, float).reshape(-1, n)
    b = np.zeros(0) if b is None else np.asarray(b, float)
    C = np.zeros((0, n)) if C is None else np.asarray(C, float).reshape(-1, n)
    d = np.zeros(0) if d is None else np.asarray(d, float)
    best, best_u = None, None
    me = A.shape[0]
    for k in range(C.shape[0] + 1):
        for S in itertools.combinations(range(C.shape[0]), k):
            M = np.vstack([A, C[list(S)]])
            rhs = np.concatenate([b, d[list(S)]])
            m = M.shape[0]
            K = np.block([[Q, M.T], [M, np.zeros((m, m))]])
            r = np.concatenate([-g, rhs])
            sol = np.linalg.lstsq(K, r, rcond=None)[0]
            if np.abs(K @ sol - r).max(initial=0.0) > 1e-8 * (1 + np.abs(r).max(initial=0.0)):
                continue
            u = sol[:n]
            lam = sol[n + me:]
            if np.any(C @ u > d + tol * (1 + np.abs(d))) or np.any(lam < -tol):
                continue
            obj = 0.5 * u @ Q @ u + g @ u
            if best is None or obj < best:
                best, best_u = obj, u
    return best, best_u


def branch_qp(problem, assignment):
    """QP of one fixed regime assignment, written without big-M constants.

    Contact ``i`` with ``y_i = 1`` has its spring gap at zero and a
    nonnegative normal force; with ``y_i = 0`` its normal force is zero and
    its gap nonnegative.  Joints/actuators likewise with motion and excess.
    Returns ``(Q, g, A, b, C, d)``.
    """
    n = problem.n_contacts
    gap, gap0 = problem.spring_gap()
    A, b = [problem.A], [problem.b]
    C, d = [problem.C], [problem.d]
    for i in range(n):
        if assignment[i]:
            A.append(gap[i:i + 1]); b.append(-gap0[i:i + 1])
            C.append(-problem.normal[i:i + 1]); d.append(np.zeros(1))
        else:
            A.append(problem.normal[i:i + 1]); b.append(np.zeros(1))
            C.append(-gap[i:i + 1]); d.append(gap0[i:i + 1])
    for j in range(problem.n_loads):
        if assignment[n + j]:
            A.append(problem.excess[j:j + 1]); b.append(-problem.excess0[j:j + 1])
            C.append(-problem.motion[j:j + 1]); d.append(np.zeros(1))
        else:
            A.append(problem.motion[j:j + 1]); b.append(np.zeros(1))
            C.append(-problem.excess[j:j + 1]); d.append(problem.excess0[j:j + 1])
    return problem.Q, problem.g, np.vstack(A), np.concatenate(b), np.vstack(C), np.concatenate(d)


def _unit(v):
    v = np.asarray(v, float)
    return v / np.linalg.norm(v)


def random_scene(rng: np.random.Generator, max_binaries: int = 8, edge_count: int = 4, tendon: bool = False,
                 planar: bool = False) -> GraspScene:
    """Contacts on a 3 cm sphere with inward normals, some on 1- or 2-joint fingers.

    Joint axes are flipped so that positive rotation pushes each contact
    into the object.  At most ``max_binaries`` contacts plus joints.
    """
    r = 0.03
    contacts, chains = [], []
    budget = max_binaries
    n_fingers = int(rng.integers(0, 3))
    for f in range(n_fingers):
        n_links = int(rng.integers(1, 3))
        if budget < 2 * n_links:
            break
        joints, links = [], []
        for k in range(n_links):
            p = _unit(rng.normal(size=3) * ([1, 1, 0.0] if planar else 1)) * r
            normal = -p / r
            arm = np.cross(normal, _unit(rng.normal(size=3)))
            origin = p + 0.02 * _unit(arm)
            axis = _unit([0, 0, 1.0]) if planar else _unit(rng.normal(size=3))
            if np.dot(np.cross(axis, p - origin), normal) < 0:
                axis = -axis
            if abs(np.dot(np.cross(axis, p - origin), normal)) < 1e-3:
                axis = _unit(np.cross(p - origin, normal))
            joints.append(Joint(f"f{f}_j{k}", axis, origin))
            links.append(Link(f"f{f}_l{k}", tuple(j.name for j in joints)))
            contacts.append(Contact(f"f{f}_c{k}", p, normal, float(rng.uniform(0.2, 1.0)), links[-1].name, edge_count))
            budget -= 2
        chains.append(KinematicChain(f"finger{f}", tuple(joints), tuple(links)))
    n_palm = int(rng.integers(1 if contacts else 2, max(2, min(budget, 3)) + 1))
    for i in range(n_palm):
        p = _unit(rng.normal(size=3) * ([1, 1, 0.0] if planar else 1)) * r
        contacts.append(Contact(f"palm{i}", p, -p / r, float(rng.uniform(0.0, 1.0)), "palm", edge_count))
    d = sum(len(ch.joints) for ch in chains)
    tau = rng.uniform(0.0, 0.1, size=d) * (rng.random(size=d) < 0.7)
    if tendon and d:
        a = int(rng.integers(1, d + 1))
        R = rng.uniform(0.002, 0.01, size=(d, a))
        act = TendonActuation(R, rng.uniform(0.0, 10.0, size=a))
    else:
        act = DirectActuation(tau)
    return GraspScene("random", r, tuple(contacts), tuple(chains), act)


def random_problem(rng: np.random.Generator, max_binaries: int = 8, tendon: bool = False):
    """A random direct or movement-constrained problem (half each)."""
    scene = random_scene(rng, max_binaries=max_binaries, tendon=tendon)
    grasp = assemble(scene)
    if rng.random() < 0.5:
        beta = rng.exponential(1.0, size=grasp.E) * (rng.random(size=grasp.E) < 0.5)
        w = -grasp.G @ grasp.D @ beta if rng.random() < 0.7 else rng.normal(size=6)
        return encode_prp(grasp, scene.actuation, w)
    w = rng.normal(size=6) * 2.0
    x_prev = rng.normal(size=6) * 0.1 * (rng.random() < 0.5)
    r_prev = w if rng.random() < 0.5 else rng.normal(size=6)
    return encode_movement_constrained(grasp, scene.actuation, w, x_prev, r_prev, float(rng.uniform(0.5, 10.0)))


def pinch_scene(torque: float = 0.1, mu: float = 0.5, edge_count: int = 8) -> GraspScene:
    """Two single-joint fingers squeezing the object along X.

    Each contact sits 2 cm from its joint, so a torque ``T`` pushes with
    ``50 T`` newton.
    """
    contacts, chains = [], []
    for side, s in (("l", 1.0), ("r", -1.0)):
        p = np.array([-s * 0.02, 0.0, 0.0])
        joint = Joint(f"{side}_j", (0.0, 0.0, -s), p + np.array([0.0, -0.02, 0.0]))
        chains.append(KinematicChain(f"finger_{side}", (joint,), (Link(f"{side}_link", (joint.name,)),)))
        contacts.append(Contact(f"{side}_tip", p, (s, 0.0, 0.0), mu, f"{side}_link", edge_count))
    return GraspScene("pinch", 0.02, tuple(contacts), tuple(chains), DirectActuation([torque, torque]))


def palm_scene(normals, positions, mu: float = 0.5, edge_count: int = 8, L: float = 0.03) -> GraspScene:
    contacts = tuple(Contact(f"c{i}", p, nrm, mu, "palm", edge_count) for i, (p, nrm) in enumerate(zip(positions, normals)))
    return GraspScene("palm", L, contacts, (), DirectActuation([]))


def complementarity_report(sol, actuation) -> tuple[float, float]:
    """Largest complementarity product and largest one-sided bound violation.

    Products are ``c_n (c_n - k comp)`` per contact and ``motion * excess``
    per joint/actuator, as reported on the solution; bounds are
    ``beta >= 0``, ``c_n >= 0`` and ``tau >= tau_c`` (or ``f >= f_c``).
    """
    if isinstance(actuation, TendonActuation):
        excess = sol.f - actuation.f_c
    else:
        excess = sol.tau - actuation.tau_c
    bound = float(max(0.0, -sol.beta.min(initial=0.0), -sol.c[:, 2].min(initial=0.0), -excess.min(initial=0.0)))
    return float(sol.complementarity_violation), bound
