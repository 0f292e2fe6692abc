"""Acceptance suite: one pass/fail line per criterion, printed to the terminal.

Expensive runs (bisection searches, iterative verdicts) are cached at module
level so that the convergence and big-M criteria reuse the runs of the
criteria they audit.
"""

import functools
import time
import warnings

import numpy as np
import pytest

from passive_grasp.baseline import cone_excess, distribute, project_to_nullspace
from passive_grasp.fixtures import canonical_grasp, underactuated_grasp
from passive_grasp.iterate import NONCONVERGED, IterationConfig, energy_audit, solve_direct_prp, solve_iterative_prp
from passive_grasp.prp import (
    BigMSaturationWarning,
    SolverConfig,
    encode_movement_constrained,
    encode_prp,
    solve_miqp,
)
from passive_grasp.resistance import UNBOUNDED, DirectionQuery, normalize_region, plane_basis, search_resistance, sweep_plane
from passive_grasp.scene import DirectActuation, TendonActuation, assemble

from helpers import complementarity_report, random_problem

KAPPA = 1e3
UA_FORCE = 10.0  # actuator force of the underactuated fixtures [N]
SCENES = {
    "canonical_unloaded": lambda: canonical_grasp(0.0),
    "canonical_preloaded": lambda: canonical_grasp(0.1),
    "underactuated_proximal": lambda: underactuated_grasp(UA_FORCE, 0.0),
    "underactuated_distal": lambda: underactuated_grasp(0.0, UA_FORCE),
}
# physical loads [N] used by the wedging and baseline criteria
OUT_OF_PLANE = (0.0, 0.0, 8.0)
DOWNWARD = (0.0, -20.0, 0.0)
X_TORQUE = (0.0, 0.0, 0.0, 1.0, 0.0, 0.0)


def announce(capsys, number, name, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {number} [{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, detail


@functools.cache
def fixture(key):
    scene = SCENES[key]()
    return assemble(scene), scene.actuation


def config(kappa):
    return IterationConfig(solver=SolverConfig(kappa=kappa))


@functools.cache
def query(key, direction, kappa=KAPPA):
    """Full 20-step bisection; returns (SearchResult, seconds)."""
    grasp, act = fixture(key)
    t0 = time.perf_counter()
    res = search_resistance(grasp, act, DirectionQuery.along(direction), config(kappa))
    return res, time.perf_counter() - t0


@functools.cache
def verdict(key, force, kappa=KAPPA):
    grasp, act = fixture(key)
    return solve_iterative_prp(grasp, act, grasp.scale_wrench(force), config(kappa))


@functools.cache
def direct(key, force, kappa=KAPPA):
    grasp, act = fixture(key)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BigMSaturationWarning)
        return solve_direct_prp(grasp, act, grasp.scale_wrench(force), SolverConfig(kappa=kappa))


@functools.cache
def random_fixtures():
    """50 random direct/movement problems with 6-12 binary budgets (fixed seeds)."""
    out = []
    for seed in range(50):
        rng = np.random.default_rng(seed)
        out.append(random_problem(rng, max_binaries=int(rng.integers(6, 13)), tendon=seed % 4 == 0))
    return out


def magnitude(res):
    return "unbounded" if res.value is UNBOUNDED else f"{res.value:.6g} N"


# queries and verdicts that make up the acceptance runs, by criterion
QUERIES = [
    ("canonical_unloaded", (0, -1, 0)),
    ("canonical_preloaded", (0, 1, 0)),
    ("canonical_preloaded", (1, 0, 0)),
    ("canonical_preloaded", (-1, 0, 0)),
    ("canonical_preloaded", (0, -1, 0)),
    ("underactuated_proximal", (1, 0, 0)),
    ("underactuated_proximal", (-1, 0, 0)),
    ("underactuated_proximal", (0, 1, 0)),
    ("underactuated_proximal", (0, -1, 0)),
    ("underactuated_distal", (1, 0, 0)),
    ("underactuated_distal", (-1, 0, 0)),
    ("underactuated_distal", (0, 1, 0)),
    ("underactuated_distal", (0, -1, 0)),
    ("underactuated_proximal", X_TORQUE),
    ("underactuated_distal", X_TORQUE),
]
VERDICTS = [("canonical_preloaded", OUT_OF_PLANE), ("canonical_preloaded", DOWNWARD), ("canonical_preloaded", (0, 0, 0))]


def test_criterion_1_oracle_equivalence(capsys):
    t0 = time.perf_counter()
    worst, mismatched, largest = 0.0, [], 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BigMSaturationWarning)
        for k, p in enumerate(random_fixtures()):
            largest = max(largest, p.n_binaries)
            bnb, ref = solve_miqp(p), solve_miqp(p, method="enumerate")
            if bnb.status != ref.status:
                mismatched.append(k)
            elif ref.optimal:
                worst = max(worst, abs(bnb.objective - ref.objective))
    elapsed = time.perf_counter() - t0
    ok = not mismatched and worst <= 1e-6 and elapsed < 60.0
    announce(capsys, 1, "branch-and-bound equals enumeration", ok,
             f"50 fixtures (<= {largest} binaries), max |diff| {worst:.2e} (tol 1e-6), status mismatches {mismatched}, "
             f"{elapsed:.1f} s (limit 60 s)")


def test_criterion_2_complementarity_and_passivity(capsys):
    worst_product, worst_bound, count = 0.0, 0.0, 0
    solved = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BigMSaturationWarning)
        for p in random_fixtures():
            sol = solve_miqp(p)
            if sol.optimal:
                solved.append((sol, p.actuation))
    for key, force in VERDICTS:
        solved += [(st.solution, fixture(key)[1]) for st in verdict(key, force).trace.steps]
        sol = direct(key, force)
        if sol.optimal:
            solved.append((sol, fixture(key)[1]))
    for sol, act in solved:
        product, bound = complementarity_report(sol, act)
        worst_product, worst_bound = max(worst_product, product), max(worst_bound, bound)
        count += 1
    ok = worst_product <= 1e-6 and worst_bound <= 1e-9
    announce(capsys, 2, "complementarity and passivity", ok,
             f"{count} solutions, max product {worst_product:.2e} (tol 1e-6), max bound violation {worst_bound:.2e} (tol 1e-9)")


def test_criterion_3_canonical_case(capsys):
    down, _ = query("canonical_unloaded", (0, -1, 0))
    up, _ = query("canonical_preloaded", (0, 1, 0))
    grasp, act = fixture("canonical_preloaded")
    # four directions: the axis queries, one of which is +Y
    region = sweep_plane(grasp, act, plane_basis("xy"), 4, config(KAPPA))
    norm = normalize_region(region, (0, 1, 0))
    at_y = [s for s in norm.samples if s.angle_deg == 90.0][0]
    ok = down.unbounded and not up.unbounded and at_y.normalized == 1.0 and region.samples[1].magnitude == up.value
    announce(capsys, 3, "canonical grasp: -Y unbounded without preload, +Y finite, normalized +Y = 1.0", ok,
             f"-Y (no preload) {magnitude(down)}, +Y (preload) {magnitude(up)}, normalized +Y {at_y.normalized!r}")


def test_criterion_4_wedging_diagnosis(capsys):
    grasp, act = fixture("canonical_preloaded")
    w = grasp.scale_wrench(OUT_OF_PLANE)
    d = direct("canonical_preloaded", OUT_OF_PLANE)
    v = verdict("canonical_preloaded", OUT_OF_PLANE)
    flag_direct = d.optimal and energy_audit(d, grasp, act, w).flagged
    flag_iter = energy_audit(v, grasp, act, w).flagged
    ok = d.optimal and not v.stable and flag_direct
    announce(capsys, 4, "out-of-plane load: direct equilibrium, iterative unstable, direct flagged", ok,
             f"{OUT_OF_PLANE[2]:g} N along Z: direct {d.status}, iterative {v.status} "
             f"(residual {v.residual:.3g} N), audit direct={flag_direct} iterative={flag_iter}")


def test_criterion_5_baseline_failure(capsys):
    grasp, act = fixture("canonical_preloaded")
    preload = verdict("canonical_preloaded", (0, 0, 0))
    c0 = project_to_nullspace(grasp.G, preload.trace.final.solution.c)
    base = distribute(grasp, None, grasp.scale_wrench(DOWNWARD), c0)
    distal = [i for i, cid in enumerate(grasp.contact_ids) if "distal" in cid]
    v = verdict("canonical_preloaded", DOWNWARD)
    prp_excess = cone_excess(v.trace.final.solution.c, grasp.mu)
    ok = bool(np.all(base.violations[distal] > 0)) and v.stable and bool(np.all(prp_excess == 0))
    announce(capsys, 5, "baseline violates distal cones, iterative stable inside all cones", ok,
             f"{-DOWNWARD[1]:g} N downward: baseline distal excess {np.round(base.violations[distal], 4).tolist()}, "
             f"iterative {v.status}, max excess {prp_excess.max():.3g}")


def test_criterion_6_underactuated(capsys):
    # a 4-direction XY sweep is exactly the four axis queries
    sweeps = {}
    for key in ("underactuated_proximal", "underactuated_distal"):
        sweeps[key] = {d: query(key, d)[0] for d in [(1, 0, 0), (0, 1, 0), (-1, 0, 0), (0, -1, 0)]}
    side_finite = all(not sweeps[k][d].unbounded for k in sweeps for d in [(1, 0, 0), (-1, 0, 0)])
    prox, _ = query("underactuated_proximal", X_TORQUE)
    dist, _ = query("underactuated_distal", X_TORQUE)
    ratio = dist.value / prox.value if not (prox.unbounded or dist.unbounded) and prox.value > 0 else float("nan")
    ok = side_finite and ratio >= 1.5
    sides = ", ".join(f"{k.split('_')[1]} +X {magnitude(v[(1, 0, 0)])} -X {magnitude(v[(-1, 0, 0)])}" for k, v in sweeps.items())
    announce(capsys, 6, "underactuated: no unbounded +-X, distal/proximal X-torque ratio >= 1.5", ok,
             f"{sides}; X torque proximal {magnitude(prox)}, distal {magnitude(dist)}, ratio {ratio:.3f}")


def test_criterion_7_convergence(capsys):
    iterations, slowest, nonconverged = [], 0.0, 0
    for key, d in QUERIES:
        res, seconds = query(key, d)
        slowest = max(slowest, seconds)
        iterations += [e.iterations for e in res.log]
        nonconverged += sum(e.status == NONCONVERGED for e in res.log)
    for key, f in VERDICTS:
        v = verdict(key, f)
        iterations.append(v.iterations)
        nonconverged += v.status == NONCONVERGED
    ok = max(iterations) <= 50 and nonconverged == 0 and slowest < 60.0
    announce(capsys, 7, "convergence within 50 iterations, each 20-step query under 60 s", ok,
             f"{len(iterations)} verdicts, max {max(iterations)} iterations, {nonconverged} nonconverged, "
             f"slowest query {slowest:.1f} s")


def _reduction_pairs():
    """(direct problem, same problem with identity tendons) for every direct fixture."""
    pairs = []
    for key in ("canonical_unloaded", "canonical_preloaded"):
        grasp, act = fixture(key)
        tendon = TendonActuation(np.eye(act.tau_c.size), act.tau_c)
        for force in [(0, 0, 0), (0, 3, 0), DOWNWARD, OUT_OF_PLANE, (0, 20, 0), (5, 0, 0)]:
            w = grasp.scale_wrench(force)
            pairs.append((encode_prp(grasp, act, w), encode_prp(grasp, tendon, w)))
            pairs.append((encode_movement_constrained(grasp, act, w, np.zeros(6), w, 10.0),
                          encode_movement_constrained(grasp, tendon, w, np.zeros(6), w, 10.0)))
    for p in random_fixtures():
        act = p.actuation
        if isinstance(act, DirectActuation) and act.tau_c.size:
            tendon = TendonActuation(np.eye(act.tau_c.size), act.tau_c)
            if p.kind == "prp":
                pairs.append((p, encode_prp(p.grasp, tendon, p.w)))
            else:
                pairs.append((p, encode_movement_constrained(p.grasp, tendon, p.w, p.x_prev, p.r_prev, p.gamma)))
    return pairs


def test_criterion_8_reduction_identity(capsys):
    worst, status_diff = 0.0, 0
    pairs = _reduction_pairs()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BigMSaturationWarning)
        for p, q in pairs:
            a, b = solve_miqp(p), solve_miqp(q)
            if a.status != b.status:
                status_diff += 1
            elif a.optimal:
                worst = max(worst, abs(a.objective - b.objective))
    ok = status_diff == 0 and worst <= 1e-8
    announce(capsys, 8, "identity tendons reproduce direct objectives", ok,
             f"{len(pairs)} problem pairs, max |diff| {worst:.2e} (tol 1e-8), status differences {status_diff}")


def test_criterion_9_big_m_robustness(capsys):
    worst, changed = 0.0, []
    for key, d in [("canonical_unloaded", (0, -1, 0)), ("canonical_preloaded", (0, 1, 0)),
                   ("underactuated_proximal", X_TORQUE), ("underactuated_distal", X_TORQUE)]:
        a, b = query(key, d)[0], query(key, d, 10 * KAPPA)[0]
        if a.unbounded or b.unbounded:
            if a.unbounded != b.unbounded:
                changed.append((key, d))
        else:
            worst = max(worst, abs(a.value - b.value) / max(abs(a.value), 1e-12))
    for key, f in VERDICTS:
        if verdict(key, f).status != verdict(key, f, 10 * KAPPA).status:
            changed.append((key, f))
    ok = not changed and worst <= 1e-4
    announce(capsys, 9, "kappa x10 changes no verdict or magnitude", ok,
             f"max relative magnitude change {worst:.2e} (tol 1e-4), changed verdicts {changed}")
