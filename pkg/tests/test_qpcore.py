import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from passive_grasp.qpcore import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    QPDimensionError,
    QuadraticProgram,
    farkas_check,
    kkt_residual,
    solve_qp,
)

from helpers import kkt_enumerate

seeds = st.integers(0, 2**32 - 1)


def random_qp(rng, m=None, n_eq=None, n_in=None, singular=None):
    """Random convex QP that is bounded below and (by construction) feasible."""
    m = int(rng.integers(2, 31)) if m is None else m
    n_eq = int(rng.integers(0, min(3, m - 1) + 1)) if n_eq is None else n_eq
    n_in = int(rng.integers(0, 7)) if n_in is None else n_in
    singular = bool(rng.random() < 0.4) if singular is None else singular
    rank = int(rng.integers(1, m)) if singular else m
    M = rng.normal(size=(m, rank))
    Q = M @ M.T + (0 if singular else 1e-2 * np.eye(m))
    g = Q @ rng.normal(size=m) if singular else rng.normal(size=m)
    u_feas = rng.normal(size=m)
    A = rng.normal(size=(n_eq, m))
    b = A @ u_feas
    C = rng.normal(size=(n_in, m))
    d = C @ u_feas + rng.exponential(size=n_in)
    return QuadraticProgram(Q, g, A, b, C, d)


class TestExamples:
    def test_one_dimensional_bound(self):
        res = solve_qp(QuadraticProgram([[2.0]], [0.0], C=[[-1.0]], d=[-1.0]))
        assert res.status == OPTIMAL
        assert res.u[0] == pytest.approx(1.0, abs=1e-9)
        assert res.lambda_ineq[0] == pytest.approx(2.0, abs=1e-7)

    def test_symmetric_equality(self):
        res = solve_qp(QuadraticProgram(2 * np.eye(2), [0, 0], A=[[1.0, 1.0]], b=[2.0]))
        assert np.allclose(res.u, [1.0, 1.0], atol=1e-9)

    def test_empty_feasible_set(self):
        res = solve_qp(QuadraticProgram([[0.0]], [0.0], C=[[1.0], [-1.0]], d=[-1.0, 0.0]))
        assert res.status == INFEASIBLE
        y_eq, y_in = res.certificate
        assert farkas_check(QuadraticProgram([[0.0]], [0.0], C=[[1.0], [-1.0]], d=[-1.0, 0.0]), y_eq, y_in)["valid"]

    def test_inconsistent_equalities(self):
        qp = QuadraticProgram(np.eye(2), [0, 0], A=[[1.0, 1.0], [2.0, 2.0]], b=[1.0, 3.0])
        res = solve_qp(qp)
        assert res.status == INFEASIBLE
        assert res.detail["farkas"]["valid"]

    def test_unbounded_ray(self):
        qp = QuadraticProgram(np.diag([1.0, 0.0]), [0.0, -1.0], C=[[-1.0, 0.0]], d=[0.0])
        res = solve_qp(qp)
        assert res.status == UNBOUNDED
        assert res.ray[1] > 0

    def test_degenerate_tie_picks_minimum_norm(self):
        # minimize (u1 + u2 - 2)^2: every point on the line is optimal
        qp = QuadraticProgram(2 * np.ones((2, 2)), [-4.0, -4.0])
        res = solve_qp(qp)
        assert np.allclose(res.u, [1.0, 1.0], atol=1e-6)
        assert res.detail["tie_regularization"] > 0

    def test_rejects_nonconvex(self):
        with pytest.raises(QPDimensionError):
            solve_qp(QuadraticProgram(np.diag([1.0, -1.0]), [0.0, 0.0]))

    def test_rejects_asymmetric_and_bad_shapes(self):
        with pytest.raises(QPDimensionError):
            QuadraticProgram([[1.0, 1.0], [0.0, 1.0]], [0.0, 0.0])
        with pytest.raises(QPDimensionError):
            QuadraticProgram(np.eye(2), [0.0])
        with pytest.raises(QPDimensionError):
            QuadraticProgram(np.eye(2), [0.0, 0.0], C=np.ones((1, 3)), d=[0.0])

    def test_redundant_equalities(self):
        qp = QuadraticProgram(np.eye(2), [0, 0], A=[[1.0, 0.0], [2.0, 0.0]], b=[1.0, 2.0])
        res = solve_qp(qp)
        assert res.status == OPTIMAL
        assert np.allclose(res.u, [1.0, 0.0], atol=1e-9)


class TestOracle:
    @settings(max_examples=60)
    @given(seeds)
    def test_matches_active_set_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        qp = random_qp(rng)
        res = solve_qp(qp)
        ref, _ = kkt_enumerate(qp.Q, qp.g, qp.A, qp.b, qp.C, qp.d)
        assert res.status == OPTIMAL and ref is not None
        assert res.objective == pytest.approx(ref, rel=1e-7, abs=1e-7)
        assert res.kkt_residual <= 1e-8

    @settings(max_examples=40)
    @given(seeds)
    def test_infeasible_certificate(self, seed):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(2, 10))
        a = rng.normal(size=m)
        C = np.vstack([a, -a, rng.normal(size=(3, m))])
        d = np.concatenate([[-1.0, -1.0], np.full(3, 5.0)])  # a.u <= -1 and a.u >= 1
        qp = QuadraticProgram(np.eye(m), rng.normal(size=m), C=C, d=d)
        res = solve_qp(qp)
        assert res.status == INFEASIBLE
        assert farkas_check(qp, *res.certificate)["valid"]


class TestProperties:
    @settings(max_examples=40)
    @given(seeds, st.floats(0.01, 100.0))
    def test_scaling_invariance(self, seed, scale):
        rng = np.random.default_rng(seed)
        qp = random_qp(rng, singular=False)
        a = solve_qp(qp)
        b = solve_qp(QuadraticProgram(scale * qp.Q, scale * qp.g, qp.A, qp.b, qp.C, qp.d))
        assert np.allclose(a.u, b.u, atol=1e-8 * (1 + np.abs(a.u).max()))

    @settings(max_examples=40)
    @given(seeds)
    def test_removing_inequality_never_hurts(self, seed):
        rng = np.random.default_rng(seed)
        qp = random_qp(rng, n_in=int(rng.integers(1, 7)))
        full = solve_qp(qp)
        k = int(rng.integers(0, qp.C.shape[0]))
        keep = np.arange(qp.C.shape[0]) != k
        fewer = solve_qp(QuadraticProgram(qp.Q, qp.g, qp.A, qp.b, qp.C[keep], qp.d[keep]))
        assert fewer.objective <= full.objective + 1e-8 * (1 + abs(full.objective))

    @settings(max_examples=40)
    @given(seeds)
    def test_kkt_certificate(self, seed):
        rng = np.random.default_rng(seed)
        qp = random_qp(rng)
        res = solve_qp(qp)
        assert res.kkt_residual <= 1e-8
        assert np.all(res.lambda_ineq >= -1e-10)
        assert kkt_residual(qp, res.u, res.lambda_eq, res.lambda_ineq, res.regularization) == pytest.approx(res.kkt_residual)

    @settings(max_examples=30)
    @given(seeds)
    def test_warm_start_same_answer(self, seed):
        rng = np.random.default_rng(seed)
        qp = random_qp(rng, singular=False)
        cold = solve_qp(qp)
        warm = solve_qp(qp, warm_start=cold.u + 1e-3 * rng.normal(size=qp.m))
        assert warm.objective == pytest.approx(cold.objective, rel=1e-8, abs=1e-8)

    def test_deterministic(self):
        qp = random_qp(np.random.default_rng(7))
        a, b = solve_qp(qp), solve_qp(qp)
        assert np.array_equal(a.u, b.u)
