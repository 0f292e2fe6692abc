"""Iterative passive response: virtual object motion along the residual wrench.

Starting from ``x = 0`` and ``r = w``, each iteration solves the
movement-constrained problem (object allowed to move only along the current
unbalanced wrench) and accepts its residual ``r_next = w + G D beta``.  The
loop stops once the residual stops changing; the grasp is stable when the
final residual has vanished.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .prp import PRPSolution, SolverConfig, encode_movement_constrained, encode_prp, solve_miqp
from .scene import Actuation, AssembledGrasp, TendonActuation, as_wrench

log = logging.getLogger(__name__)

STABLE = "stable"
UNSTABLE = "unstable"
NONCONVERGED = "nonconverged"

#: residual norm [N, L-scaled wrench] below which a grasp counts as stable
STABILITY_THRESHOLD = 1e-3


@dataclass(frozen=True)
class IterationConfig:
    """Parameters of the iterative loop.

    gamma : float
        Upper bound of the step scalar ``s`` in ``x = x_prev + s r_prev``
        [m/N].  With unit spring stiffness a step ``s = 1`` moves the object
        by one unit of displacement per newton of residual, so ``gamma``
        must exceed the inverse of the grasp's smallest effective stiffness
        for a single step to absorb a residual.
    epsilon : float
        Convergence threshold on ``|r - r_next|`` [N].
    max_iterations : int
    stall_window : int
        Iterations over which the residual norm's progress is measured.  The
        loop is declared stalled (unstable) when the norm dropped by less
        than ``epsilon`` over the window, or when the window's mean decrease,
        continued for the remaining iteration budget, cannot bring the norm
        down to the stability threshold.
    """

    gamma: float = 10.0
    epsilon: float = 1e-3
    max_iterations: int = 200
    stall_window: int = 10
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be > 0")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if self.max_iterations < 1 or self.stall_window < 1:
            raise ValueError("max_iterations and stall_window must be >= 1")


@dataclass(frozen=True)
class IterationStep:
    iteration: int
    s: float
    x: np.ndarray
    r: np.ndarray
    objective: float
    binaries: tuple
    solution: PRPSolution = field(repr=False, compare=False)

    @property
    def residual_norm(self) -> float:
        return float(np.linalg.norm(self.r))


@dataclass
class IterationTrace:
    w: np.ndarray
    steps: list = field(default_factory=list)

    def __len__(self):
        return len(self.steps)

    @property
    def residual_norms(self) -> np.ndarray:
        return np.array([st.residual_norm for st in self.steps])

    @property
    def final(self) -> Optional[IterationStep]:
        return self.steps[-1] if self.steps else None

    def to_csv(self) -> str:
        """Trace table; binaries are written as a 0/1 string in regime order."""
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["iter", "s_m_per_N", "residual_norm_N", "objective_N2", "binaries"])
        for st in self.steps:
            wr.writerow([st.iteration, f"{st.s:.12g}", f"{st.residual_norm:.12g}", f"{st.objective:.12g}",
                         "".join(str(int(b)) for b in st.binaries)])
        return buf.getvalue()


@dataclass
class StabilityVerdict:
    status: str
    residual: float
    iterations: int
    trace: IterationTrace
    reason: str = ""

    @property
    def stable(self) -> bool:
        return self.status == STABLE

    def to_dict(self) -> dict:
        fin = self.trace.final
        return {
            "status": self.status,
            "reason": self.reason,
            "residual_N": self.residual,
            "iterations": self.iterations,
            "displacement": None if fin is None else [float(v) for v in fin.x],
            "residual_wrench": None if fin is None else [float(v) for v in fin.r],
            "contact_forces": None if fin is None else (fin.solution.c.round(12) + 0.0).tolist(),
        }


def _stalled(norms, config: IterationConfig, it: int) -> bool:
    drop = norms[-1 - config.stall_window] - norms[-1]
    if drop < config.epsilon:
        return True
    reachable = drop / config.stall_window * (config.max_iterations - it)
    return norms[-1] - STABILITY_THRESHOLD > reachable


def solve_iterative_prp(grasp: AssembledGrasp, commands: Actuation, w, config: IterationConfig = IterationConfig()) -> StabilityVerdict:
    """Classify the grasp under wrench ``w`` (L-scaled) as stable/unstable."""
    w = as_wrench(w)
    x = np.zeros(6)
    r = w.copy()
    trace = IterationTrace(w=w)
    hint = None
    norms = [float(np.linalg.norm(r))]
    for it in range(1, config.max_iterations + 1):
        problem = encode_movement_constrained(grasp, commands, w, x, r, config.gamma)
        sol = solve_miqp(problem, config.solver, hint=hint)
        if not sol.optimal:
            return StabilityVerdict(UNSTABLE, float(np.linalg.norm(r)), it, trace, reason="no passive regime")
        r_next = sol.residual
        trace.steps.append(IterationStep(it, sol.s, sol.x, r_next, float(sol.objective), tuple(int(b) for b in sol.binaries), sol))
        change = float(np.linalg.norm(r - r_next))
        x, r, hint = sol.x, r_next, sol.binaries
        norms.append(float(np.linalg.norm(r)))
        if change < config.epsilon:
            if norms[-1] <= STABILITY_THRESHOLD:
                return StabilityVerdict(STABLE, norms[-1], it, trace, reason="residual vanished")
            return StabilityVerdict(UNSTABLE, norms[-1], it, trace, reason="residual converged to a nonzero wrench")
        if it >= config.stall_window and _stalled(norms, config, it):
            return StabilityVerdict(UNSTABLE, norms[-1], it, trace, reason="residual stalled")
    return StabilityVerdict(NONCONVERGED, norms[-1], config.max_iterations, trace, reason="iteration limit reached")


def solve_direct_prp(grasp: AssembledGrasp, commands: Actuation, w, config: SolverConfig = SolverConfig()) -> PRPSolution:
    """One-shot problem with unconstrained object motion and exact equilibrium."""
    return solve_miqp(encode_prp(grasp, commands, w), config)


@dataclass(frozen=True)
class EnergyReport:
    external_work: float
    actuator_work: float
    spring_energy: float
    friction_dissipation: float
    flagged: bool

    @property
    def input_work(self) -> float:
        return self.external_work + self.actuator_work

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("external_work", "actuator_work", "spring_energy", "friction_dissipation", "flagged")} | {
            "input_work": self.input_work}


def _slip_dissipation(grasp: AssembledGrasp, c: np.ndarray, dx: np.ndarray, dq: np.ndarray) -> float:
    """Lower bound of frictional work over a displacement increment."""
    rel = (grasp.G.T @ dx - grasp.J @ dq).reshape(grasp.n, 3)
    return float(np.maximum(0.0, -np.einsum("ij,ij->i", c[:, :2], rel[:, :2])).sum())


def energy_audit(result: Union[StabilityVerdict, IterationTrace, PRPSolution], grasp: AssembledGrasp, commands: Actuation, w,
                 tol: float = 1e-6) -> EnergyReport:
    """Compare the work put in with the energy stored and dissipated.

    Input work is ``w . x`` plus the commanded torques (or actuator forces)
    times the joint (or transmission) motion.  Stored energy is that of the
    unit normal springs.  Friction dissipation is bounded below by the work
    of each tangential force against the slip of its contact, summed over
    the iteration increments.  A state is flagged when stored plus
    dissipated energy exceeds the input by more than
    ``tol * max(1, input)``; the flag is diagnostic only.
    """
    w = as_wrench(w)
    if isinstance(result, StabilityVerdict):
        result = result.trace
    if isinstance(result, IterationTrace):
        sols = [st.solution for st in result.steps]
    else:
        sols = [result] if result.optimal else []
    if not sols:
        return EnergyReport(0.0, 0.0, 0.0, 0.0, False)
    final = sols[-1]
    x, q = final.x, final.q
    if isinstance(commands, TendonActuation):
        act_work = float(commands.f_c @ (commands.R.T @ q))
    else:
        act_work = float(commands.tau_c @ q)
    ext = float(w @ x)
    stored = 0.5 * float(np.sum(final.c[:, 2] ** 2))
    diss = 0.0
    x_prev, q_prev = np.zeros(6), np.zeros_like(q)
    for sol in sols:
        diss += _slip_dissipation(grasp, sol.c, sol.x - x_prev, sol.q - q_prev)
        x_prev, q_prev = sol.x, sol.q
    inp = ext + act_work
    flagged = stored + diss > inp + tol * max(1.0, abs(inp))
    if flagged:
        log.info("energy audit: stored %.6g + dissipated %.6g exceeds input %.6g", stored, diss, inp)
    return EnergyReport(ext, act_work, stored, diss, bool(flagged))
