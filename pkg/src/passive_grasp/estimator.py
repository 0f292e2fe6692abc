"""scikit-learn style facade over the stability solver.

Each row of ``X`` is one external wrench (fx, fy, fz [N], tx, ty, tz [N m]);
the estimator "fits" by assembling the scene, and ``predict`` returns 1 for
wrenches the preloaded grasp passively resists and 0 otherwise.  Nothing is
learned from data, so ``y`` is accepted only for API compatibility.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .iterate import IterationConfig, solve_iterative_prp
from .prp import SolverConfig
from .resistance import DEFAULT_STEPS, DEFAULT_UPPER, UNBOUNDED, DirectionQuery, max_resistible
from .scene import GraspScene, assemble, validate_commands


class PassiveGraspClassifier(ClassifierMixin, BaseEstimator):
    """Stable (1) / not stable (0) verdicts for a preloaded grasp.

    Parameters
    ----------
    scene : GraspScene
        Geometry and motor commands of the grasp.
    gamma, epsilon : float
        Step bound [m/N] and convergence threshold [N] of the iterative loop.
    kappa : float
        Big-M scale factor of the mixed-integer solver.
    """

    def __init__(self, scene: GraspScene = None, gamma: float = 10.0, epsilon: float = 1e-3, kappa: float = 1e3):
        self.scene = scene
        self.gamma = gamma
        self.epsilon = epsilon
        self.kappa = kappa

    def fit(self, X=None, y=None):
        if not isinstance(self.scene, GraspScene):
            raise TypeError("scene must be a GraspScene")
        self.grasp_ = assemble(self.scene)
        validate_commands(self.grasp_, self.scene.actuation)
        self.config_ = IterationConfig(gamma=self.gamma, epsilon=self.epsilon, solver=SolverConfig(kappa=self.kappa))
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = 6
        return self

    def _scaled(self, X) -> np.ndarray:
        check_is_fitted(self, "grasp_")
        X = check_array(X, dtype=float, ensure_all_finite=True)
        if X.shape[1] != 6:
            raise ValueError(f"X must have 6 columns (force and torque), got {X.shape[1]}")
        return np.array([self.grasp_.scale_wrench(row[:3], row[3:]) for row in X])

    def verdicts(self, X) -> list:
        """Full :class:`StabilityVerdict` per wrench."""
        return [solve_iterative_prp(self.grasp_, self.scene.actuation, w, self.config_) for w in self._scaled(X)]

    def predict(self, X) -> np.ndarray:
        return np.array([int(v.stable) for v in self.verdicts(X)])

    def residual_norms(self, X) -> np.ndarray:
        """Norm of the unbalanced (scaled) wrench left after the iteration [N]."""
        return np.array([v.residual for v in self.verdicts(X)])

    def max_resistible(self, directions, steps: int = DEFAULT_STEPS, upper: float = DEFAULT_UPPER) -> np.ndarray:
        """Largest resistible magnitude along each scaled direction row; ``inf`` when unbounded."""
        check_is_fitted(self, "grasp_")
        D = check_array(directions, dtype=float)
        out = []
        for d in D:
            v = max_resistible(self.grasp_, self.scene.actuation, DirectionQuery.along(d, steps=steps, upper=upper), self.config_)
            out.append(np.inf if v is UNBOUNDED else v)
        return np.array(out)
