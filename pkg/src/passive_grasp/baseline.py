"""Linear-compliance force distribution, the classical reference model.

Contacts are linear springs with unit normal stiffness and tangential
stiffness equal to the friction coefficient; joints are rigid.  The contact
forces balancing an external wrench are ``c = c_p + c_0`` with the
particular part from the stiffness-weighted right inverse of the grasp map
and a caller-supplied internal (nullspace) part.  Nothing in this model
keeps forces inside their friction cones, which is what the comparison
against the passive response solver exposes.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .scene import AssembledGrasp, as_wrench

EIGEN_THRESHOLD = 1e-10
NULLSPACE_TOL = 1e-9


class RankDeficientWarning(UserWarning):
    """``G K G'`` is singular; its pseudo-inverse was used."""


class NullspaceError(ValueError):
    """The supplied internal forces do not lie in the nullspace of G."""


@dataclass(frozen=True)
class StiffnessModel:
    """Diagonal contact stiffness, ordered like the grasp map columns
    (two tangential components then the normal, per contact)."""

    K: np.ndarray

    def __post_init__(self):
        K = np.asarray(self.K, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] % 3:
            raise ValueError("K must be a square 3n x 3n matrix")
        if np.any(K - np.diag(np.diag(K))):
            raise ValueError("K must be diagonal")
        if np.any(np.diag(K) <= 0) or not np.all(np.isfinite(K)):
            raise ValueError("K must have finite positive diagonal entries")
        object.__setattr__(self, "K", K)

    @classmethod
    def from_grasp(cls, grasp: AssembledGrasp) -> "StiffnessModel":
        """Unit normal stiffness, tangential stiffness ``mu`` per contact."""
        diag = np.column_stack([grasp.mu, grasp.mu, np.ones(grasp.n)]).ravel()
        return cls(np.diag(diag))


def weighted_pseudoinverse(G, K, threshold: float = EIGEN_THRESHOLD) -> np.ndarray:
    """``K G' (G K G')^-1``, inverting only eigenvalues above
    ``threshold * max(eigenvalue)`` (with a warning if any are dropped)."""
    G = np.asarray(G, dtype=float)
    K = K.K if isinstance(K, StiffnessModel) else np.asarray(K, dtype=float)
    M = G @ K @ G.T
    M = 0.5 * (M + M.T)
    vals, vecs = np.linalg.eigh(M)
    cut = threshold * max(vals.max(initial=0.0), 0.0)
    keep = vals > cut
    if not np.all(keep):
        warnings.warn(f"G K G' has {int((~keep).sum())} eigenvalue(s) below {cut:.3g}; using its pseudo-inverse",
                      RankDeficientWarning, stacklevel=2)
    Minv = (vecs[:, keep] / vals[keep]) @ vecs[:, keep].T
    return K @ G.T @ Minv


def nullspace_basis(G, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal columns spanning the nullspace of ``G``."""
    G = np.asarray(G, dtype=float)
    _, s, Vt = np.linalg.svd(G)
    rank = int(np.sum(s > tol * max(1.0, s.max(initial=0.0))))
    return Vt[rank:].T.copy()


def project_to_nullspace(G, c) -> np.ndarray:
    """Orthogonal projection of stacked contact forces onto the nullspace of ``G``."""
    N = nullspace_basis(G)
    return N @ (N.T @ np.asarray(c, dtype=float).ravel())


def cone_excess(c, mu, zero_tol: float = 1e-9) -> np.ndarray:
    """Per contact ``max(0, |c_t| / (mu c_n) - 1)``.

    A force with ``c_n <= 0`` counts as infinitely far outside its cone,
    except a vanishing force (norm at most ``zero_tol`` newton), which is a
    separated contact and inside every cone.
    """
    c = np.asarray(c, dtype=float).reshape(-1, 3)
    mu = np.broadcast_to(np.asarray(mu, dtype=float), (c.shape[0],))
    out = np.zeros(c.shape[0])
    for i, (ci, m) in enumerate(zip(c, mu)):
        if np.linalg.norm(ci) <= zero_tol:
            continue
        tang = float(np.hypot(ci[0], ci[1]))
        if ci[2] <= 0 or (m == 0 and tang > 0):
            out[i] = np.inf
        elif m > 0:
            out[i] = max(0.0, tang / (m * ci[2]) - 1.0)
    return out


@dataclass(frozen=True)
class ForceDistribution:
    c_p: np.ndarray
    c_0: np.ndarray
    violations: np.ndarray

    @property
    def c(self) -> np.ndarray:
        return self.c_p + self.c_0

    def forces(self) -> np.ndarray:
        """Contact forces as an (n, 3) array in contact-frame coordinates."""
        return self.c.reshape(-1, 3)


def distribute(grasp: AssembledGrasp, K: Optional[StiffnessModel], w, c_0=None) -> ForceDistribution:
    """Contact forces balancing ``w`` (``G c = -w``) under linear compliance."""
    K = StiffnessModel.from_grasp(grasp) if K is None else K
    w = as_wrench(w)
    c0 = np.zeros(3 * grasp.n) if c_0 is None else np.asarray(c_0, dtype=float).ravel()
    if c0.size != 3 * grasp.n:
        raise ValueError(f"c_0 must have {3 * grasp.n} entries")
    leak = np.abs(grasp.G @ c0).max(initial=0.0)
    if leak > NULLSPACE_TOL * max(1.0, np.abs(c0).max(initial=0.0)):
        raise NullspaceError(f"c_0 is not an internal force: |G c_0| = {leak:.3g}")
    c_p = -weighted_pseudoinverse(grasp.G, K) @ w
    return ForceDistribution(c_p, c0, cone_excess(c_p + c0, grasp.mu))


def comparison_table(grasp: AssembledGrasp, baseline: ForceDistribution, prp_forces) -> str:
    """CSV comparing baseline and passive-response contact forces per contact."""
    prp = np.asarray(prp_forces, dtype=float).reshape(grasp.n, 3)
    prp_ex = cone_excess(prp, grasp.mu)
    base = baseline.forces()
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["contact", "baseline_t1_N", "baseline_t2_N", "baseline_n_N", "baseline_cone_excess_1",
                 "prp_t1_N", "prp_t2_N", "prp_n_N", "prp_cone_excess_1"])
    fmt = lambda v: "inf" if np.isinf(v) else f"{v:.12g}"
    for i, cid in enumerate(grasp.contact_ids):
        wr.writerow([cid, *(fmt(v) for v in base[i]), fmt(baseline.violations[i]), *(fmt(v) for v in prp[i]), fmt(prp_ex[i])])
    return buf.getvalue()
