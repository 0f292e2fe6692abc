"""Maximum resistible wrench along a direction, and planar resistance regions.

The largest magnitude a preloaded grasp withstands along a fixed direction
is found by bisection on the stability verdict of the iterative solver;
sweeping a fan of directions in a plane gives a resistance region.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .iterate import NONCONVERGED, IterationConfig, StabilityVerdict, solve_iterative_prp
from .scene import Actuation, AssembledGrasp

log = logging.getLogger(__name__)

DEFAULT_STEPS = 20
DEFAULT_UPPER = 1e3
DEFAULT_DIRECTIONS = 36


class Unbounded:
    """Sentinel: the grasp was stable at the search cap."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNBOUNDED"

    def __reduce__(self):
        return (Unbounded, ())


UNBOUNDED = Unbounded()


class PreloadError(RuntimeError):
    """The preloaded grasp is not stable without any external load."""


def as_direction(direction) -> np.ndarray:
    """6-vector in L-scaled wrench space; a 3-vector is a pure force direction."""
    d = np.asarray(direction, dtype=float).reshape(-1)
    if d.size == 3:
        d = np.concatenate([d, np.zeros(3)])
    if d.size != 6 or not np.all(np.isfinite(d)):
        raise ValueError("direction must be a finite 3- or 6-vector")
    return d


@dataclass(frozen=True)
class DirectionQuery:
    direction: np.ndarray
    steps: int = DEFAULT_STEPS
    upper: float = DEFAULT_UPPER

    def __post_init__(self):
        d = as_direction(self.direction)
        if abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise ValueError("direction must be a unit vector")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not self.upper > 0:
            raise ValueError("upper must be > 0")
        object.__setattr__(self, "direction", d)

    @classmethod
    def along(cls, direction, **kw) -> "DirectionQuery":
        """Query along ``direction`` after normalizing it."""
        d = as_direction(direction)
        n = np.linalg.norm(d)
        if n == 0:
            raise ValueError("direction must be nonzero")
        return cls(d / n, **kw)


@dataclass(frozen=True)
class SearchEntry:
    magnitude: float
    status: str
    iterations: int
    residual: float


@dataclass
class SearchResult:
    value: Union[float, Unbounded]
    log: list = field(default_factory=list)

    @property
    def unbounded(self) -> bool:
        return self.value is UNBOUNDED

    @property
    def nonconverged(self) -> bool:
        return any(e.status == NONCONVERGED for e in self.log)

    def bracket(self) -> tuple[float, Optional[float]]:
        """Largest stable and smallest unstable magnitude evaluated."""
        stable = [e.magnitude for e in self.log if e.status == "stable"]
        other = [e.magnitude for e in self.log if e.status != "stable"]
        return max(stable, default=0.0), min(other, default=None)


def search_resistance(grasp: AssembledGrasp, commands: Actuation, query: DirectionQuery,
                      config: IterationConfig = IterationConfig()) -> SearchResult:
    """Bisection on the stability verdict, with the full search log."""
    entries: list[SearchEntry] = []

    def stable(m: float) -> bool:
        v: StabilityVerdict = solve_iterative_prp(grasp, commands, m * query.direction, config)
        entries.append(SearchEntry(float(m), v.status, v.iterations, v.residual))
        if v.status == NONCONVERGED:
            log.warning("nonconverged verdict at magnitude %.6g treated as unstable", m)
        return v.stable

    if not stable(0.0):
        raise PreloadError("preload not in equilibrium")
    if stable(query.upper):
        return SearchResult(UNBOUNDED, entries)
    lo, hi = 0.0, float(query.upper)
    for _ in range(query.steps):
        mid = 0.5 * (lo + hi)
        if stable(mid):
            lo = mid
        else:
            hi = mid
    return SearchResult(lo, entries)


def max_resistible(grasp: AssembledGrasp, commands: Actuation, query: DirectionQuery,
                   config: IterationConfig = IterationConfig()) -> Union[float, Unbounded]:
    """Largest stable magnitude along ``query.direction``, or :data:`UNBOUNDED`."""
    return search_resistance(grasp, commands, query, config).value


@dataclass(frozen=True)
class RegionSample:
    angle_deg: float
    direction: np.ndarray
    magnitude: Union[float, Unbounded, None]
    error: Optional[str] = None
    normalized: Union[float, Unbounded, None] = None

    @property
    def unbounded(self) -> bool:
        return self.magnitude is UNBOUNDED

    @property
    def finite(self) -> bool:
        return isinstance(self.magnitude, float)


@dataclass
class ResistanceRegion:
    basis: np.ndarray
    samples: list
    reference: Optional[tuple] = None  # (direction, value)

    @property
    def angles(self) -> np.ndarray:
        return np.array([s.angle_deg for s in self.samples])

    def magnitudes(self, unbounded=np.inf, gap=np.nan) -> np.ndarray:
        out = []
        for s in self.samples:
            out.append(unbounded if s.unbounded else gap if s.magnitude is None else s.magnitude)
        return np.array(out, dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["angle_deg", "magnitude_N", "unbounded_flag", "normalized_value", "status"])
        for s in self.samples:
            mag = "" if not s.finite else f"{s.magnitude:.12g}"
            if s.normalized is None or s.normalized is UNBOUNDED:
                norm = ""
            else:
                norm = f"{s.normalized:.12g}"
            status = "error: " + s.error if s.error else ("unbounded" if s.unbounded else "ok")
            wr.writerow([f"{s.angle_deg:.12g}", mag, int(s.unbounded), norm, status])
        return buf.getvalue()


def plane_basis(plane: str) -> np.ndarray:
    """Orthonormal basis of a coordinate force plane such as ``"xy"``."""
    axes = {"x": 0, "y": 1, "z": 2}
    if len(plane) != 2 or any(c not in axes for c in plane.lower()) or plane[0] == plane[1]:
        raise ValueError(f"plane must name two distinct axes of x, y, z, got {plane!r}")
    B = np.zeros((2, 6))
    for k, c in enumerate(plane.lower()):
        B[k, axes[c]] = 1.0
    return B


def _direction_task(args):
    grasp, commands, direction, steps, upper, config = args
    try:
        q = DirectionQuery(direction, steps=steps, upper=upper)
        return max_resistible(grasp, commands, q, config), None
    except Exception as exc:  # recorded as a gap in the region
        return None, f"{type(exc).__name__}: {exc}"


def sweep_plane(grasp: AssembledGrasp, commands: Actuation, basis, n_dirs: int = DEFAULT_DIRECTIONS,
                config: IterationConfig = IterationConfig(), *, steps: int = DEFAULT_STEPS,
                upper: float = DEFAULT_UPPER, jobs: int = 1) -> ResistanceRegion:
    """Maximum resistible magnitude along ``n_dirs`` equally spaced directions.

    Direction ``k`` is ``cos(a) b0 + sin(a) b1`` with ``a = 360 k / n_dirs``
    degrees.  Failing directions become gaps carrying the error message.
    """
    B = np.array([as_direction(b) for b in np.asarray(basis, dtype=float)])
    if B.shape != (2, 6) or not np.allclose(B @ B.T, np.eye(2), atol=1e-9):
        raise ValueError("basis must be two orthonormal directions")
    if n_dirs < 1:
        raise ValueError("n_dirs must be >= 1")
    angles = [360.0 * k / n_dirs for k in range(n_dirs)]
    dirs = []
    for a in angles:
        t = math.radians(a)
        d = math.cos(t) * B[0] + math.sin(t) * B[1]
        dirs.append(d / np.linalg.norm(d))
    tasks = [(grasp, commands, d, steps, upper, config) for d in dirs]
    if jobs > 1 and n_dirs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_direction_task, tasks))
    else:
        results = [_direction_task(t) for t in tasks]
    samples = [RegionSample(a, d, m, err) for a, d, (m, err) in zip(angles, dirs, results)]
    return ResistanceRegion(B, samples)


def normalize_region(region: ResistanceRegion, reference) -> ResistanceRegion:
    """Divide finite magnitudes by the value along ``reference``.

    Unbounded samples stay unbounded; the reference sample becomes 1.
    """
    ref = as_direction(reference)
    ref = ref / np.linalg.norm(ref)
    match = [s for s in region.samples if float(s.direction @ ref) >= 1.0 - 1e-9]
    if not match:
        raise ValueError("reference direction is not among the region samples")
    value = match[0].magnitude
    if value is UNBOUNDED:
        raise ValueError("reference direction is unbounded")
    if value is None:
        raise ValueError(f"reference direction failed: {match[0].error}")
    if not value > 0:
        raise ValueError("reference magnitude is zero")
    samples = []
    for s in region.samples:
        if s.finite:
            norm = s.magnitude / value
        else:
            norm = s.magnitude
        samples.append(replace(s, normalized=norm))
    return ResistanceRegion(region.basis, samples, reference=(ref, value))
