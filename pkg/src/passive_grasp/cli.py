"""Command-line front end: ``passive-grasp {solve,max-wrench,sweep,baseline-compare}``.

Every command reads a JSON scene file, runs one analysis and writes its
result (JSON, CSV or a one-line text form) to standard output or
``--output``.  Failures are reported as one JSON object per line on
standard error and mapped to exit codes:

    0  completed
    2  invalid input (bad scene, flags or numbers)
    3  preload not in equilibrium (unstable without external load)
    4  the iterative solver did not converge

Wrenches given with ``--wrench`` are physical (N and N m); directions given
with ``--direction`` live in the scaled wrench space where torques are
divided by the scene's characteristic length.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .baseline import comparison_table, distribute, project_to_nullspace
from .iterate import NONCONVERGED, IterationConfig, energy_audit, solve_direct_prp, solve_iterative_prp
from .prp import SolverConfig
from .resistance import (
    DEFAULT_DIRECTIONS,
    DEFAULT_STEPS,
    DEFAULT_UPPER,
    DirectionQuery,
    PreloadError,
    normalize_region,
    plane_basis,
    search_resistance,
    sweep_plane,
)
from .scene import GraspScene, SceneError, assemble, load_scene

log = logging.getLogger("passive_grasp")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_PRELOAD = 3
EXIT_NONCONVERGED = 4

COMMANDS = ("solve", "max-wrench", "sweep", "baseline-compare")
_FORMATS = {
    "solve": ("json", "csv"),
    "max-wrench": ("text", "json", "csv"),
    "sweep": ("csv", "json"),
    "baseline-compare": ("csv", "json"),
}
_DEFAULTS = IterationConfig()


class UsageError(ValueError):
    """Invalid command-line input."""


@dataclass(frozen=True)
class RunManifest:
    """Everything one CLI invocation needs; built from argv or directly."""

    scene: Path
    command: str
    wrench: Optional[tuple] = None  # fx, fy, fz [N], tx, ty, tz [N m]
    direction: Optional[tuple] = None  # 3 or 6 components, scaled wrench space
    plane: str = "xy"
    gamma: float = _DEFAULTS.gamma
    epsilon: float = _DEFAULTS.epsilon
    steps: int = DEFAULT_STEPS
    upper: float = DEFAULT_UPPER
    edges: Optional[int] = None
    kappa: float = SolverConfig().kappa
    n_dirs: int = DEFAULT_DIRECTIONS
    normalize_ref: Optional[tuple] = None
    jobs: int = 1
    direct: bool = False
    output: Optional[Path] = None
    fmt: Optional[str] = None

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if not Path(self.scene).is_file():
            raise UsageError(f"scene file not found: {self.scene}")
        if self.fmt is not None and self.fmt not in _FORMATS[self.command]:
            raise UsageError(f"{self.command} supports formats {', '.join(_FORMATS[self.command])}, not {self.fmt!r}")
        if self.command == "max-wrench" and self.direction is None:
            raise UsageError("max-wrench needs --direction")
        if self.wrench is not None and (len(self.wrench) != 6 or not all(map(math.isfinite, self.wrench))):
            raise UsageError("--wrench needs 6 finite numbers")
        if self.direction is not None and len(self.direction) not in (3, 6):
            raise UsageError("--direction needs 3 or 6 numbers")
        if self.normalize_ref is not None and len(self.normalize_ref) != 3:
            raise UsageError("--normalize-ref needs 3 numbers")
        if self.edges is not None and self.edges < 3:
            raise UsageError("--edges must be >= 3")
        if self.jobs < 1 or self.n_dirs < 1 or self.steps < 1:
            raise UsageError("--jobs, --dirs and --steps must be >= 1")
        for name in ("gamma", "epsilon", "upper", "kappa"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise UsageError(f"--{name} must be a positive number")

    @property
    def format(self) -> str:
        return self.fmt or _FORMATS[self.command][0]

    def iteration_config(self) -> IterationConfig:
        return IterationConfig(gamma=self.gamma, epsilon=self.epsilon, solver=SolverConfig(kappa=self.kappa))

    def load(self) -> GraspScene:
        scene = load_scene(self.scene)
        if self.edges is not None:
            scene = replace(scene, contacts=tuple(replace(c, edge_count=self.edges) for c in scene.contacts))
        return scene


def _diagnose(level: str, code: int, message: str, **extra) -> None:
    print(json.dumps({"level": level, "exit_code": code, "message": message, **extra}, sort_keys=True), file=sys.stderr)


def _number(v):
    """JSON-safe float (non-finite values become strings)."""
    v = float(v)
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _physical_wrench(grasp, wrench) -> np.ndarray:
    if wrench is None:
        return np.zeros(6)
    return grasp.scale_wrench(wrench[:3], wrench[3:])


def _check_preload(grasp, commands, config) -> None:
    verdict = solve_iterative_prp(grasp, commands, np.zeros(6), config)
    if not verdict.stable:
        raise PreloadError(f"preload not in equilibrium ({verdict.reason}, residual {verdict.residual:.3g} N)")


# ---------------------------------------------------------------------------
# commands


def _cmd_solve(m: RunManifest, scene: GraspScene) -> tuple[str, int]:
    grasp = assemble(scene)
    w = _physical_wrench(grasp, m.wrench)
    config = m.iteration_config()
    if m.direct:
        sol = solve_direct_prp(grasp, scene.actuation, w, config.solver)
        audit = energy_audit(sol, grasp, scene.actuation, w)
        if m.format == "csv":
            return _contact_csv(grasp, sol.c if sol.optimal else None), EXIT_OK
        out = {
            "mode": "direct",
            "status": sol.status,
            "objective_N2": _number(sol.objective),
            "contact_forces_N": None if sol.c is None else (sol.c.round(12) + 0.0).tolist(),
            "complementarity_violation": _number(sol.complementarity_violation),
            "binaries": None if sol.binaries is None else [int(b) for b in sol.binaries],
            "energy": {k: (_number(v) if not isinstance(v, bool) else v) for k, v in audit.to_dict().items()},
            "warnings": list(sol.warnings),
        }
        return _dumps(out), EXIT_OK
    verdict = solve_iterative_prp(grasp, scene.actuation, w, config)
    code = EXIT_NONCONVERGED if verdict.status == NONCONVERGED else EXIT_OK
    if m.format == "csv":
        return verdict.trace.to_csv(), code
    audit = energy_audit(verdict, grasp, scene.actuation, w)
    out = verdict.to_dict()
    out["residual_N"] = _number(out["residual_N"])
    out["mode"] = "iterative"
    out["trace"] = list(csv.DictReader(io.StringIO(verdict.trace.to_csv())))
    out["energy"] = {k: (_number(v) if not isinstance(v, bool) else v) for k, v in audit.to_dict().items()}
    return _dumps(out), code


def _contact_csv(grasp, c) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["contact", "t1_N", "t2_N", "n_N"])
    for i, cid in enumerate(grasp.contact_ids):
        wr.writerow([cid, *(["", "", ""] if c is None else [f"{v:.12g}" for v in c[i]])])
    return buf.getvalue()


def _cmd_max_wrench(m: RunManifest, scene: GraspScene) -> tuple[str, int]:
    grasp = assemble(scene)
    query = DirectionQuery.along(m.direction, steps=m.steps, upper=m.upper)
    result = search_resistance(grasp, scene.actuation, query, m.iteration_config())
    code = EXIT_NONCONVERGED if result.nonconverged else EXIT_OK
    if m.format == "text":
        text = f"unbounded (cap {m.upper:g} N)" if result.unbounded else f"{result.value:.6g} N"
        return text + "\n", code
    if m.format == "csv":
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["evaluation", "magnitude_N", "status", "iterations", "residual_N"])
        for k, e in enumerate(result.log):
            wr.writerow([k, f"{e.magnitude:.12g}", e.status, e.iterations, f"{e.residual:.12g}"])
        return buf.getvalue(), code
    out = {
        "direction": [float(v) for v in query.direction],
        "unbounded": result.unbounded,
        "magnitude_N": None if result.unbounded else float(result.value),
        "cap_N": float(m.upper),
        "search_log": [
            {"magnitude_N": e.magnitude, "status": e.status, "iterations": e.iterations, "residual_N": _number(e.residual)}
            for e in result.log
        ],
    }
    return _dumps(out), code


def _cmd_sweep(m: RunManifest, scene: GraspScene) -> tuple[str, int]:
    grasp = assemble(scene)
    config = m.iteration_config()
    _check_preload(grasp, scene.actuation, config)
    basis = plane_basis(m.plane)
    region = sweep_plane(grasp, scene.actuation, basis, m.n_dirs, config, steps=m.steps, upper=m.upper, jobs=m.jobs)
    if m.normalize_ref is not None:
        region = normalize_region(region, m.normalize_ref)
    for s in region.samples:
        if s.error:
            _diagnose("warning", EXIT_OK, "direction failed; left as a gap", angle_deg=s.angle_deg, error=s.error)
    if m.format == "csv":
        return region.to_csv(), EXIT_OK
    rows = list(csv.DictReader(io.StringIO(region.to_csv())))
    out = {"plane": m.plane, "n_dirs": m.n_dirs, "cap_N": float(m.upper), "samples": rows}
    if region.reference is not None:
        out["reference"] = {"direction": [float(v) for v in region.reference[0]], "magnitude_N": float(region.reference[1])}
    return _dumps(out), EXIT_OK


def _cmd_baseline(m: RunManifest, scene: GraspScene) -> tuple[str, int]:
    grasp = assemble(scene)
    config = m.iteration_config()
    preload = solve_iterative_prp(grasp, scene.actuation, np.zeros(6), config)
    if not preload.stable:
        raise PreloadError(f"preload not in equilibrium ({preload.reason})")
    c_0 = project_to_nullspace(grasp.G, preload.trace.final.solution.c)
    w = _physical_wrench(grasp, m.wrench)
    verdict = solve_iterative_prp(grasp, scene.actuation, w, config)
    base = distribute(grasp, None, w, c_0)
    fin = verdict.trace.final
    prp_forces = fin.solution.c if fin is not None else np.full((grasp.n, 3), np.nan)
    if not verdict.stable:
        _diagnose("warning", EXIT_OK, "grasp does not resist the wrench; passive forces are from the last iteration",
                  status=verdict.status, reason=verdict.reason)
    code = EXIT_NONCONVERGED if verdict.status == NONCONVERGED else EXIT_OK
    table = comparison_table(grasp, base, prp_forces)
    if m.format == "csv":
        return table, code
    rows = list(csv.DictReader(io.StringIO(table)))
    return _dumps({"verdict": verdict.status, "contacts": rows}), code


_HANDLERS = {
    "solve": _cmd_solve,
    "max-wrench": _cmd_max_wrench,
    "sweep": _cmd_sweep,
    "baseline-compare": _cmd_baseline,
}


def run(manifest: RunManifest) -> int:
    """Execute one manifest, write its output and return the exit code."""
    try:
        manifest.validate()
        scene = manifest.load()
        text, code = _HANDLERS[manifest.command](manifest, scene)
    except PreloadError as exc:
        _diagnose("error", EXIT_PRELOAD, str(exc))
        return EXIT_PRELOAD
    except (UsageError, SceneError, ValueError, TypeError) as exc:
        _diagnose("error", EXIT_INVALID, f"{type(exc).__name__}: {exc}")
        return EXIT_INVALID
    if manifest.output is not None:
        Path(manifest.output).write_text(text)
    else:
        sys.stdout.write(text)
    if code == EXIT_NONCONVERGED:
        _diagnose("error", code, "iterative solver reached its iteration limit")
    return code


# ---------------------------------------------------------------------------
# argument parsing


def _floats(n: Sequence[int]):
    def parse(text: str) -> tuple:
        try:
            vals = tuple(float(v) for v in text.replace(" ", "").split(","))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
        if len(vals) not in n:
            raise argparse.ArgumentTypeError(f"expected {' or '.join(map(str, n))} numbers, got {len(vals)}")
        if not all(map(math.isfinite, vals)):
            raise argparse.ArgumentTypeError("numbers must be finite")
        return vals
    return parse


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="passive-grasp", description="Passive grasp stability under preload.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("scene", type=Path, help="scene JSON file")
    common.add_argument("--gamma", type=float, default=_DEFAULTS.gamma, help="step bound of the virtual motion [m/N] (default %(default)s)")
    common.add_argument("--epsilon", type=float, default=_DEFAULTS.epsilon, help="convergence threshold [N] (default %(default)s)")
    common.add_argument("--kappa", type=float, default=SolverConfig().kappa, help="big-M scale factor (default %(default)s)")
    common.add_argument("--edges", type=int, default=None, help="override the friction pyramid edge count of every contact")
    common.add_argument("--output", "-o", type=Path, default=None, help="write the result here instead of stdout")
    common.add_argument("--format", dest="fmt", default=None, help="output format (command dependent)")
    common.add_argument("-v", "--verbose", action="store_true")
    search = argparse.ArgumentParser(add_help=False)
    search.add_argument("--steps", type=int, default=DEFAULT_STEPS, help="bisection steps (default %(default)s)")
    search.add_argument("--upper", type=float, default=DEFAULT_UPPER, help="search cap [N] (default %(default)s)")

    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve", parents=[common], help="stability verdict under one wrench (json|csv)")
    p.add_argument("--wrench", type=_floats((6,)), default=None, help="fx,fy,fz,tx,ty,tz in N and N m (default zero)")
    p.add_argument("--direct", action="store_true", help="one-shot solve without the iterative motion loop")

    p = sub.add_parser("max-wrench", parents=[common, search], help="largest resistible magnitude along a direction (text|json|csv)")
    p.add_argument("--direction", type=_floats((3, 6)), required=True, help="force x,y,z or scaled 6-vector")

    p = sub.add_parser("sweep", parents=[common, search], help="resistance region over a plane of force directions (csv|json)")
    p.add_argument("--plane", default="xy", help="coordinate force plane (default %(default)s)")
    p.add_argument("--dirs", dest="n_dirs", type=int, default=DEFAULT_DIRECTIONS, help="number of directions (default %(default)s)")
    p.add_argument("--normalize-ref", type=_floats((3,)), default=None, help="reference force direction x,y,z")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes (default: available CPUs)")

    p = sub.add_parser("baseline-compare", parents=[common], help="linear-compliance vs passive forces per contact (csv|json)")
    p.add_argument("--wrench", type=_floats((6,)), default=None, help="fx,fy,fz,tx,ty,tz in N and N m (default zero)")
    return ap


def manifest_from_args(args: argparse.Namespace) -> RunManifest:
    keys = ("wrench", "direction", "plane", "gamma", "epsilon", "steps", "upper", "edges", "kappa",
            "n_dirs", "normalize_ref", "jobs", "direct", "output", "fmt")
    return RunManifest(scene=args.scene, command=args.command, **{k: getattr(args, k) for k in keys if hasattr(args, k)})


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code not in (0, None):
            _diagnose("error", EXIT_INVALID, "invalid command line")
            return EXIT_INVALID
        return EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    return run(manifest_from_args(args))


if __name__ == "__main__":
    sys.exit(main())
