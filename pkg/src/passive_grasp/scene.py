"""Grasp data model, scene-file parsing and assembly of the grasp matrices.

Conventions
-----------
* Everything is expressed in the object frame, with the object's center of
  mass at the origin.
* Contact normals point *into* the object: a positive normal force pushes
  the object.
* Object wrenches are nondimensionalized: torque components are divided by
  the characteristic length ``L`` so every wrench entry is in newtons.  The
  matching virtual displacement carries rotations multiplied by ``L``.
* Contact forces are stacked in contact-frame coordinates ``(t1, t2, n)``.
* Joint axes are oriented so that positive rotation closes the hand on the
  object.  This cannot be checked from geometry alone and is a contract on
  scene authors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Sequence, Union

import numpy as np

PALM = "palm"
DEFAULT_EDGE_COUNT = 8
UNIT_TOL = 1e-9


class SceneError(ValueError):
    """Base class for scene problems."""


class SceneParseError(SceneError):
    """The scene document does not follow the schema."""


class SceneValidationError(SceneError):
    """The scene parses but violates a model invariant."""


class AssemblyError(SceneError):
    """The scene cannot be turned into grasp matrices."""


@dataclass(frozen=True)
class Contact:
    id: str
    position: np.ndarray
    normal: np.ndarray
    mu: float
    link: str = PALM
    edge_count: int = DEFAULT_EDGE_COUNT

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position, f"contact {self.id!r} position", SceneValidationError))
        object.__setattr__(self, "normal", _vec3(self.normal, f"contact {self.id!r} normal", SceneValidationError))
        if abs(np.linalg.norm(self.normal) - 1.0) > UNIT_TOL:
            raise SceneValidationError(f"contact {self.id!r}: normal not unit (norm {np.linalg.norm(self.normal):.6g})")
        if not np.isfinite(self.mu) or self.mu < 0:
            raise SceneValidationError(f"contact {self.id!r}: mu must be >= 0")
        if int(self.edge_count) != self.edge_count or self.edge_count < 3:
            raise SceneValidationError(f"contact {self.id!r}: edge_count must be an integer >= 3")
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "edge_count", int(self.edge_count))


@dataclass(frozen=True)
class Joint:
    name: str
    axis: np.ndarray
    origin: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "axis", _vec3(self.axis, f"joint {self.name!r} axis", SceneValidationError))
        object.__setattr__(self, "origin", _vec3(self.origin, f"joint {self.name!r} origin", SceneValidationError))
        if abs(np.linalg.norm(self.axis) - 1.0) > UNIT_TOL:
            raise SceneValidationError(f"joint {self.name!r}: axis not unit")


@dataclass(frozen=True)
class Link:
    name: str
    joints: tuple[str, ...]


@dataclass(frozen=True)
class KinematicChain:
    """Serial chain of revolute joints.

    Each link lists the joints preceding it, which must be a prefix of the
    chain's joint order (a link is moved by joints ``1..k``).
    """

    name: str
    joints: tuple[Joint, ...]
    links: tuple[Link, ...]

    def __post_init__(self):
        names = [j.name for j in self.joints]
        if len(set(names)) != len(names):
            raise SceneValidationError(f"chain {self.name!r}: duplicate joint names")
        for link in self.links:
            k = len(link.joints)
            if tuple(names[:k]) != tuple(link.joints):
                raise SceneValidationError(
                    f"chain {self.name!r}, link {link.name!r}: joints {list(link.joints)} "
                    f"are not the first {k} joints of the chain"
                )


@dataclass(frozen=True)
class DirectActuation:
    """One commanded torque per joint (non-backdrivable joints)."""

    tau_c: np.ndarray

    def __post_init__(self):
        tau = np.asarray(self.tau_c, dtype=float).reshape(-1)
        if not np.all(np.isfinite(tau)) or np.any(tau < 0):
            raise SceneValidationError("actuation: tau_c entries must be finite and >= 0")
        object.__setattr__(self, "tau_c", tau)

    mode = "direct"

    @property
    def commands(self) -> np.ndarray:
        return self.tau_c

    @property
    def n_actuators(self) -> int:
        return self.tau_c.size


@dataclass(frozen=True)
class TendonActuation:
    """Actuator forces mapped to joint torques by moment arms, ``tau = R f``."""

    R: np.ndarray
    f_c: np.ndarray

    def __post_init__(self):
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        f = np.asarray(self.f_c, dtype=float).reshape(-1)
        if R.ndim != 2 or R.shape[1] != f.size:
            raise SceneValidationError("actuation: R must be (num_joints x num_actuators) matching f_c")
        if not np.all(np.isfinite(R)):
            raise SceneValidationError("actuation: R entries must be finite")
        if not np.all(np.isfinite(f)) or np.any(f < 0):
            raise SceneValidationError("actuation: f_c entries must be finite and >= 0")
        if f.size and np.linalg.matrix_rank(R) < R.shape[1]:
            raise SceneValidationError("actuation: R must have full column rank")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "f_c", f)

    mode = "tendon"

    @property
    def commands(self) -> np.ndarray:
        return self.f_c

    @property
    def n_actuators(self) -> int:
        return self.f_c.size


Actuation = Union[DirectActuation, TendonActuation]


@dataclass(frozen=True)
class GraspScene:
    name: str
    characteristic_length: float
    contacts: tuple[Contact, ...]
    chains: tuple[KinematicChain, ...]
    actuation: Actuation

    def __post_init__(self):
        if not (np.isfinite(self.characteristic_length) and self.characteristic_length > 0):
            raise SceneValidationError("object: characteristic_length must be > 0")
        if not self.contacts:
            raise SceneValidationError("scene needs at least one contact")
        ids = [c.id for c in self.contacts]
        if len(set(ids)) != len(ids):
            raise SceneValidationError("duplicate contact ids")
        links = self.link_table()
        for c in self.contacts:
            if c.link != PALM and c.link not in links:
                raise SceneValidationError(f"contact {c.id!r}: unknown link {c.link!r}")
        n_joints = len(self.joint_names)
        act = self.actuation
        if isinstance(act, DirectActuation) and act.tau_c.size != n_joints:
            raise SceneValidationError(f"actuation: tau_c has {act.tau_c.size} entries for {n_joints} joints")
        if isinstance(act, TendonActuation) and act.R.shape[0] != n_joints:
            raise SceneValidationError(f"actuation: R has {act.R.shape[0]} rows for {n_joints} joints")

    @property
    def joint_names(self) -> list[str]:
        return [j.name for ch in self.chains for j in ch.joints]

    @property
    def joints(self) -> list[Joint]:
        return [j for ch in self.chains for j in ch.joints]

    def link_table(self) -> dict[str, tuple[str, ...]]:
        """Map link name to the global names of the joints preceding it."""
        table: dict[str, tuple[str, ...]] = {}
        for ch in self.chains:
            for link in ch.links:
                if link.name in table or link.name == PALM:
                    raise SceneValidationError(f"link name {link.name!r} is not unique")
                table[link.name] = link.joints
        return table

    def with_actuation(self, actuation: Actuation) -> "GraspScene":
        return GraspScene(self.name, self.characteristic_length, self.contacts, self.chains, actuation)


@dataclass(frozen=True)
class AssembledGrasp:
    """Numeric grasp matrices.

    Attributes
    ----------
    G : (6, 3n) grasp map, contact-frame forces to L-scaled object wrench.
    J : (3n, d) hand Jacobian, joint motion to contact-frame hand motion.
    D : (3n, E) block-diagonal friction pyramid edges, contact frame.
    F : (E, E) ``-I``; ``F beta <= 0`` is the pyramid membership.
    frames : (n, 3, 3) per-contact rotations with columns ``(t1, t2, n)``.
    """

    G: np.ndarray
    J: np.ndarray
    D: np.ndarray
    F: np.ndarray
    frames: np.ndarray
    positions: np.ndarray
    mu: np.ndarray
    edge_counts: np.ndarray
    characteristic_length: float
    contact_ids: tuple[str, ...]
    joint_names: tuple[str, ...]
    edge_slices: tuple[slice, ...] = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.contact_ids)

    @property
    def E(self) -> int:
        return self.D.shape[1]

    @property
    def n_joints(self) -> int:
        return self.J.shape[1]

    @property
    def normal_rows(self) -> np.ndarray:
        """Row indices of the normal components in stacked contact vectors."""
        return np.arange(self.n) * 3 + 2

    def scale_wrench(self, force=(0, 0, 0), torque=(0, 0, 0)) -> np.ndarray:
        """Physical force [N] and torque [N m] to an L-scaled wrench."""
        return np.concatenate([np.asarray(force, float), np.asarray(torque, float) / self.characteristic_length])

    def unscale_wrench(self, w) -> tuple[np.ndarray, np.ndarray]:
        w = np.asarray(w, float)
        return w[:3].copy(), w[3:] * self.characteristic_length


def _vec3(value, what, exc=SceneParseError) -> np.ndarray:
    try:
        v = np.asarray(value, dtype=float).reshape(-1)
    except (TypeError, ValueError):
        raise exc(f"{what}: expected 3 numbers") from None
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise exc(f"{what}: expected 3 finite numbers")
    return v


def skew(p) -> np.ndarray:
    x, y, z = p
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def build_contact_frame(normal) -> np.ndarray:
    """Right-handed contact frame with columns ``(t1, t2, n)``.

    ``t1`` is the coordinate axis of the smallest-magnitude normal component
    crossed with the normal (ties go to the later axis), so ``(0, 0, 1)``
    gives ``t1 = x`` and ``t2 = y``.
    """
    n = np.asarray(normal, dtype=float)
    mags = np.abs(n)
    k = 2 - int(np.argmin(mags[::-1]))
    axis = np.zeros(3)
    axis[k] = 1.0
    t1 = np.cross(axis, n)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n, t1)
    return np.column_stack([t1, t2, n])


def pyramid_edges_local(mu: float, edge_count: int) -> np.ndarray:
    """Unit pyramid edges in contact-frame coordinates, shape (3, edge_count)."""
    theta = 2.0 * np.pi * np.arange(edge_count) / edge_count
    cols = np.vstack([mu * np.cos(theta), mu * np.sin(theta), np.ones(edge_count)])
    return cols / np.linalg.norm(cols, axis=0)


def build_friction_pyramid(contact: Contact, frame) -> np.ndarray:
    """Object-frame pyramid edges ``normalize(n + mu (cos t1 + sin t2))``."""
    return np.asarray(frame) @ pyramid_edges_local(contact.mu, contact.edge_count)


def assemble(scene: GraspScene) -> AssembledGrasp:
    contacts = scene.contacts
    n = len(contacts)
    L = float(scene.characteristic_length)
    joints = scene.joints
    col = {j.name: k for k, j in enumerate(joints)}
    links = scene.link_table()

    frames = np.empty((n, 3, 3))
    G = np.zeros((6, 3 * n))
    J = np.zeros((3 * n, len(joints)))
    blocks = []
    slices = []
    start = 0
    for i, c in enumerate(contacts):
        R = build_contact_frame(c.normal)
        frames[i] = R
        G[:3, 3 * i:3 * i + 3] = R
        G[3:, 3 * i:3 * i + 3] = skew(c.position) @ R / L
        if c.link != PALM:
            if c.link not in links:
                raise AssemblyError(f"contact {c.id!r} on undeclared link {c.link!r}")
            for name in links[c.link]:
                jt = joints[col[name]]
                J[3 * i:3 * i + 3, col[name]] = R.T @ np.cross(jt.axis, c.position - jt.origin)
        blocks.append(pyramid_edges_local(c.mu, c.edge_count))
        slices.append(slice(start, start + c.edge_count))
        start += c.edge_count

    D = np.zeros((3 * n, start))
    for i, (blk, sl) in enumerate(zip(blocks, slices)):
        D[3 * i:3 * i + 3, sl] = blk

    return AssembledGrasp(
        G=G,
        J=J,
        D=D,
        F=-np.eye(start),
        frames=frames,
        positions=np.array([c.position for c in contacts]).reshape(n, 3),
        mu=np.array([c.mu for c in contacts]),
        edge_counts=np.array([c.edge_count for c in contacts]),
        characteristic_length=L,
        contact_ids=tuple(c.id for c in contacts),
        joint_names=tuple(j.name for j in joints),
        edge_slices=tuple(slices),
    )


# ---------------------------------------------------------------------------
# scene files


def _require(tree: dict, key: str, where: str):
    if not isinstance(tree, dict):
        raise SceneParseError(f"{where}: expected an object")
    if key not in tree:
        raise SceneParseError(f"{where}: missing field {key!r}")
    return tree[key]


def _number(value, what) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SceneParseError(f"{what}: expected a number")
    return float(value)


def _string(value, what) -> str:
    if not isinstance(value, str) or not value:
        raise SceneParseError(f"{what}: expected a non-empty string")
    return value


def _list(value, what) -> list:
    if not isinstance(value, list):
        raise SceneParseError(f"{what}: expected a list")
    return value


def scene_from_dict(tree: dict[str, Any]) -> GraspScene:
    obj = _require(tree, "object", "scene")
    name = _string(_require(obj, "name", "object"), "object.name")
    L = _number(_require(obj, "characteristic_length", "object"), "object.characteristic_length")

    chains = []
    for ci, ch in enumerate(_list(tree.get("chains", []), "chains")):
        where = f"chains[{ci}]"
        joints = []
        for ji, jt in enumerate(_list(_require(ch, "joints", where), f"{where}.joints")):
            jw = f"{where}.joints[{ji}]"
            joints.append(
                Joint(
                    name=_string(_require(jt, "name", jw), f"{jw}.name"),
                    axis=_vec3(_require(jt, "axis", jw), f"{jw}.axis"),
                    origin=_vec3(_require(jt, "origin", jw), f"{jw}.origin"),
                )
            )
        links = []
        for li, lk in enumerate(_list(_require(ch, "links", where), f"{where}.links")):
            lw = f"{where}.links[{li}]"
            jn = _list(_require(lk, "joints", lw), f"{lw}.joints")
            links.append(Link(_string(_require(lk, "name", lw), f"{lw}.name"), tuple(_string(s, f"{lw}.joints") for s in jn)))
        chains.append(KinematicChain(str(ch.get("name", f"chain{ci}")), tuple(joints), tuple(links)))

    contacts = []
    for ci, c in enumerate(_list(_require(tree, "contacts", "scene"), "contacts")):
        where = f"contacts[{ci}]"
        edge_count = c.get("edge_count", DEFAULT_EDGE_COUNT) if isinstance(c, dict) else None
        if isinstance(edge_count, bool) or not isinstance(edge_count, int):
            raise SceneParseError(f"{where}.edge_count: expected an integer")
        contacts.append(
            Contact(
                id=_string(_require(c, "id", where), f"{where}.id"),
                position=_vec3(_require(c, "position", where), f"{where}.position"),
                normal=_vec3(_require(c, "normal", where), f"{where}.normal"),
                mu=_number(_require(c, "mu", where), f"{where}.mu"),
                link=_string(c.get("link", PALM), f"{where}.link"),
                edge_count=edge_count,
            )
        )

    act = _require(tree, "actuation", "scene")
    mode = _require(act, "mode", "actuation")
    if mode == "direct":
        tau = [_number(v, "actuation.tau_c") for v in _list(_require(act, "tau_c", "actuation"), "actuation.tau_c")]
        actuation: Actuation = DirectActuation(np.array(tau, dtype=float))
    elif mode == "tendon":
        rows = _list(_require(act, "R", "actuation"), "actuation.R")
        R = [[_number(v, "actuation.R") for v in _list(r, "actuation.R")] for r in rows]
        f = [_number(v, "actuation.f_c") for v in _list(_require(act, "f_c", "actuation"), "actuation.f_c")]
        if len({len(r) for r in R}) > 1:
            raise SceneParseError("actuation.R: ragged rows")
        R_arr = np.array(R, dtype=float).reshape(len(R), len(f) if not R else len(R[0]))
        actuation = TendonActuation(R_arr, np.array(f, dtype=float))
    else:
        raise SceneParseError(f"actuation.mode: expected 'direct' or 'tendon', got {mode!r}")

    return GraspScene(name, L, tuple(contacts), tuple(chains), actuation)


def parse_scene(text: str) -> GraspScene:
    try:
        tree = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneParseError(f"not valid JSON: {exc}") from None
    return scene_from_dict(tree)


def load_scene(path) -> GraspScene:
    with open(path, encoding="utf-8") as fh:
        return parse_scene(fh.read())


def scene_to_dict(scene: GraspScene) -> dict[str, Any]:
    act = scene.actuation
    if isinstance(act, DirectActuation):
        actuation = {"mode": "direct", "tau_c": act.tau_c.tolist()}
    else:
        actuation = {"mode": "tendon", "R": act.R.tolist(), "f_c": act.f_c.tolist()}
    return {
        "object": {"name": scene.name, "characteristic_length": scene.characteristic_length},
        "contacts": [
            {
                "id": c.id,
                "position": c.position.tolist(),
                "normal": c.normal.tolist(),
                "mu": c.mu,
                "edge_count": c.edge_count,
                "link": c.link,
            }
            for c in scene.contacts
        ],
        "chains": [
            {
                "name": ch.name,
                "joints": [{"name": j.name, "axis": j.axis.tolist(), "origin": j.origin.tolist()} for j in ch.joints],
                "links": [{"name": lk.name, "joints": list(lk.joints)} for lk in ch.links],
            }
            for ch in scene.chains
        ],
        "actuation": actuation,
    }


def dump_scene(scene: GraspScene) -> str:
    return json.dumps(scene_to_dict(scene), indent=2)


def commands_vector(actuation: Actuation) -> np.ndarray:
    return actuation.commands


def validate_commands(grasp: AssembledGrasp, actuation: Actuation) -> None:
    d = grasp.n_joints
    if isinstance(actuation, DirectActuation):
        if actuation.tau_c.size != d:
            raise SceneValidationError(f"tau_c has {actuation.tau_c.size} entries for {d} joints")
    elif isinstance(actuation, TendonActuation):
        if actuation.R.shape[0] != d:
            raise SceneValidationError(f"R has {actuation.R.shape[0]} rows for {d} joints")
    else:
        raise TypeError(f"unknown actuation {type(actuation).__name__}")


def as_wrench(w: Sequence[float]) -> np.ndarray:
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.shape != (6,) or not np.all(np.isfinite(w)):
        raise ValueError("wrench must be 6 finite numbers")
    return w
