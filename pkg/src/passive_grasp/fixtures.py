"""Reference grasp scenes used by the tests, examples and CLI demos.

All scenes are planar grasps in the XY plane: two fingers with a
proximal and a distal link each, closing towards the object centre at the
origin.  Every finger contact has a 2 cm moment arm about the joint of its own
link, so a distal joint torque ``T`` produces a distal normal force ``50 T``.
"""

from __future__ import annotations

import numpy as np

from .scene import Contact, DirectActuation, GraspScene, Joint, KinematicChain, Link, TendonActuation

S2 = np.sqrt(0.5)
LENGTH = 0.03
MU = 0.5

# proximal joint placed so that the proximal contact sits 2 cm along the link
_PROX_JOINT = np.array([-0.02 + 0.02 * S2, -0.02 - 0.02 * S2, 0.0])
_DIST_JOINT = np.array([-0.03, -0.01, 0.0])


def _mirror(p):
    p = np.asarray(p, dtype=float)
    return np.array([-p[0], p[1], p[2]])


def _finger(side: str):
    """Chain and contacts of the left (``"l"``) or right (``"r"``) finger."""
    sign = 1.0 if side == "l" else -1.0
    flip = (lambda p: np.asarray(p, float)) if side == "l" else _mirror
    axis = (0.0, 0.0, -sign)
    joints = (
        Joint(f"{side}_prox", axis, flip(_PROX_JOINT)),
        Joint(f"{side}_dist", axis, flip(_DIST_JOINT)),
    )
    chain = KinematicChain(
        f"finger_{side}",
        joints,
        (Link(f"{side}_proximal", (f"{side}_prox",)), Link(f"{side}_distal", (f"{side}_prox", f"{side}_dist"))),
    )
    return chain


def _contacts(mu, edge_count):
    out = []
    for side, sign in (("l", 1.0), ("r", -1.0)):
        out.append(Contact(f"{side}_proximal", (-sign * 0.02, -0.02, 0.0), (sign * S2, S2, 0.0), mu, f"{side}_proximal", edge_count))
        out.append(Contact(f"{side}_distal", (-sign * 0.03, 0.01, 0.0), (sign, 0.0, 0.0), mu, f"{side}_distal", edge_count))
    return tuple(out)


def canonical_grasp(distal_torque: float = 0.0, proximal_torque: float = 0.0, mu: float = MU, edge_count: int = 8) -> GraspScene:
    """Two-finger enveloping grasp with non-backdrivable, directly driven joints.

    Joint order is ``l_prox, l_dist, r_prox, r_dist``.
    """
    tau = [proximal_torque, distal_torque, proximal_torque, distal_torque]
    return GraspScene(
        name="canonical_enveloping",
        characteristic_length=LENGTH,
        contacts=_contacts(mu, edge_count),
        chains=(_finger("l"), _finger("r")),
        actuation=DirectActuation(tau),
    )


# underactuated hand: upright proximal links, distal links tilted 45 degrees
# down onto the object, and a palm contact under the object
_UA_TILT = np.radians(45.0)
_UA_PROX_CONTACT = np.array([-0.03, -0.02, 0.0])
_UA_DIST_CONTACT = np.array([-0.02, 0.02, 0.0])
_UA_DIST_NORMAL = np.array([np.cos(_UA_TILT), -np.sin(_UA_TILT), 0.0])
_UA_PROX_JOINT = _UA_PROX_CONTACT - np.array([0.0, 0.02, 0.0])
_UA_DIST_JOINT = _UA_DIST_CONTACT - 0.02 * np.array([np.sin(_UA_TILT), np.cos(_UA_TILT), 0.0])
_UA_PALM = np.array([0.0, -0.045, 0.0])
TENDON_ARMS = np.array([
    [0.005, 0.0016],
    [0.0, 0.005],
    [0.005, 0.0016],
    [0.0, 0.005],
])


def underactuated_grasp(proximal_force: float = 0.0, distal_force: float = 0.0, mu: float = MU, edge_count: int = 8) -> GraspScene:
    """Two-finger grasp on a palm driven by two tendons shared by both fingers.

    The proximal tendon has a 5 mm moment arm at both proximal joints; the
    distal tendon has 1.6 mm at the proximal and 5 mm at the distal joints.
    Each finger has a proximal link touching the object side and a distal
    link pressing down and inwards at 45 degrees; a palm contact below the
    object closes the grasp.  Joint order is ``l_prox, l_dist, r_prox, r_dist``.
    """
    contacts = [Contact("palm", _UA_PALM, (0.0, 1.0, 0.0), mu, edge_count=edge_count)]
    chains = []
    for side, sign in (("l", 1.0), ("r", -1.0)):
        flip = (lambda p: np.asarray(p, float)) if side == "l" else _mirror
        axis = (0.0, 0.0, -sign)
        chains.append(KinematicChain(
            f"finger_{side}",
            (Joint(f"{side}_prox", axis, flip(_UA_PROX_JOINT)), Joint(f"{side}_dist", axis, flip(_UA_DIST_JOINT))),
            (Link(f"{side}_proximal", (f"{side}_prox",)), Link(f"{side}_distal", (f"{side}_prox", f"{side}_dist"))),
        ))
        contacts.append(Contact(f"{side}_proximal", flip(_UA_PROX_CONTACT), (sign, 0.0, 0.0), mu, f"{side}_proximal", edge_count))
        contacts.append(Contact(f"{side}_distal", flip(_UA_DIST_CONTACT), flip(_UA_DIST_NORMAL), mu, f"{side}_distal", edge_count))
    return GraspScene(
        name="underactuated_enveloping",
        characteristic_length=LENGTH,
        contacts=tuple(contacts),
        chains=tuple(chains),
        actuation=TendonActuation(TENDON_ARMS, [proximal_force, distal_force]),
    )
