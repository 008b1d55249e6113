"""Robot kinematics and role-division inverse kinematics.

A robot is a serial chain (optional prismatic base DOFs, then arm joints).
IK's primary objective is the commanded hand pose; the secondary objective
pulls the upper-arm and forearm directions toward the demonstrated
Labanotation row, with base/lift DOFs seeded to put the shoulder where that
posture requires.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from ..errors import IKError, InvalidInputError
from ..laban import LabanDirection, canonical_direction, digitize_direction


@dataclass(frozen=True)
class Joint:
    name: str
    kind: str  # "revolute" | "prismatic"
    axis: tuple[float, float, float]
    offset: tuple[float, float, float] = (0.0, 0.0, 0.0)
    limits: tuple[float, float] = (-math.pi, math.pi)

    def __post_init__(self):
        if self.kind not in ("revolute", "prismatic"):
            raise InvalidInputError(f"unknown joint kind {self.kind!r}")
        if self.limits[0] >= self.limits[1]:
            raise InvalidInputError(f"joint {self.name}: limits not well-ordered")


@dataclass(frozen=True)
class RobotSpec:
    name: str
    joints: tuple[Joint, ...]
    tool_offset: tuple[float, float, float]
    shoulder_joint: int
    elbow_joint: int
    wrist_joint: int
    home_q: tuple[float, ...] = ()

    def __post_init__(self):
        if self.home_q and len(self.home_q) != len(self.joints):
            raise InvalidInputError("home_q length must match joint count")

    @property
    def dof(self) -> int:
        return len(self.joints)

    def clamp(self, q: np.ndarray) -> np.ndarray:
        lo = np.array([j.limits[0] for j in self.joints])
        hi = np.array([j.limits[1] for j in self.joints])
        return np.clip(q, lo, hi)

    def limb_lengths(self) -> tuple[float, float]:
        pts = fk_points(self, np.array(self.home_q or [0.0] * self.dof))
        upper = float(np.linalg.norm(pts["elbow"] - pts["shoulder"]))
        fore = float(np.linalg.norm(pts["wrist"] - pts["elbow"]))
        return upper, fore


_GEN_CACHE: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}


def _axis_generators(axis) -> tuple[np.ndarray, np.ndarray]:
    key = tuple(axis)
    hit = _GEN_CACHE.get(key)
    if hit is None:
        k = np.asarray(axis, float)
        k = k / np.linalg.norm(k)
        K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
        hit = (K, K @ K)
        _GEN_CACHE[key] = hit
    return hit


def _axis_rotation(axis, angle: float) -> np.ndarray:
    K, KK = _axis_generators(axis)
    return np.eye(3) + math.sin(angle) * K + (1.0 - math.cos(angle)) * KK


def fk(robot: RobotSpec, q: Sequence[float]) -> tuple[np.ndarray, np.ndarray, list, list]:
    """Hand position, hand rotation, per-joint origins, per-joint world axes."""
    q = np.asarray(q, float)
    if q.shape != (robot.dof,):
        raise InvalidInputError(f"q must have {robot.dof} entries")
    R = np.eye(3)
    p = np.zeros(3)
    origins, axes = [], []
    for joint, qi in zip(robot.joints, q):
        p = p + R @ np.asarray(joint.offset)
        axis_w = R @ np.asarray(joint.axis)
        origins.append(p.copy())
        axes.append(axis_w)
        if joint.kind == "revolute":
            R = R @ _axis_rotation(joint.axis, float(qi))
        else:
            p = p + axis_w * float(qi)
    hand = p + R @ np.asarray(robot.tool_offset)
    return hand, R, origins, axes


def fk_points(robot: RobotSpec, q: Sequence[float]) -> dict[str, np.ndarray]:
    hand, R, origins, _ = fk(robot, q)
    return {
        "hand": hand,
        "rotation": R,
        "shoulder": origins[robot.shoulder_joint],
        "elbow": origins[robot.elbow_joint],
        "wrist": origins[robot.wrist_joint],
    }


def jacobian(robot: RobotSpec, q: Sequence[float]) -> np.ndarray:
    hand, _, origins, axes = fk(robot, q)
    J = np.zeros((6, robot.dof))
    for i, joint in enumerate(robot.joints):
        a = axes[i]
        if joint.kind == "revolute":
            r = hand - origins[i]
            J[0, i] = a[1] * r[2] - a[2] * r[1]
            J[1, i] = a[2] * r[0] - a[0] * r[2]
            J[2, i] = a[0] * r[1] - a[1] * r[0]
            J[3:, i] = a
        else:
            J[:3, i] = a
    return J


def _ori_error(R_target: np.ndarray, R: np.ndarray) -> np.ndarray:
    dR = R_target @ R.T
    cos_a = (np.trace(dR) - 1.0) / 2.0
    angle = math.acos(max(-1.0, min(1.0, cos_a)))
    if angle < 1e-12:
        return np.zeros(3)
    v = np.array([dR[2, 1] - dR[1, 2], dR[0, 2] - dR[2, 0], dR[1, 0] - dR[0, 1]])
    n = np.linalg.norm(v)
    if n < 1e-12:
        # half-turn: extract the axis from the symmetric part
        M = (dR + np.eye(3)) / 2.0
        axis = np.sqrt(np.maximum(np.diagonal(M), 0.0))
        axis = axis / np.linalg.norm(axis)
        return axis * angle
    return v / n * angle


@dataclass(frozen=True)
class IKSolution:
    q: tuple[float, ...]
    pos_err: float
    ori_err: float
    posture_cost: float
    laban_match: Mapping[str, bool] = field(default_factory=dict)


POS_TOL = 1e-4  # primary contract is 1 mm / 1 deg; converge well inside it
ORI_TOL = math.radians(0.2)


def _dls_solve(robot, q, target_pos, target_rot, iters=500, lam=0.05):
    best_q, best_pos = q.copy(), np.inf
    for _ in range(iters):
        hand, R, _, _ = fk(robot, q)
        e = np.concatenate([target_pos - hand, _ori_error(target_rot, R)])
        pe, oe = float(np.linalg.norm(e[:3])), float(np.linalg.norm(e[3:]))
        if pe < best_pos:
            best_q, best_pos = q.copy(), pe
        if pe < POS_TOL and oe < ORI_TOL:
            return q, pe, oe
        J = jacobian(robot, q)
        JT = J.T
        damp = max(1e-4, lam * min(1.0, pe + oe))  # anneal damping near the solution
        dq = JT @ np.linalg.solve(J @ JT + damp ** 2 * np.eye(6), e)
        step = np.linalg.norm(dq)
        if step > 0.5:
            dq *= 0.5 / step
        q = robot.clamp(q + dq)
    hand, R, _, _ = fk(robot, q)
    pe = float(np.linalg.norm(target_pos - hand))
    oe = float(np.linalg.norm(_ori_error(target_rot, R)))
    if pe < POS_TOL and oe < ORI_TOL:
        return q, pe, oe
    return best_q, None, None  # not converged; best_q carries the closest approach


def _limb_dirs(robot, q):
    pts = fk_points(robot, q)
    upper = pts["elbow"] - pts["shoulder"]
    fore = pts["wrist"] - pts["elbow"]
    return upper / np.linalg.norm(upper), fore / np.linalg.norm(fore)


def _posture_cost(robot, q, d_elbow, d_wrist):
    u, f = _limb_dirs(robot, q)
    c = 0.0
    if d_elbow is not None:
        c += math.acos(max(-1.0, min(1.0, float(np.dot(u, d_elbow))))) ** 2
    if d_wrist is not None:
        c += math.acos(max(-1.0, min(1.0, float(np.dot(f, d_wrist))))) ** 2
    return c


def _laban_targets(laban_row: Optional[Mapping[str, str]], actor: str):
    d_e = d_w = None
    if laban_row:
        for col, tok in laban_row.items():
            d = canonical_direction(LabanDirection.from_token(tok))
            if col.endswith("elbow"):
                d_e = d
            elif col.endswith("wrist"):
                d_w = d
    return d_e, d_w


def _seed_base(robot, q, target_pos, target_rot, d_e, d_w):
    """Point the prismatic base/lift DOFs at the shoulder position the
    demonstrated posture would require (the role-division shoulder)."""
    base_idx = [i for i, j in enumerate(robot.joints) if j.kind == "prismatic"]
    if not base_idx or d_e is None or d_w is None:
        return q
    upper, fore = robot.limb_lengths()
    wrist_target = target_pos - target_rot @ np.asarray(robot.tool_offset)
    shoulder_target = wrist_target - fore * d_w - upper * d_e
    q = q.copy()
    for _ in range(3):  # prismatic axes are independent; a few sweeps settle it
        pts = fk_points(robot, q)
        delta = shoulder_target - pts["shoulder"]
        for i in base_idx:
            _, _, _, axes = fk(robot, q)
            q[i] += float(np.dot(delta, axes[i]))
        q = robot.clamp(q)
    return q


def solve_ik_role_division(target_pos, target_rot, laban_row: Optional[Mapping[str, str]],
                           robot: RobotSpec, q0: Optional[Sequence[float]] = None,
                           posture_iters: int = 30) -> IKSolution:
    """Hand pose first, demonstrated arm shape second.

    Raises IKError with the closest-approach distance when no seed reaches the
    target within 1 mm / 1 deg.
    """
    target_pos = np.asarray(target_pos, float)
    target_rot = np.asarray(target_rot, float)
    d_e, d_w = _laban_targets(laban_row, "right")

    seeds = []
    if q0 is not None:
        seeds.append(np.asarray(q0, float))
    home = np.array(robot.home_q or [0.0] * robot.dof)
    seeds.append(_seed_base(robot, home, target_pos, target_rot, d_e, d_w))
    # turn the shoulder toward the target, with normal and folded elbow variants
    pts = fk_points(robot, home)
    rel = target_pos - pts["shoulder"]
    yaw = math.atan2(rel[1], rel[0])
    for fold in (0.0, 1.2):
        aimed = home.copy()
        for i, j in enumerate(robot.joints):
            if j.kind == "revolute" and j.name.endswith("yaw") and i <= robot.shoulder_joint:
                aimed[i] = yaw
                break
        aimed[robot.elbow_joint] = home[robot.elbow_joint] + fold
        seeds.append(robot.clamp(aimed))
    flip = home.copy()
    flip[robot.elbow_joint] = -flip[robot.elbow_joint] - 0.5
    seeds.append(flip)

    solutions = []
    closest = np.inf
    for i, seed in enumerate(seeds):
        q, pe, oe = _dls_solve(robot, seed.copy(), target_pos, target_rot)
        if pe is None:
            hand, _, _, _ = fk(robot, q)
            closest = min(closest, float(np.linalg.norm(target_pos - hand)))
            continue
        solutions.append((q, pe, oe))
        if q0 is not None and i == 0:
            break  # the warm continuation is the solution; skip cold seeds
    if not solutions:
        raise IKError("hand target unreachable", closest)

    refined = []
    for q, pe, oe in solutions:
        if (d_e is not None or d_w is not None) and posture_iters:
            q, pe, oe = _posture_descent(robot, q, target_pos, target_rot,
                                         d_e, d_w, posture_iters)
        refined.append((q, pe, oe, _posture_cost(robot, q, d_e, d_w)))
    q, pe, oe, cost = min(refined, key=lambda s: s[3])

    match = {}
    if laban_row:
        u, f = _limb_dirs(robot, q)
        for col, tok in laban_row.items():
            actual = digitize_direction(u if col.endswith("elbow") else f).token
            match[col] = actual == tok
    return IKSolution(tuple(float(x) for x in q), pe, oe, cost, match)


def _posture_descent(robot, q, target_pos, target_rot, d_e, d_w, iters):
    """Nullspace descent on the posture cost; the primary hand objective is
    re-solved after each step and never sacrificed."""
    cost = _posture_cost(robot, q, d_e, d_w)
    pe = oe = 0.0
    alpha = 0.4
    # only revolute joints at or before the wrist move the limb directions
    grad_idx = [i for i, j in enumerate(robot.joints)
                if j.kind == "revolute" and i <= robot.wrist_joint]
    for _ in range(iters):
        if cost < 1e-4:
            break
        J = jacobian(robot, q)
        JT = J.T
        Jpinv = JT @ np.linalg.solve(J @ JT + 1e-6 * np.eye(6), np.eye(6))
        N = np.eye(robot.dof) - Jpinv @ J
        g = np.zeros(robot.dof)
        h = 1e-4
        for i in grad_idx:
            dq = np.zeros(robot.dof)
            dq[i] = h
            g[i] = (_posture_cost(robot, q + dq, d_e, d_w)
                    - _posture_cost(robot, q - dq, d_e, d_w)) / (2 * h)
        step = N @ (-alpha * g)
        if np.linalg.norm(step) < 1e-7:
            break
        q_try = robot.clamp(q + step)
        q_new, pe_new, oe_new = _dls_solve(robot, q_try, target_pos, target_rot, iters=30)
        if pe_new is None:
            alpha *= 0.5
            if alpha < 1e-3:
                break
            continue
        new_cost = _posture_cost(robot, q_new, d_e, d_w)
        if new_cost >= cost - 1e-9:
            alpha *= 0.5
            if alpha < 1e-3:
                break
            continue
        q, cost, pe, oe = q_new, new_cost, pe_new, oe_new
    # make sure the reported errors reflect the final q
    hand, R, _, _ = fk(robot, q)
    pe = float(np.linalg.norm(target_pos - hand))
    oe = float(np.linalg.norm(_ori_error(target_rot, R)))
    return q, pe, oe


# ---------------------------------------------------------------------------
# Bundled robots (dimensions invented for the desk-scale testbeds)


DESK6 = RobotSpec(
    name="desk6",
    joints=(
        Joint("shoulder_yaw", "revolute", (0, 0, 1), offset=(0.0, -0.22, 0.95),
              limits=(-2.6, 2.6)),
        Joint("shoulder_pitch", "revolute", (0, 1, 0), limits=(-2.6, 2.6)),
        Joint("elbow_pitch", "revolute", (0, 1, 0), offset=(0.35, 0.0, 0.0),
              limits=(-2.8, 2.8)),
        Joint("wrist_roll", "revolute", (1, 0, 0), offset=(0.32, 0.0, 0.0),
              limits=(-3.0, 3.0)),
        Joint("wrist_pitch", "revolute", (0, 1, 0), limits=(-3.0, 3.0)),
        Joint("wrist_yaw", "revolute", (0, 0, 1), limits=(-3.0, 3.0)),
    ),
    tool_offset=(0.08, 0.0, 0.0),
    shoulder_joint=1,
    elbow_joint=2,
    wrist_joint=3,
    home_q=(0.0, 0.6, 0.8, 0.0, -0.6, 0.0),
)

CART7 = RobotSpec(
    name="cart7",
    joints=(
        Joint("base_x", "prismatic", (1, 0, 0), limits=(-0.35, 0.35)),
        Joint("base_y", "prismatic", (0, 1, 0), limits=(-0.35, 0.35)),
        Joint("lift", "prismatic", (0, 0, 1), offset=(0.0, -0.18, 0.80),
              limits=(0.0, 0.35)),
        Joint("shoulder_yaw", "revolute", (0, 0, 1), limits=(-2.8, 2.8)),
        Joint("shoulder_pitch", "revolute", (0, 1, 0), limits=(-2.8, 2.8)),
        Joint("shoulder_roll", "revolute", (1, 0, 0), limits=(-2.8, 2.8)),
        Joint("elbow_pitch", "revolute", (0, 1, 0), offset=(0.33, 0.0, 0.0),
              limits=(-2.8, 2.8)),
        Joint("forearm_roll", "revolute", (1, 0, 0), limits=(-3.0, 3.0)),
        Joint("wrist_pitch", "revolute", (0, 1, 0), offset=(0.31, 0.0, 0.0),
              limits=(-3.0, 3.0)),
        Joint("wrist_yaw", "revolute", (0, 0, 1), limits=(-3.0, 3.0)),
    ),
    tool_offset=(0.07, 0.0, 0.0),
    shoulder_joint=3,
    elbow_joint=6,
    wrist_joint=8,
    home_q=(0.0, 0.0, 0.15, 0.0, 0.6, 0.0, 0.8, 0.0, -0.6, 0.0),
)

BUNDLED_ROBOTS = {"desk6": DESK6, "cart7": CART7}


def robot_to_dict(robot: RobotSpec) -> dict:
    return {
        "version": 1,
        "kind": "robot-spec",
        "name": robot.name,
        "joints": [
            {
                "name": j.name, "type": j.kind, "axis": list(j.axis),
                "offset": list(j.offset), "limits": list(j.limits),
            }
            for j in robot.joints
        ],
        "tool_offset": list(robot.tool_offset),
        "markers": {
            "shoulder": robot.shoulder_joint,
            "elbow": robot.elbow_joint,
            "wrist": robot.wrist_joint,
        },
        "home_q": list(robot.home_q),
    }


def robot_from_dict(doc: dict) -> RobotSpec:
    if doc.get("kind") != "robot-spec":
        raise InvalidInputError("not a robot-spec document")
    joints = tuple(
        Joint(j["name"], j["type"], tuple(j["axis"]), tuple(j.get("offset", (0, 0, 0))),
              tuple(j["limits"]))
        for j in doc["joints"]
    )
    markers = doc.get("markers", {})
    return RobotSpec(
        name=doc.get("name", "robot"),
        joints=joints,
        tool_offset=tuple(doc["tool_offset"]),
        shoulder_joint=int(markers.get("shoulder", 0)),
        elbow_joint=int(markers.get("elbow", 0)),
        wrist_joint=int(markers.get("wrist", 0)),
        home_q=tuple(doc.get("home_q", [])),
    )
