"""Manipulation and grasp skills over the quasi-static world.

Each skill follows the same interface the trained-controller design would
use: hints come from the task frame's slots, the environment feeds back a
thresholded drag-force flag, and the skill outputs hand motion.  Place-like
skills terminate on drag onset; pick-like skills terminate when the
demonstrated displacement is reached drag-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..contact import (
    DEFAULT_REGISTRY,
    MotionKind,
    Ping,
    Pose,
    TaskType,
    check_semantic_constraint,
    classify_transition,
    constraint_from_dict,
)
from ..errors import IKError, SkillError
from ..geometry import as_vec3, normalized
from ..grasp import DEFAULT_GRIPPER, ClosureType
from ..taskmodel import GMRProgram, TaskFrame
from .localize import runtime_localize
from .robot import RobotSpec, fk, solve_ik_role_division
from .trace import ExecutionTrace, TerminationEvent, TraceStep
from .world import WorldState, _axis_rotation, attachment_class


@dataclass(frozen=True)
class SimConfig:
    step_linear: float = 0.001           # m per quasi-static step
    step_angular: float = math.radians(0.5)
    timeout_steps: int = 10000
    drag_magnitude: float = 10.0         # reported force at a blocking contact
    drag_threshold: float = 5.0          # skills only compare against this
    hand_speed: float = 0.1              # m/s, for trace timestamps
    angular_speed: float = 0.5           # rad/s
    approach_standoff: float = 0.10
    palm_clearance: float = 0.02
    camera: tuple[float, float, float] = (0.0, -0.20, 1.45)
    rest_tolerance: float = 2e-3         # released object counts as supported within this


class SimSession:
    """Single-threaded deterministic simulation of one program run."""

    def __init__(self, world: WorldState, robot: RobotSpec, config: SimConfig = SimConfig()):
        self.world = world
        self.robot = robot
        self.config = config
        self.trace = ExecutionTrace(robot_name=robot.name)
        self.t = 0.0
        self.q = np.array(robot.home_q or [0.0] * robot.dof, float)
        hand, R, _, _ = fk(robot, self.q)
        self.hand_pos = hand
        self.hand_rot = R
        self.frame_index = -1
        self.task = ""
        self.held_object: Optional[str] = None
        self.held_offset = np.zeros(3)
        self.mechanism_zero_hand: Optional[np.ndarray] = None
        self.mechanism_zero_rot: Optional[np.ndarray] = None
        self._constraint = None
        self._constraint_t0 = None
        self._last_contact_surface: Optional[str] = None
        self._last_ik_err = 0.0

    # -- recording ---------------------------------------------------------

    def _record(self, drag: float) -> None:
        self.trace.steps.append(TraceStep(
            self.t, self.frame_index, self.task,
            tuple(float(x) for x in self.q),
            tuple(float(x) for x in self.hand_pos), drag, self._last_ik_err))

    def _event(self, reason: str, drag: float, before: dict, after: dict,
               detail: Optional[dict] = None) -> None:
        self.trace.events.append(TerminationEvent(
            self.frame_index, self.task, reason, self.t, drag, before, after,
            detail or {}))

    def fail(self, message: str):
        self.trace.error = f"frame {self.frame_index}: {message}"
        raise SkillError(message, self.frame_index, trace=self.trace, world=self.world)

    # -- kinematics --------------------------------------------------------

    def _solve(self, pos, rot, laban_row=None, warm=True):
        try:
            sol = solve_ik_role_division(pos, rot, laban_row, self.robot,
                                         q0=self.q if warm else None)
        except IKError as e:
            self.fail(f"IK failure: {e}")
        self.q = np.array(sol.q)
        self.hand_pos = np.asarray(pos, float)
        self.hand_rot = np.asarray(rot, float)
        self._last_ik_err = sol.pos_err
        return sol

    def transit_to(self, pos, rot) -> None:
        """Free-space repositioning between skills: a fresh IK solve at the
        target pose (no contact-seeking, so no quasi-static stepping)."""
        pos = np.asarray(pos, float)
        dist = float(np.linalg.norm(pos - self.hand_pos))
        self._solve(pos, rot, warm=True)
        self._advance_time(linear=dist)
        self._record(0.0)

    def settle_posture(self, frame: TaskFrame) -> None:
        """Reshape the arm toward the demonstrated Labanotation at the current
        hand pose (the role-division secondary objective)."""
        row = frame.slots.get("first_laban")
        sol = self._solve(self.hand_pos, self.hand_rot, laban_row=row, warm=True)
        self._event_detail_laban = sol.laban_match

    # -- contact mechanics ---------------------------------------------------

    def _held(self):
        return self.world.object(self.held_object) if self.held_object else None

    def _advance_time(self, linear: float = 0.0, angular: float = 0.0):
        self.t += linear / self.config.hand_speed + angular / self.config.angular_speed

    def _check_constraint_step(self):
        if self._constraint is None:
            return
        obj = self._held()
        pose = Pose(self.t, tuple(obj.shape.translation),
                    tuple(map(tuple, obj.shape.rotation)))
        report = check_semantic_constraint([self._constraint_t0, pose], self._constraint)
        if not report.ok:
            self.fail(f"semantic-constraint violation: {report.reason}")

    def move_linear(self, direction, distance: float, stop_on_drag: bool,
                    max_steps: Optional[int] = None) -> tuple[float, float]:
        """Straight-line hand motion in 1 mm quasi-static steps.

        Returns (traveled, final drag).  With stop_on_drag the motion ends at
        contact (object snapped flush to the surface, drag reported); without
        it the motion covers the exact distance and any blocking contact is an
        error.
        """
        d = normalized(direction, "motion direction")
        step = self.config.step_linear
        budget = max_steps or self.config.timeout_steps
        traveled = 0.0
        obj = self._held()
        while traveled < distance - 1e-12:
            if budget <= 0:
                self.fail(f"timeout after {self.config.timeout_steps} steps")
            budget -= 1
            inc = min(step, distance - traveled)
            new_hand = self.hand_pos + d * inc
            drag = 0.0
            if obj is not None and obj.attachment.kind == "free":
                new_obj = new_hand - self.held_offset
                support = None
                for s in self.world.surfaces.values():
                    if s.contains(new_obj[0], new_obj[1]):
                        bottom = new_obj[2] - obj.shape.a[2]
                        if bottom < s.height - 1e-12 and (support is None or s.height > support.height):
                            support = s
                if support is not None:
                    # snap flush to the surface and report the blocking force
                    flush_obj_z = support.height + obj.shape.a[2]
                    delta = flush_obj_z - (self.hand_pos - self.held_offset)[2]
                    if d[2] != 0.0:
                        inc = abs(delta / d[2])
                    new_hand = self.hand_pos + d * inc
                    drag = self.config.drag_magnitude
                    if not stop_on_drag:
                        self.fail(f"unexpected contact with surface {support.name!r}")
            self._advance_time(linear=inc)
            self._solve(new_hand, self.hand_rot)
            if obj is not None and obj.attachment.kind == "free":
                self.world.move_object(obj.name, self.hand_pos - self.held_offset)
                if drag > 0:
                    self._last_contact_surface = support.name
            self._record(drag)
            self._check_constraint_step()
            traveled += inc
            if drag > 0:
                return traveled, drag
        return traveled, 0.0

    def move_mechanism(self, target_value: float, stop_on_drag: bool) -> tuple[float, float]:
        """Drive a grasped hinged/prismatic object toward a mechanism value."""
        obj = self._held()
        att = obj.attachment
        hinged = att.kind == "hinged"
        step = self.config.step_angular if hinged else self.config.step_linear
        budget = self.config.timeout_steps
        value = att.value
        direction = 1.0 if target_value >= value else -1.0
        while abs(target_value - value) > 1e-12:
            if budget <= 0:
                self.fail(f"timeout after {self.config.timeout_steps} steps")
            budget -= 1
            inc = min(step, abs(target_value - value))
            nxt = value + direction * inc
            drag = 0.0
            if nxt > att.limits[1] + 1e-12 or nxt < att.limits[0] - 1e-12:
                nxt = float(np.clip(nxt, att.limits[0], att.limits[1]))
                drag = self.config.drag_magnitude
            self.world.set_mechanism_value(obj.name, nxt)
            new_hand = self.world.mechanism_point_at(obj.name, self.mechanism_zero_hand, nxt)
            if hinged:  # the grip turns with the door
                axis = normalized(att.axis_dir, "axis")
                new_rot = _axis_rotation(axis, nxt) @ self.mechanism_zero_rot
            else:
                new_rot = self.hand_rot
            self._advance_time(angular=inc if hinged else 0.0,
                               linear=0.0 if hinged else inc)
            self._solve(new_hand, new_rot)
            self._record(drag)
            value = nxt
            if drag > 0:
                if not stop_on_drag:
                    self.fail("mechanism blocked before the demonstrated travel")
                return value, drag
        return value, 0.0


# ---------------------------------------------------------------------------
# Skills


@dataclass(frozen=True)
class Skill:
    """Execution module for one task type: a controller emitting hand motion
    from slot hints plus thresholded force feedback, and its termination rule."""

    task: TaskType
    controller: Callable[[SimSession, TaskFrame], tuple[float, str, dict]]
    termination: str  # documented condition, one of "drag_onset" | "target_reached" | ...


def _require(ctx: SimSession, cond: bool, message: str):
    if not cond:
        ctx.fail(f"precondition failed: {message}")


def _slot(ctx: SimSession, frame: TaskFrame, name: str):
    if name not in frame.slots:
        ctx.fail(f"missing slot {name!r}")
    return frame.slots[name]


def _orientation_for_approach(approach: np.ndarray) -> np.ndarray:
    """Hand frame whose tool axis points against the (outward) approach."""
    x = -normalized(approach, "approach")
    up = np.array([0.0, 0.0, 1.0])
    if abs(float(np.dot(x, up))) > 0.99:
        y = np.array([0.0, 1.0, 0.0])
    else:
        y = np.cross(up, x)
        y /= np.linalg.norm(y)
    z = np.cross(x, y)
    return np.column_stack([x, y, z])


def _grasp_controller(ctx: SimSession, frame: TaskFrame):
    obj = ctx.world.object(frame.object_name)
    before = obj.attachment_state()
    closure = frame.slots.get("grasp_closure", ClosureType.PASSIVE_FORCE)
    loc = runtime_localize(ctx.world, frame.object_name, ctx.config.camera, closure,
                           DEFAULT_GRIPPER)
    approach = np.asarray(loc.approach)
    grasp_pos = np.asarray(loc.center) + approach * ctx.config.palm_clearance
    pre_pos = grasp_pos + approach * ctx.config.approach_standoff
    # near-vertical approaches use an exactly vertical palm (wrist singularity
    # sits at tool-down; a degree of approach tilt is not worth fighting it)
    ori_dir = approach
    if abs(float(approach[2])) > math.cos(math.radians(15.0)):
        ori_dir = np.array([0.0, 0.0, math.copysign(1.0, approach[2])])
    rot = _orientation_for_approach(ori_dir)

    ctx.transit_to(pre_pos, rot)
    ctx.settle_posture(frame)
    ctx.move_linear(-approach, float(np.linalg.norm(grasp_pos - pre_pos)),
                    stop_on_drag=False)
    # close the fingers onto the web: fingertip drag terminates the grasp
    obj.held = True
    ctx.held_object = obj.name
    ctx.held_offset = ctx.hand_pos - obj.shape.trans()
    if obj.attachment.kind in ("hinged", "prismatic"):
        # remember the hand's grip point expressed at mechanism value zero
        att = obj.attachment
        axis = normalized(att.axis_dir, "axis")
        if att.kind == "prismatic":
            ctx.mechanism_zero_hand = ctx.hand_pos - axis * att.value
            ctx.mechanism_zero_rot = ctx.hand_rot.copy()
        else:
            anchor = as_vec3(att.axis_point, "axis point")
            R_back = _axis_rotation(axis, -att.value)
            ctx.mechanism_zero_hand = anchor + R_back @ (ctx.hand_pos - anchor)
            ctx.mechanism_zero_rot = R_back @ ctx.hand_rot
    ctx._advance_time(linear=ctx.config.step_linear)
    ctx._record(ctx.config.drag_magnitude)  # fingertip drag from the closing effort
    ctx._event("fingertip_drag", ctx.config.drag_magnitude, before,
               obj.attachment_state(),
               {"closure": closure.value if isinstance(closure, ClosureType) else str(closure),
                "laban_match": getattr(ctx, "_event_detail_laban", {})})


def _release_controller(ctx: SimSession, frame: TaskFrame):
    obj = ctx.world.object(frame.object_name)
    _require(ctx, obj.held and ctx.held_object == obj.name, "object must be held")
    before = obj.attachment_state()
    obj.held = False
    ctx.held_object = None
    if obj.attachment.kind == "free":
        support = ctx.world.surface_below(obj)
        if support is not None and abs(obj.bottom_z() - support.height) <= ctx.config.rest_tolerance:
            obj.attachment.kind = "on_surface"
            obj.attachment.surface = support.name
    d = np.asarray(_slot(ctx, frame, "detach_dir"))
    dist = float(_slot(ctx, frame, "detach_distance"))
    ctx.settle_posture(frame)
    ctx.move_linear(d, dist, stop_on_drag=False)
    ctx._event("released", 0.0, before, obj.attachment_state())


def _pick_controller(ctx: SimSession, frame: TaskFrame):
    obj = ctx.world.object(frame.object_name)
    _require(ctx, obj.held, "object must be in hand")
    _require(ctx, obj.attachment.kind == "on_surface", "object must rest on a surface")
    before = obj.attachment_state()
    obj.attachment.kind = "free"
    obj.attachment.surface = None
    d = np.asarray(_slot(ctx, frame, "detach_dir"))
    dist = float(_slot(ctx, frame, "detach_distance"))
    ctx.settle_posture(frame)
    traveled, drag = ctx.move_linear(d, dist, stop_on_drag=False)
    err = abs(traveled - dist)
    if drag > ctx.config.drag_threshold or err > 1e-3:
        ctx.fail(f"pick did not reach the demonstrated position (err {err:.4f} m)")
    ctx._event("target_reached", 0.0, before, obj.attachment_state(),
               {"traveled": traveled, "position_error": err})


def _place_controller(ctx: SimSession, frame: TaskFrame):
    obj = ctx.world.object(frame.object_name)
    _require(ctx, obj.held, "object must be in hand")
    _require(ctx, obj.attachment.kind == "free", "object must be free to place")
    before = obj.attachment_state()
    d = np.asarray(_slot(ctx, frame, "approach_dir"))
    dist = float(_slot(ctx, frame, "approach_distance"))
    ctx.settle_posture(frame)
    traveled, drag = ctx.move_linear(d, dist + 0.1, stop_on_drag=True,
                                     max_steps=ctx.config.timeout_steps)
    if drag <= ctx.config.drag_threshold:
        ctx.fail("no drag force onset: nothing under the object to place it on")
    surface = getattr(ctx, "_last_contact_surface", None)
    obj.attachment.kind = "on_surface"
    obj.attachment.surface = surface
    ctx._event("drag_onset", drag, before, obj.attachment_state(),
               {"surface": surface, "traveled": traveled})


def _stg12_controller(ctx: SimSession, frame: TaskFrame):
    obj = ctx.world.object(frame.object_name)
    _require(ctx, obj.held, "object must be in hand")
    before = obj.attachment_state()
    waypoint = np.asarray(_slot(ctx, frame, "waypoint"), float)
    spec = frame.slots.get("constraint")
    constraint = constraint_from_dict(spec) if spec else Ping((0.0, 0.0, 1.0))
    ctx._constraint = constraint
    ctx._constraint_t0 = Pose(ctx.t, tuple(obj.shape.translation),
                              tuple(map(tuple, obj.shape.rotation)))
    ctx.settle_posture(frame)
    to_wp = waypoint - ctx.hand_pos
    dist = float(np.linalg.norm(to_wp))
    if dist > 1e-9:
        ctx.move_linear(to_wp, dist, stop_on_drag=False)
    ctx._constraint = None
    err = float(np.linalg.norm(waypoint - ctx.hand_pos))
    if err > 1e-3:
        ctx.fail(f"waypoint not reached (err {err:.4f} m)")
    ctx._event("waypoint_reached", 0.0, before, obj.attachment_state())


def _mechanism_open_controller(rotational: bool):
    def controller(ctx: SimSession, frame: TaskFrame):
        obj = ctx.world.object(frame.object_name)
        kind = "hinged" if rotational else "prismatic"
        _require(ctx, obj.held, "object must be held")
        _require(ctx, obj.attachment.kind == kind, f"object must be {kind}")
        _require(ctx, obj.attachment.at_lower_limit(), "mechanism must start closed")
        before = obj.attachment_state()
        dist = float(_slot(ctx, frame, "detach_distance"))
        if rotational:
            anchor = as_vec3(obj.attachment.axis_point, "axis point")
            axis = normalized(obj.attachment.axis_dir, "axis")
            rel = ctx.hand_pos - anchor
            radius = float(np.linalg.norm(rel - np.dot(rel, axis) * axis))
            if radius < 1e-6:
                ctx.fail("hand sits on the hinge axis")
            delta = 2.0 * math.asin(min(1.0, dist / (2.0 * radius)))
        else:
            delta = dist
        target = obj.attachment.value + delta
        ctx.settle_posture(frame)
        value, drag = ctx.move_mechanism(target, stop_on_drag=False)
        if drag > ctx.config.drag_threshold:
            ctx.fail("mechanism blocked before the demonstrated travel")
        ctx._event("target_reached", 0.0, before, obj.attachment_state(),
                   {"value": value})
    return controller


def _mechanism_close_controller(rotational: bool):
    def controller(ctx: SimSession, frame: TaskFrame):
        obj = ctx.world.object(frame.object_name)
        kind = "hinged" if rotational else "prismatic"
        _require(ctx, obj.held, "object must be held")
        _require(ctx, obj.attachment.kind == kind, f"object must be {kind}")
        _require(ctx, not obj.attachment.at_lower_limit(), "mechanism already closed")
        before = obj.attachment_state()
        ctx.settle_posture(frame)
        value, drag = ctx.move_mechanism(obj.attachment.limits[0] - 0.1,
                                         stop_on_drag=True)
        if drag <= ctx.config.drag_threshold:
            ctx.fail("no drag onset at the mechanism stop")
        ctx._event("drag_onset", drag, before, obj.attachment_state(),
                   {"value": value})
    return controller


SKILLS: dict[TaskType, Skill] = {
    TaskType.GRASP: Skill(TaskType.GRASP, _grasp_controller, "fingertip_drag"),
    TaskType.RELEASE: Skill(TaskType.RELEASE, _release_controller, "released"),
    TaskType.PTG11: Skill(TaskType.PTG11, _pick_controller, "target_reached"),
    TaskType.PTG13: Skill(TaskType.PTG13, _place_controller, "drag_onset"),
    TaskType.STG12: Skill(TaskType.STG12, _stg12_controller, "waypoint_reached"),
    TaskType.PTG31: Skill(TaskType.PTG31, _mechanism_open_controller(False), "target_reached"),
    TaskType.PTG33: Skill(TaskType.PTG33, _mechanism_close_controller(False), "drag_onset"),
    TaskType.PTG51: Skill(TaskType.PTG51, _mechanism_open_controller(True), "target_reached"),
    TaskType.PTG53: Skill(TaskType.PTG53, _mechanism_close_controller(True), "drag_onset"),
}


def run_program(program: GMRProgram, world: WorldState, robot: RobotSpec,
                config: SimConfig = SimConfig()) -> tuple[ExecutionTrace, WorldState]:
    """Execute a validated program; halts on the first error with the partial
    trace attached to the raised SkillError."""
    ctx = SimSession(world.copy(), robot, config)
    ctx.trace.provenance = program.provenance
    ctx._record(0.0)
    for idx, frame in enumerate(program.frames):
        skill = SKILLS.get(frame.task)
        if skill is None:
            raise SkillError(f"no skill registered for {frame.task.value}", idx,
                             trace=ctx.trace, world=ctx.world)
        ctx.frame_index = idx
        ctx.task = frame.task.value
        skill.controller(ctx, frame)
    return ctx.trace, ctx.world


# ---------------------------------------------------------------------------
# Post-condition verification


@dataclass(frozen=True)
class FrameVerdict:
    frame_index: int
    task: str
    status: str  # "pass" | "fail" | "not-executed"
    detail: str = ""


@dataclass(frozen=True)
class VerificationReport:
    verdicts: tuple[FrameVerdict, ...]

    @property
    def ok(self) -> bool:
        return all(v.status == "pass" for v in self.verdicts)


def verify_postconditions(trace: ExecutionTrace, program: GMRProgram,
                          registry=DEFAULT_REGISTRY) -> VerificationReport:
    """Re-derive each executed frame's before/after contact-state classes from
    the recorded world attachments and check them against the registry."""
    verdicts = []
    for idx, frame in enumerate(program.frames):
        event = trace.event_for(idx)
        if event is None:
            verdicts.append(FrameVerdict(idx, frame.task.value, "not-executed"))
            continue
        entry = registry.entry(frame.task)
        if entry.before is None or entry.after is None:
            verdicts.append(FrameVerdict(idx, frame.task.value, "pass",
                                         "no registered transition"))
            continue
        motion = entry.motion if entry.motion is not MotionKind.SEMANTIC \
            else MotionKind.TRANSLATION
        before = attachment_class(event.before_attachment, motion)
        after = attachment_class(event.after_attachment, motion)
        ok = (before, after) == (entry.before, entry.after)
        if ok and entry.motion is not MotionKind.SEMANTIC:
            named = classify_transition(before, after, entry.motion, registry)
            ok = named is frame.task
        verdicts.append(FrameVerdict(
            idx, frame.task.value, "pass" if ok else "fail",
            f"{before.value} -> {after.value} (expected "
            f"{entry.before.value} -> {entry.after.value})"))
    return VerificationReport(tuple(verdicts))
