"""Task decoder: role-division IK, skills, quasi-static execution, and
post-condition verification against the contact-state registry."""

from .localize import LocalizeResult, runtime_localize
from .robot import (
    BUNDLED_ROBOTS,
    CART7,
    DESK6,
    IKSolution,
    Joint,
    RobotSpec,
    fk,
    fk_points,
    jacobian,
    robot_from_dict,
    robot_to_dict,
    solve_ik_role_division,
)
from .skills import (
    SKILLS,
    FrameVerdict,
    SimConfig,
    SimSession,
    Skill,
    VerificationReport,
    run_program,
    verify_postconditions,
)
from .trace import ExecutionTrace, TerminationEvent, TraceStep, parse_trace
from .world import (
    Attachment,
    Surface,
    WorldObject,
    WorldState,
    attachment_class,
    attachment_cone,
    world_from_dict,
    world_to_dict,
)

__all__ = [
    "BUNDLED_ROBOTS", "CART7", "DESK6", "IKSolution", "Joint", "RobotSpec",
    "fk", "fk_points", "jacobian", "robot_from_dict", "robot_to_dict",
    "solve_ik_role_division", "SKILLS", "FrameVerdict", "SimConfig",
    "SimSession", "Skill", "VerificationReport", "run_program",
    "verify_postconditions", "ExecutionTrace", "TerminationEvent", "TraceStep",
    "parse_trace", "Attachment", "Surface", "WorldObject", "WorldState",
    "attachment_class", "attachment_cone", "world_from_dict", "world_to_dict",
    "LocalizeResult", "runtime_localize",
]
