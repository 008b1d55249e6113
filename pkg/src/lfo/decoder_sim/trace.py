"""Execution traces: timestamped robot/hand/drag records plus per-skill
termination events, exportable as newline-delimited JSON."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from ..errors import ProgramFormatError


@dataclass(frozen=True)
class TraceStep:
    t: float
    frame_index: int
    task: str
    q: tuple[float, ...]
    hand_pos: tuple[float, float, float]
    drag: float
    ik_err: float = 0.0  # achieved hand position error (m) at this step

    def to_dict(self) -> dict:
        return {"type": "step", "t": self.t, "frame": self.frame_index,
                "task": self.task, "q": list(self.q),
                "hand": list(self.hand_pos), "drag": self.drag,
                "ik_err": self.ik_err}


@dataclass(frozen=True)
class TerminationEvent:
    frame_index: int
    task: str
    reason: str
    t: float
    drag: float
    before_attachment: dict
    after_attachment: dict
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"type": "event", "frame": self.frame_index, "task": self.task,
                "reason": self.reason, "t": self.t, "drag": self.drag,
                "before": self.before_attachment, "after": self.after_attachment,
                "detail": self.detail}


@dataclass
class ExecutionTrace:
    robot_name: str = ""
    provenance: str = ""
    steps: list[TraceStep] = field(default_factory=list)
    events: list[TerminationEvent] = field(default_factory=list)
    error: Optional[str] = None

    def event_for(self, frame_index: int) -> Optional[TerminationEvent]:
        for e in self.events:
            if e.frame_index == frame_index:
                return e
        return None

    def frame_steps(self, frame_index: int) -> list[TraceStep]:
        return [s for s in self.steps if s.frame_index == frame_index]

    def max_hand_drag(self) -> float:
        return max((s.drag for s in self.steps), default=0.0)

    def export_lines(self) -> str:
        lines = [json.dumps({"type": "meta", "robot": self.robot_name,
                             "provenance": self.provenance, "error": self.error},
                            sort_keys=True)]
        for s in self.steps:
            lines.append(json.dumps(s.to_dict(), sort_keys=True))
        for e in self.events:
            lines.append(json.dumps(e.to_dict(), sort_keys=True))
        return "\n".join(lines) + "\n"


def parse_trace(text: str) -> ExecutionTrace:
    trace = ExecutionTrace()
    for ln, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as e:
            raise ProgramFormatError(f"line {ln}: not valid JSON: {e}", "trace")
        kind = doc.get("type")
        if kind == "meta":
            trace.robot_name = doc.get("robot", "")
            trace.provenance = doc.get("provenance", "")
            trace.error = doc.get("error")
        elif kind == "step":
            trace.steps.append(TraceStep(
                float(doc["t"]), int(doc["frame"]), str(doc["task"]),
                tuple(map(float, doc["q"])), tuple(map(float, doc["hand"])),
                float(doc["drag"]), float(doc.get("ik_err", 0.0))))
        elif kind == "event":
            trace.events.append(TerminationEvent(
                int(doc["frame"]), str(doc["task"]), str(doc["reason"]),
                float(doc["t"]), float(doc["drag"]),
                dict(doc.get("before", {})), dict(doc.get("after", {})),
                dict(doc.get("detail", {}))))
        else:
            raise ProgramFormatError(f"line {ln}: unknown record type {kind!r}", "trace")
    return trace
