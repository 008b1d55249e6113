"""Review sessions: one per recording file, with an append-only edit log.

A session's draft program is always a pure function of (recording, edit log):
the recording is encoded fresh and the edits are replayed in order, so
replaying the log on a fresh session reproduces the same draft byte for byte.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from ..contact import TaskType
from ..encoder import EncodeResult, encode_draft, load_recording
from ..errors import InvalidInputError
from ..laban import columns_by_name, detect_pauses, encode_skeleton, serialize_score, SkeletonFrame
from ..taskmodel import (
    GMRProgram,
    SLOT_SCHEMA,
    _slot_from_json,
    _slot_to_json,
    canonical_json,
    instantiate_frame,
    program_to_dict,
    run_daemons,
    validate_gmr,
)

RECORDING_SUFFIX = ".rec.json"
EDITS_SUFFIX = ".edits.jsonl"
PROGRAM_SUFFIX = ".program.json"
TRACE_SUFFIX = ".trace.ndjson"


@dataclass
class SessionState:
    session_id: str
    recording_path: Path
    result: EncodeResult
    program: GMRProgram
    edits: list[dict]

    @property
    def violations(self):
        return validate_gmr(self.program.frames)

    @property
    def pending(self):
        return [(i, list(f.pending_review)) for i, f in enumerate(self.program.frames)
                if f.pending_review]


class SessionStore:
    """Scans a data directory for recordings; single writer per session."""

    def __init__(self, data_dir):
        self.data_dir = Path(data_dir)
        if not self.data_dir.is_dir():
            raise InvalidInputError(f"data directory {self.data_dir} does not exist")
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()
        self._cache: dict[str, tuple[tuple, SessionState]] = {}

    def lock(self, session_id: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def session_ids(self) -> list[str]:
        return sorted(p.name[: -len(RECORDING_SUFFIX)]
                      for p in self.data_dir.glob(f"*{RECORDING_SUFFIX}"))

    def _paths(self, session_id: str) -> dict[str, Path]:
        base = self.data_dir / session_id
        return {
            "recording": base.with_name(base.name + RECORDING_SUFFIX),
            "edits": base.with_name(base.name + EDITS_SUFFIX),
            "program": base.with_name(base.name + PROGRAM_SUFFIX),
            "trace": base.with_name(base.name + TRACE_SUFFIX),
        }

    def _load_edits(self, path: Path) -> list[dict]:
        if not path.exists():
            return []
        edits = []
        for ln, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            if line.strip():
                try:
                    edits.append(json.loads(line))
                except json.JSONDecodeError as e:
                    raise InvalidInputError(f"{path.name} line {ln}: {e}")
        return edits

    def load(self, session_id: str) -> SessionState:
        paths = self._paths(session_id)
        if not paths["recording"].exists():
            raise KeyError(session_id)
        edits = self._load_edits(paths["edits"])
        fingerprint = (paths["recording"].stat().st_mtime_ns, len(edits))
        cached = self._cache.get(session_id)
        if cached and cached[0] == fingerprint:
            return cached[1]
        recording = load_recording(paths["recording"])
        result = encode_draft(recording)
        program = result.program
        for edit in edits:
            program = apply_edit(program, result, edit)
        state = SessionState(session_id, paths["recording"], result, program, edits)
        self._cache[session_id] = (fingerprint, state)
        return state

    def append_edit(self, session_id: str, edit: dict) -> SessionState:
        state = self.load(session_id)  # validates the session exists
        program = apply_edit(state.program, state.result, edit)  # validates the edit
        paths = self._paths(session_id)
        record = dict(edit)
        record["ts"] = time.time()
        with paths["edits"].open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
        self._cache.pop(session_id, None)
        return self.load(session_id)

    def export(self, session_id: str, force: bool) -> tuple[Optional[dict], str, Path, list[str]]:
        state = self.load(session_id)
        violations = state.violations
        pending = state.pending
        warnings = []
        if violations or pending:
            if not force:
                return None, "", self._paths(session_id)["program"], []
            warnings = [str(v) for v in violations] + [
                f"frame {i}: unresolved review marker: {m}"
                for i, ms in pending for m in ms
            ]
        doc = program_to_dict(state.program)
        if warnings:
            doc["export_warnings"] = warnings
        text = canonical_json(doc)
        path = self._paths(session_id)["program"]
        path.write_text(text, encoding="utf-8")
        return doc, text, path, warnings

    def laban_view(self, session_id: str):
        state = self.load(session_id)
        rec = state.result.segments[0].recording if state.result.segments else None
        if rec is None:
            raise InvalidInputError("session has no segments")
        pauses = [rec.t_start + p for p in detect_pauses(rec.activity_signal())]
        frames = [SkeletonFrame(f.timestamp, f.joints) for f in rec.frames]
        cols = [c for c in ("right-elbow", "right-wrist", "left-elbow", "left-wrist")
                if all(j in rec.frames[0].joints for j in (c.split("-")[0] + "-shoulder", c))]
        score = encode_skeleton(frames, pauses, columns_by_name(cols))
        return score, serialize_score(score)

    def trace_path(self, session_id: str) -> Path:
        return self._paths(session_id)["trace"]


def apply_edit(program: GMRProgram, result: EncodeResult, edit: dict) -> GMRProgram:
    """Apply one edit-log record: optional task change (slots re-derived from
    the segment's daemons), then slot patches.  Any edit to a frame clears its
    pending-review markers: a human decision resolves them."""
    if not isinstance(edit, dict):
        raise InvalidInputError("edit must be an object")
    try:
        index = int(edit["frame"])
    except (KeyError, TypeError, ValueError):
        raise InvalidInputError("edit needs an integer 'frame'")
    if not 0 <= index < len(program.frames):
        raise InvalidInputError(f"frame index {index} out of range")
    frame = program.frames[index]
    patch = edit.get("patch", {})
    if not isinstance(patch, dict):
        raise InvalidInputError("edit 'patch' must be an object")

    new_task = patch.get("task")
    if new_task is not None:
        try:
            task = TaskType(new_task)
        except ValueError:
            raise InvalidInputError(f"unknown task {new_task!r}")
        if task is not frame.task:
            fresh = instantiate_frame(task, frame.object_name, frame.actor)
            segment = result.segments[index]
            frame = run_daemons(fresh, segment)
    slot_patch = patch.get("slots", {})
    if not isinstance(slot_patch, dict):
        raise InvalidInputError("'slots' patch must be an object")
    values = {}
    known = set(SLOT_SCHEMA.get(frame.task, ())) | {"constraint"}
    for name, value in slot_patch.items():
        if name not in known:
            raise InvalidInputError(f"unknown slot {name!r} for task {frame.task.value}")
        values[name] = _slot_from_json(name, value, f"frames[{index}].slots.{name}")
    frame = frame.with_slots(**values)
    frame = replace(frame, pending_review=())
    frames = list(program.frames)
    frames[index] = frame
    return replace(program, frames=tuple(frames))


def frame_payload(index: int, frame) -> dict:
    return {
        "index": index,
        "task": frame.task.value,
        "label": frame.task.label,
        "transition": [c.value for c in frame.transition] if frame.transition else None,
        "transition_codes": [c.code for c in frame.transition] if frame.transition else None,
        "slots": {k: _slot_to_json(k, v) for k, v in sorted(frame.slots.items())},
        "pending_review": list(frame.pending_review),
    }
