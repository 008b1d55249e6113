"""Task models: Minsky-style frames with skill-parameter slots and daemons,
the grasp-manipulate*-release grammar, the instruction lexicon, and the
machine-independent program serialization.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from .contact import (
    DEFAULT_REGISTRY,
    ContactStateClass,
    MotionKind,
    TaskRegistry,
    TaskType,
)
from .errors import InvalidInputError, ProgramFormatError, SlotFillError
from .geometry import normalized
from .grasp import ClosureType, select_closure
from .laban import LabanDirection

PROGRAM_VERSION = 1

MANIPULATION_TASKS = frozenset({
    TaskType.PTG11, TaskType.PTG13, TaskType.PTG31, TaskType.PTG33,
    TaskType.PTG51, TaskType.PTG53, TaskType.STG12,
})
# door/drawer operations may legitimately end while still holding the handle
OPEN_ENDED_TASKS = frozenset({
    TaskType.PTG31, TaskType.PTG33, TaskType.PTG51, TaskType.PTG53,
})

# Slot schema / daemon list per task type.  Daemon identifiers name the
# slot-filling procedures run against a demonstration segment.
SLOT_SCHEMA: Mapping[TaskType, tuple[str, ...]] = {
    TaskType.GRASP: ("first_laban", "last_laban", "initial_position",
                     "approach_dir", "approach_distance", "grasp_closure"),
    TaskType.RELEASE: ("first_laban", "last_laban", "detach_dir", "detach_distance"),
    TaskType.PTG11: ("first_laban", "last_laban", "initial_position",
                     "detach_dir", "detach_distance"),
    TaskType.PTG13: ("first_laban", "last_laban", "approach_dir", "approach_distance"),
    TaskType.PTG31: ("first_laban", "last_laban", "detach_dir", "detach_distance"),
    TaskType.PTG33: ("first_laban", "last_laban", "approach_dir", "approach_distance"),
    TaskType.PTG51: ("first_laban", "last_laban", "detach_dir", "detach_distance"),
    TaskType.PTG53: ("first_laban", "last_laban", "approach_dir", "approach_distance"),
    TaskType.STG12: ("first_laban", "last_laban", "waypoint"),
}

_DIRECTION_SLOTS = ("approach_dir", "detach_dir")
_DISTANCE_SLOTS = ("approach_distance", "detach_distance")
_LABAN_SLOTS = ("first_laban", "last_laban")
_POINT_SLOTS = ("initial_position", "waypoint")
_OPTIONAL_SLOTS = ("constraint",)  # STG12 may carry a semantic constraint spec


@dataclass(frozen=True)
class TaskFrame:
    """One instantiated task model.

    transition is the registered (before, after) contact-state pair, kept for
    debugging/display only; slots map slot names to typed values.
    """

    task: TaskType
    actor: str
    object_name: str
    transition: Optional[tuple[ContactStateClass, ContactStateClass]]
    motion: MotionKind
    slots: Mapping[str, object] = field(default_factory=dict)
    daemons: tuple[str, ...] = ()
    pending_review: tuple[str, ...] = ()

    def with_slots(self, **values) -> "TaskFrame":
        merged = dict(self.slots)
        merged.update(values)
        return replace(self, slots=merged)

    def missing_slots(self) -> tuple[str, ...]:
        return tuple(s for s in SLOT_SCHEMA.get(self.task, ()) if s not in self.slots)


@dataclass(frozen=True)
class GMRProgram:
    """A validated grasp-manipulate*-release operation on one object."""

    frames: tuple[TaskFrame, ...]
    actor: str
    object_name: str
    provenance: str = ""


def instantiate_frame(task: TaskType, object_name: str, actor: str,
                      registry: TaskRegistry = DEFAULT_REGISTRY) -> TaskFrame:
    """Empty frame for a registered task, transition pair and daemons attached."""
    if actor not in ("left", "right"):
        raise InvalidInputError(f"actor must be 'left' or 'right', got {actor!r}")
    entry = registry.entry(task)
    transition = None
    if entry.before is not None and entry.after is not None:
        transition = (entry.before, entry.after)
    return TaskFrame(
        task=task,
        actor=actor,
        object_name=object_name,
        transition=transition,
        motion=entry.motion,
        slots={},
        daemons=SLOT_SCHEMA.get(task, ()),
    )


# ---------------------------------------------------------------------------
# Daemons


def _window_direction(segment, at_start: bool) -> tuple[np.ndarray, float]:
    """Motion direction over the window immediately after the segment start or
    immediately before its end (0.5 s or 15 frames, whichever is shorter), plus
    the net displacement magnitude over the whole segment."""
    times, hands = segment.hand_track()
    if len(times) < 2:
        raise SlotFillError("direction", "segment has fewer than 2 hand samples")
    frame_dt = (times[-1] - times[0]) / max(1, len(times) - 1)
    w = min(0.5, 15 * frame_dt)
    if at_start:
        t0, t1 = times[0], min(times[0] + w, times[-1])
    else:
        t0, t1 = max(times[-1] - w, times[0]), times[-1]
    p0 = segment.hand_at(t0)
    p1 = segment.hand_at(t1)
    d = p1 - p0
    if np.linalg.norm(d) < 1e-9:
        raise SlotFillError("direction", "no hand motion in the daemon window")
    net = float(np.linalg.norm(hands[-1] - hands[0]))
    return d / np.linalg.norm(d), net


def _laban_row_tokens(segment, at_start: bool, actor: str) -> dict[str, str]:
    row = segment.laban_row(segment.t_start if at_start else segment.t_end, actor)
    return row


def _daemon_first_laban(frame, segment, neighbors):
    return {"first_laban": _laban_row_tokens(segment, True, frame.actor)}


def _daemon_last_laban(frame, segment, neighbors):
    return {"last_laban": _laban_row_tokens(segment, False, frame.actor)}


def _daemon_initial_position(frame, segment, neighbors):
    p = segment.object_at(frame.object_name, segment.t_start)
    return {"initial_position": tuple(float(x) for x in p)}


def _daemon_approach(frame, segment, neighbors):
    d, net = _window_direction(segment, at_start=False)
    return {"approach_dir": tuple(float(x) for x in d), "approach_distance": net}


def _daemon_detach(frame, segment, neighbors):
    d, net = _window_direction(segment, at_start=True)
    return {"detach_dir": tuple(float(x) for x in d), "detach_distance": net}


def _daemon_waypoint(frame, segment, neighbors):
    _, hands = segment.hand_track()
    return {"waypoint": tuple(float(x) for x in hands[-1])}


def _daemon_grasp_closure(frame, segment, neighbors):
    closure = select_closure(frame.object_name, segment.purpose_tag())
    return {"grasp_closure": closure}


_DAEMON_TABLE = {
    "first_laban": _daemon_first_laban,
    "last_laban": _daemon_last_laban,
    "initial_position": _daemon_initial_position,
    "approach_dir": _daemon_approach,
    "approach_distance": _daemon_approach,
    "detach_dir": _daemon_detach,
    "detach_distance": _daemon_detach,
    "waypoint": _daemon_waypoint,
    "grasp_closure": _daemon_grasp_closure,
}


def run_daemons(frame: TaskFrame, segment, neighbors: Sequence = ()) -> TaskFrame:
    """Fill the frame's slots by observing its demonstration segment.

    Directions come from hand motion immediately after the start (detach) or
    immediately before the end (approach); Labanotation rows from the boundary
    postures; positions from the annotated object track.  `neighbors` is
    reserved for daemons that need adjacent segments.
    """
    values: dict[str, object] = {}
    for daemon in frame.daemons:
        fn = _DAEMON_TABLE.get(daemon)
        if fn is None:
            raise SlotFillError(daemon, "no daemon registered")
        try:
            values.update(fn(frame, segment, neighbors))
        except SlotFillError as e:
            raise SlotFillError(daemon, str(e))
        except InvalidInputError as e:
            raise SlotFillError(daemon, f"missing or invalid input channel: {e}")
    filled = frame.with_slots(**values)
    missing = filled.missing_slots()
    if missing:
        raise SlotFillError(missing[0], "daemon left a required slot empty")
    return filled


# ---------------------------------------------------------------------------
# Grammar validation


@dataclass(frozen=True)
class Violation:
    frame_index: int  # -1 for program-level violations
    message: str

    def __str__(self):
        where = f"frame {self.frame_index}" if self.frame_index >= 0 else "program"
        return f"{where}: {self.message}"


def validate_gmr(frames: Sequence[TaskFrame]) -> list[Violation]:
    """Grammar: Grasp (Manipulation)* Release, door/drawer tails may omit the
    Release; one actor and one object throughout; slot schemas satisfied."""
    violations: list[Violation] = []
    if not frames:
        return [Violation(-1, "empty program: expected Grasp (Manipulation)* Release")]
    if frames[0].task is not TaskType.GRASP:
        violations.append(Violation(0, f"program must begin with Grasp, got {frames[0].task.label}"))
    last = frames[-1]
    if last.task is not TaskType.RELEASE and last.task not in OPEN_ENDED_TASKS:
        violations.append(Violation(
            len(frames) - 1,
            f"program must end with Release (or a door/drawer task), got {last.task.label}",
        ))
    for i, f in enumerate(frames):
        if i > 0 and f.task is TaskType.GRASP:
            violations.append(Violation(i, "Grasp only allowed as the first frame"))
        if f.task is TaskType.RELEASE and i != len(frames) - 1:
            violations.append(Violation(i, "Release only allowed as the last frame"))
        if 0 < i < len(frames) - 1 and f.task not in MANIPULATION_TASKS:
            if f.task not in (TaskType.GRASP, TaskType.RELEASE):
                violations.append(Violation(i, f"{f.task.label} is not a manipulation task"))
        if f.actor != frames[0].actor:
            violations.append(Violation(i, f"actor switch: {f.actor!r} vs {frames[0].actor!r}"))
        if f.object_name != frames[0].object_name:
            violations.append(Violation(
                i, f"object switch mid-GMR: {f.object_name!r} vs {frames[0].object_name!r}"))
        for slot in f.missing_slots():
            violations.append(Violation(i, f"required slot {slot!r} is empty"))
        for slot in _DISTANCE_SLOTS:
            v = f.slots.get(slot)
            if v is not None and (not isinstance(v, (int, float)) or v < 0):
                violations.append(Violation(i, f"slot {slot!r} must be a distance >= 0"))
        for slot in _DIRECTION_SLOTS:
            v = f.slots.get(slot)
            if v is not None:
                arr = np.asarray(v, float)
                if arr.shape != (3,) or abs(np.linalg.norm(arr) - 1.0) > 1e-6:
                    violations.append(Violation(i, f"slot {slot!r} must be a unit 3-vector"))
    return violations


# ---------------------------------------------------------------------------
# Instruction lexicon


@dataclass(frozen=True)
class LexiconEntry:
    """Phrase templates for one task; `<object>` captures the object name."""

    task: TaskType
    patterns: tuple[str, ...]
    max_edit_distance: int = 2

    def __post_init__(self):
        if not self.patterns:
            raise InvalidInputError("lexicon entry needs at least one pattern")


@dataclass(frozen=True)
class MatchResult:
    task: TaskType
    object_name: Optional[str]
    distance: int = 0
    extras: Mapping[str, str] = field(default_factory=dict)
    candidates: tuple[TaskType, ...] = ()  # non-empty = ambiguous

    @property
    def ambiguous(self) -> bool:
        return len(self.candidates) > 1


DEFAULT_LEXICON = (
    LexiconEntry(TaskType.GRASP, (
        "grasp the <object>", "grasp <object>", "grab the <object>",
        "hold the <object>", "take the <object>",
    )),
    LexiconEntry(TaskType.PTG11, (
        "pick up the <object>", "pick the <object> up", "pick up <object>",
        "pick it up", "lift the <object>",
    )),
    LexiconEntry(TaskType.PTG13, (
        "place the <object> on the <surface>", "place the <object>", "place it",
        "put the <object> down", "put the <object> on the <surface>", "set it down",
    )),
    LexiconEntry(TaskType.STG12, (
        "bring it carefully", "bring the <object> carefully",
        "bring carefully the <object>", "carry the <object>", "carry it",
        "bring the <object>", "move the <object> carefully",
    )),
    LexiconEntry(TaskType.PTG31, (
        "open the drawer", "pull open the <object>", "slide open the <object>",
        "pull out the <object>",
    )),
    LexiconEntry(TaskType.PTG33, (
        "close the drawer", "push the <object> shut", "slide the <object> closed",
        "push in the <object>",
    )),
    LexiconEntry(TaskType.PTG51, (
        # literal patterns carry no <object>, so the frame inherits the
        # grasped object and the GMR stays on one object
        "open the refrigerator", "open the fridge", "open the door",
        "swing open the <object>", "open it",
    )),
    LexiconEntry(TaskType.PTG53, (
        "close the refrigerator", "close the fridge", "close the door",
        "swing shut the <object>", "close it",
    )),
    LexiconEntry(TaskType.RELEASE, (
        "release the <object>", "release <object>", "release it",
        "let go of the <object>", "let it go",
    )),
)


def _normalize_phrase(phrase: str) -> str:
    return re.sub(r"[^a-z0-9<> ]+", "", phrase.strip().lower())


def _pattern_regex(pattern: str) -> re.Pattern:
    parts = re.split(r"(<[a-z]+>)", _normalize_phrase(pattern))
    out = []
    for p in parts:
        if re.fullmatch(r"<[a-z]+>", p):
            out.append(f"(?P<{p[1:-1]}>.+?)")
        elif p:
            out.append(re.escape(p))
    return re.compile("".join(out) + "$")


def _levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _fuzzy_distance(phrase: str, pattern: str) -> tuple[int, Optional[str]]:
    """Minimum edit distance over bindings of `<object>` to phrase token spans."""
    norm = _normalize_phrase(pattern)
    if "<" not in norm:
        return _levenshtein(phrase, norm), None
    tokens = phrase.split()
    best, best_obj = 10 ** 9, None
    names = re.findall(r"<([a-z]+)>", norm)
    obj_name = "object" if "object" in names else names[0]
    for i in range(len(tokens)):
        for j in range(i + 1, len(tokens) + 1):
            span = " ".join(tokens[i:j])
            filled = norm
            for nm in names:
                filled = filled.replace(f"<{nm}>", span if nm == obj_name else span, 1)
            d = _levenshtein(phrase, filled)
            if d < best:
                best, best_obj = d, span
    return best, best_obj


def match_instruction(phrase: str, lexicon: Sequence[LexiconEntry] = DEFAULT_LEXICON,
                      ) -> MatchResult:
    """Template match with edit-distance fallback.

    Exact pattern matches win outright; otherwise the closest pattern within
    its entry's edit-distance bound is used.  Two different tasks at the same
    minimal distance yield an ambiguous result listing the candidates.
    """
    from .errors import UnrecognizedInstructionError

    norm = _normalize_phrase(phrase)
    exact: list[tuple[TaskType, Optional[str], Mapping[str, str]]] = []
    for entry in lexicon:
        for pattern in entry.patterns:
            m = _pattern_regex(pattern).match(norm)
            if m:
                groups = {k: v.strip() for k, v in m.groupdict().items()}
                exact.append((entry.task, groups.get("object"), groups))
                break
    if exact:
        tasks = {t for t, _, _ in exact}
        if len(tasks) > 1:
            return MatchResult(exact[0][0], exact[0][1], 0, exact[0][2],
                               tuple(sorted(tasks, key=lambda t: t.value)))
        t, obj, groups = exact[0]
        return MatchResult(t, obj, 0, groups)

    scored: list[tuple[int, TaskType, Optional[str]]] = []
    for entry in lexicon:
        best_d, best_obj = 10 ** 9, None
        for pattern in entry.patterns:
            d, obj = _fuzzy_distance(norm, pattern)
            if d < best_d:
                best_d, best_obj = d, obj
        if best_d <= entry.max_edit_distance:
            scored.append((best_d, entry.task, best_obj))
    if not scored:
        raise UnrecognizedInstructionError(f"no lexicon match for {phrase!r}")
    scored.sort(key=lambda s: (s[0], s[1].value))
    top = [s for s in scored if s[0] == scored[0][0]]
    if len({t for _, t, _ in top}) > 1:
        return MatchResult(top[0][1], top[0][2], top[0][0], {},
                           tuple(t for _, t, _ in top))
    return MatchResult(top[0][1], top[0][2], top[0][0])


# ---------------------------------------------------------------------------
# Serialization


def _slot_to_json(name: str, value):
    if name in _LABAN_SLOTS:
        return dict(value)
    if name in _DIRECTION_SLOTS or name in _POINT_SLOTS:
        return [float(x) for x in value]
    if name == "grasp_closure":
        return value.value if isinstance(value, ClosureType) else str(value)
    if name in _DISTANCE_SLOTS:
        return float(value)
    return value


def _slot_from_json(name: str, value, path: str):
    try:
        if name in _LABAN_SLOTS:
            out = {}
            for col, tok in dict(value).items():
                LabanDirection.from_token(tok)  # validates
                out[col] = tok
            return out
        if name in _DIRECTION_SLOTS:
            return tuple(float(x) for x in normalized(value, name))
        if name in _POINT_SLOTS:
            v = [float(x) for x in value]
            if len(v) != 3:
                raise InvalidInputError("expected 3 components")
            return tuple(v)
        if name == "grasp_closure":
            return ClosureType(value)
        if name in _DISTANCE_SLOTS:
            d = float(value)
            if d < 0:
                raise InvalidInputError("distance must be >= 0")
            return d
        return value
    except (ValueError, TypeError, InvalidInputError) as e:
        raise ProgramFormatError(f"bad value for slot {name!r}: {e}", path)


def program_to_dict(program: GMRProgram) -> dict:
    frames = []
    for f in program.frames:
        frames.append({
            "task": f.task.value,
            "motion": f.motion.value,
            "transition": [c.value for c in f.transition] if f.transition else None,
            "slots": {k: _slot_to_json(k, v) for k, v in sorted(f.slots.items())},
            "pending_review": list(f.pending_review),
        })
    return {
        "version": PROGRAM_VERSION,
        "kind": "gmr-program",
        "actor": program.actor,
        "object": program.object_name,
        "provenance": program.provenance,
        "frames": frames,
    }


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def serialize_program(program: GMRProgram, strict: bool = True) -> str:
    """Canonical JSON text; refuses grammar-violating programs when strict."""
    if strict:
        violations = validate_gmr(program.frames)
        if violations:
            from .errors import GrammarError

            raise GrammarError(violations)
    return canonical_json(program_to_dict(program))


def parse_program(text: str, registry: TaskRegistry = DEFAULT_REGISTRY) -> GMRProgram:
    """Parse and schema-check a serialized program (path-precise errors)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProgramFormatError(f"not valid JSON: {e}", "$")
    return program_from_dict(doc, registry)


def program_from_dict(doc, registry: TaskRegistry = DEFAULT_REGISTRY) -> GMRProgram:
    if not isinstance(doc, dict):
        raise ProgramFormatError("expected a JSON object", "$")
    if doc.get("version") != PROGRAM_VERSION:
        raise ProgramFormatError(f"unsupported version {doc.get('version')!r}", "version")
    if doc.get("kind") != "gmr-program":
        raise ProgramFormatError(f"unexpected kind {doc.get('kind')!r}", "kind")
    actor = doc.get("actor")
    if actor not in ("left", "right"):
        raise ProgramFormatError(f"actor must be left/right, got {actor!r}", "actor")
    obj = doc.get("object")
    if not isinstance(obj, str) or not obj:
        raise ProgramFormatError("object must be a non-empty string", "object")
    frames_doc = doc.get("frames")
    if not isinstance(frames_doc, list):
        raise ProgramFormatError("frames must be a list", "frames")
    frames = []
    for i, fd in enumerate(frames_doc):
        path = f"frames[{i}]"
        if not isinstance(fd, dict):
            raise ProgramFormatError("frame must be an object", path)
        try:
            task = TaskType(fd.get("task"))
        except ValueError:
            raise ProgramFormatError(f"unknown task {fd.get('task')!r}", f"{path}.task")
        frame = instantiate_frame(task, obj, actor, registry)
        stored = fd.get("transition")
        expected = [c.value for c in frame.transition] if frame.transition else None
        if stored != expected:
            raise ProgramFormatError(
                f"transition {stored!r} does not match the registry ({expected!r})",
                f"{path}.transition")
        slots_doc = fd.get("slots", {})
        if not isinstance(slots_doc, dict):
            raise ProgramFormatError("slots must be an object", f"{path}.slots")
        known = set(SLOT_SCHEMA.get(task, ())) | set(_OPTIONAL_SLOTS)
        slots = {}
        for k, v in slots_doc.items():
            if k not in known:
                raise ProgramFormatError(f"unknown slot {k!r} for {task.value}",
                                         f"{path}.slots.{k}")
            slots[k] = _slot_from_json(k, v, f"{path}.slots.{k}")
        pending = tuple(fd.get("pending_review", []))
        frames.append(replace(frame, slots=slots, pending_review=pending))
    return GMRProgram(tuple(frames), actor, obj, doc.get("provenance", ""))
