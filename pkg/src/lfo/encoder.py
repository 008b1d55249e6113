"""Task encoder: segment a demonstration at pauses, recognize tasks from the
instruction events, run the slot-filling daemons, and emit a validated program.

Recordings are files, not live sensor streams; see lfo.fixtures for the
synthetic-recording generator used to build test material.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from .contact import TaskType
from .errors import (
    GrammarError,
    InvalidInputError,
    ProgramFormatError,
    SegmentationError,
    UnrecognizedInstructionError,
)
from .laban import (
    ActivitySignal,
    SkeletonFrame,
    activity_from_frames,
    columns_by_name,
    detect_pauses,
    digitize_direction,
)
from .taskmodel import (
    DEFAULT_LEXICON,
    GMRProgram,
    LexiconEntry,
    MatchResult,
    TaskFrame,
    Violation,
    instantiate_frame,
    match_instruction,
    run_daemons,
    validate_gmr,
)

RECORDING_VERSION = 1
# spoken instructions are assigned to segments by maximal overlap of this
# nominal utterance window with the segment span
UTTERANCE_WINDOW = 1.0


@dataclass(frozen=True)
class RecordingFrame:
    timestamp: float
    joints: Mapping[str, tuple[float, float, float]]
    hand: tuple[float, float, float]


@dataclass(frozen=True)
class DemonstrationRecording:
    """One stop-and-go teaching session: skeleton + hand motion, an activity
    channel (signal or raw grayscale frames), timed instructions, and
    annotated object tracks."""

    frames: tuple[RecordingFrame, ...]
    instructions: tuple[tuple[float, str], ...]
    activity: Optional[ActivitySignal] = None
    activity_frames: Optional[tuple] = None
    object_tracks: Mapping[str, tuple[tuple[float, tuple[float, float, float]], ...]] = field(
        default_factory=dict)
    actor: str = "right"
    recording_id: str = ""

    def __post_init__(self):
        if not self.frames:
            raise InvalidInputError("recording has no frames")
        ts = [f.timestamp for f in self.frames]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise InvalidInputError("frame timestamps must be strictly increasing")
        if not self.instructions:
            raise InvalidInputError("recording has no instructions")
        if self.activity is None and self.activity_frames is None:
            raise InvalidInputError("recording needs an activity channel")

    @property
    def t_start(self) -> float:
        return self.frames[0].timestamp

    @property
    def t_end(self) -> float:
        return self.frames[-1].timestamp

    def activity_signal(self) -> ActivitySignal:
        """Precomputed signal wins over raw frames when both are supplied."""
        if self.activity is not None:
            return self.activity
        return activity_from_frames(self.activity_frames)


@dataclass(frozen=True)
class Segment:
    """One task's slice of the recording, bounded by stop timings."""

    index: int
    t_start: float
    t_end: float
    instruction: str
    recording: DemonstrationRecording

    def __post_init__(self):
        if self.t_start >= self.t_end:
            raise InvalidInputError("segment must have t_start < t_end")

    def frames(self) -> list[RecordingFrame]:
        return [f for f in self.recording.frames
                if self.t_start - 1e-9 <= f.timestamp <= self.t_end + 1e-9]

    def hand_track(self) -> tuple[np.ndarray, np.ndarray]:
        fr = self.frames()
        if not fr:
            raise InvalidInputError(f"segment {self.index} has no frames")
        return (np.array([f.timestamp for f in fr]),
                np.array([f.hand for f in fr]))

    def hand_at(self, t: float) -> np.ndarray:
        times, hands = self.hand_track()
        return np.array([np.interp(t, times, hands[:, k]) for k in range(3)])

    def object_at(self, name: str, t: float) -> np.ndarray:
        track = self.recording.object_tracks.get(name)
        if not track:
            raise InvalidInputError(f"no object track for {name!r}")
        times = np.array([p[0] for p in track])
        pos = np.array([p[1] for p in track])
        return np.array([np.interp(t, times, pos[:, k]) for k in range(3)])

    def laban_row(self, t: float, actor: str) -> dict[str, str]:
        """Digitized arm posture (column -> direction token) at time t."""
        fr = self.frames()
        if not fr:
            raise InvalidInputError(f"segment {self.index} has no skeleton frames")
        frame = min(fr, key=lambda f: abs(f.timestamp - t))
        columns = columns_by_name([f"{actor}-elbow", f"{actor}-wrist"])
        sk = SkeletonFrame(frame.timestamp, frame.joints)
        row = {}
        for col in columns:
            v = sk.joint(col.distal) - sk.joint(col.proximal)
            n = float(np.linalg.norm(v))
            if n < 1e-9:
                raise InvalidInputError(f"zero-length limb for column {col.name!r}")
            row[col.name] = digitize_direction(v / n).token
        return row

    def purpose_tag(self) -> Optional[str]:
        return None  # purpose is not annotated in recordings; affordance is by object


def segment_demonstration(rec: DemonstrationRecording) -> list[Segment]:
    """Bound segments at the detected stop timings and assign instructions.

    The video segmentation is authoritative; each instruction is assigned to
    the segment its utterance window overlaps most (ties to the earlier
    segment).  Segment count must equal instruction count.
    """
    signal = rec.activity_signal()
    pauses = [rec.t_start + p for p in detect_pauses(signal)]
    if len(pauses) != len(rec.instructions):
        raise SegmentationError(
            f"{len(pauses)} pauses vs {len(rec.instructions)} instructions"
        )
    bounds = [rec.t_start] + pauses
    spans = list(zip(bounds, bounds[1:]))

    assignment: dict[int, tuple[float, str]] = {}
    for t, phrase in rec.instructions:
        best_i, best_ov = None, -1.0
        for i, (s0, s1) in enumerate(spans):
            ov = min(s1, t + UTTERANCE_WINDOW) - max(s0, t)
            if ov > best_ov + 1e-12:
                best_i, best_ov = i, ov
        if best_i in assignment:
            raise SegmentationError(
                f"instructions at {assignment[best_i][0]} s and {t} s both map to segment {best_i}"
            )
        assignment[best_i] = (t, phrase)
    if len(assignment) != len(spans):
        missing = [i for i in range(len(spans)) if i not in assignment]
        raise SegmentationError(f"segments {missing} received no instruction")

    return [
        Segment(i, s0, s1, assignment[i][1], rec)
        for i, (s0, s1) in enumerate(spans)
    ]


def extract_skill_parameters(segment: Segment, task: TaskType,
                             frame: TaskFrame) -> TaskFrame:
    """Fill the frame's slots from its segment (delegates to the daemons)."""
    return run_daemons(frame, segment)


@dataclass(frozen=True)
class EncodeResult:
    program: GMRProgram
    violations: tuple[Violation, ...]
    segments: tuple[Segment, ...]
    matches: tuple[MatchResult, ...]


def encode_draft(rec: DemonstrationRecording,
                 lexicon: Sequence[LexiconEntry] = DEFAULT_LEXICON) -> EncodeResult:
    """Run the full pipeline without raising on grammar violations.

    Ambiguous instructions keep their top candidate and carry a pending-review
    marker instead of being silently resolved.
    """
    segments = segment_demonstration(rec)
    frames: list[TaskFrame] = []
    matches: list[MatchResult] = []
    object_name: Optional[str] = None
    for seg in segments:
        try:
            m = match_instruction(seg.instruction, lexicon)
        except UnrecognizedInstructionError as e:
            raise UnrecognizedInstructionError(f"segment {seg.index}: {e}")
        matches.append(m)
        obj = m.object_name or object_name
        if obj is None:
            raise UnrecognizedInstructionError(
                f"segment {seg.index}: instruction names no object and none is in context"
            )
        if m.task is TaskType.GRASP or object_name is None:
            object_name = obj
        frame = instantiate_frame(m.task, obj, rec.actor)
        if m.ambiguous:
            frame = replace(frame, pending_review=(
                "ambiguous instruction: " + " / ".join(t.value for t in m.candidates),
            ))
        frame = extract_skill_parameters(seg, m.task, frame)
        frames.append(frame)
    program = GMRProgram(tuple(frames), rec.actor,
                         frames[0].object_name if frames else "",
                         provenance=rec.recording_id)
    violations = tuple(validate_gmr(program.frames))
    return EncodeResult(program, violations, tuple(segments), tuple(matches))


def encode(rec: DemonstrationRecording,
           lexicon: Sequence[LexiconEntry] = DEFAULT_LEXICON) -> GMRProgram:
    """Strict encoding: raises GrammarError when the draft violates the grammar."""
    result = encode_draft(rec, lexicon)
    if result.violations:
        raise GrammarError(result.violations)
    return result.program


# ---------------------------------------------------------------------------
# Recording file format (JSON)


def recording_to_dict(rec: DemonstrationRecording) -> dict:
    doc = {
        "version": RECORDING_VERSION,
        "kind": "demonstration-recording",
        "id": rec.recording_id,
        "actor": rec.actor,
        "frames": [
            {
                "t": f.timestamp,
                "joints": {k: list(v) for k, v in sorted(f.joints.items())},
                "hand": list(f.hand),
            }
            for f in rec.frames
        ],
        "instructions": [{"t": t, "phrase": p} for t, p in rec.instructions],
        "object_tracks": {
            name: [{"t": t, "pos": list(p)} for t, p in track]
            for name, track in sorted(rec.object_tracks.items())
        },
    }
    if rec.activity is not None:
        doc["activity"] = {
            "sample_rate": rec.activity.sample_rate,
            "samples": list(rec.activity.samples),
        }
    if rec.activity_frames is not None:
        doc["activity_frames"] = [np.asarray(f).tolist() for f in rec.activity_frames]
    return doc


def recording_from_dict(doc: dict) -> DemonstrationRecording:
    if not isinstance(doc, dict) or doc.get("kind") != "demonstration-recording":
        raise ProgramFormatError("not a demonstration-recording document", "kind")
    if doc.get("version") != RECORDING_VERSION:
        raise ProgramFormatError(f"unsupported version {doc.get('version')!r}", "version")
    frames = tuple(
        RecordingFrame(
            float(f["t"]),
            {k: tuple(map(float, v)) for k, v in f["joints"].items()},
            tuple(map(float, f["hand"])),
        )
        for f in doc.get("frames", [])
    )
    instructions = tuple((float(i["t"]), str(i["phrase"]))
                         for i in doc.get("instructions", []))
    activity = None
    if "activity" in doc:
        activity = ActivitySignal(tuple(map(float, doc["activity"]["samples"])),
                                  float(doc["activity"]["sample_rate"]))
    activity_frames = None
    if "activity_frames" in doc:
        activity_frames = tuple(np.asarray(f, float) for f in doc["activity_frames"])
    tracks = {
        name: tuple((float(e["t"]), tuple(map(float, e["pos"]))) for e in track)
        for name, track in doc.get("object_tracks", {}).items()
    }
    return DemonstrationRecording(
        frames=frames,
        instructions=instructions,
        activity=activity,
        activity_frames=activity_frames,
        object_tracks=tracks,
        actor=doc.get("actor", "right"),
        recording_id=doc.get("id", ""),
    )


def load_recording(path) -> DemonstrationRecording:
    with open(path, "r", encoding="utf-8") as fh:
        return recording_from_dict(json.load(fh))


def save_recording(rec: DemonstrationRecording, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(recording_to_dict(rec), fh, indent=2, sort_keys=True)
        fh.write("\n")
