"""Synthetic demonstration recordings and matching simulation worlds.

Real capture hardware is out of scope, so fixture recordings are generated:
stop-and-go hand paths with eased legs, raised-cosine activity bumps abutting
at the stop timings, a two-link arm skeleton, and annotated object tracks.
The four bundled demo scenes (box, shelf, garbage, fridge) drive both the
encoder fixtures and the decoder worlds from one set of scene constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .contact import TaskType
from .encoder import DemonstrationRecording, RecordingFrame
from .laban import ActivitySignal

RATE = 30.0
SHOULDER_R = np.array([0.0, -0.20, 1.25])
SHOULDER_L = np.array([0.0, 0.20, 1.25])
UPPER_LEN, FORE_LEN = 0.35, 0.40


def _ease(u: float) -> float:
    return 0.5 * (1.0 - math.cos(math.pi * u))


@dataclass(frozen=True)
class SegmentPlan:
    """One task's share of the demo: spoken phrase, duration, and hand path."""

    phrase: str
    duration: float
    legs: tuple[tuple[float, ...], ...]  # waypoints; first is the entry point
    arc: Optional[dict] = None  # {"center","radius","start_deg","end_deg","z"}

    def hand_at(self, u: float) -> np.ndarray:
        """Hand position at normalized time u in [0, 1]."""
        if self.arc is not None:
            a = self.arc
            ang = math.radians(a["start_deg"] + (a["end_deg"] - a["start_deg"]) * _ease(u))
            cx, cy = a["center"]
            return np.array([cx + a["radius"] * math.sin(ang),
                             cy - a["radius"] * math.cos(ang),
                             a["z"]]) + np.asarray(a.get("offset", (0.0, 0.0, 0.0)))
        pts = [np.asarray(p, float) for p in self.legs]
        if len(pts) == 1:
            return pts[0]
        n_legs = len(pts) - 1
        s = min(u * n_legs, n_legs - 1e-9)
        i = int(s)
        return pts[i] + (pts[i + 1] - pts[i]) * _ease(s - i)


def _elbow_for(shoulder: np.ndarray, wrist: np.ndarray) -> np.ndarray:
    """Elbow-down two-link solution (upper/forearm lengths fixed)."""
    d_vec = wrist - shoulder
    d = float(np.linalg.norm(d_vec))
    d = min(max(d, abs(UPPER_LEN - FORE_LEN) + 1e-3), UPPER_LEN + FORE_LEN - 1e-3)
    u = d_vec / np.linalg.norm(d_vec)
    a = (UPPER_LEN ** 2 - FORE_LEN ** 2 + d ** 2) / (2 * d)
    h = math.sqrt(max(UPPER_LEN ** 2 - a ** 2, 1e-8))
    n = np.cross(u, np.array([0.0, 0.0, 1.0]))
    if np.linalg.norm(n) < 1e-6:
        n = np.cross(u, np.array([1.0, 0.0, 0.0]))
    n /= np.linalg.norm(n)
    w = np.cross(n, u)
    if w[2] > 0:
        w = -w
    return shoulder + a * u + h * w


def _skeleton_joints(hand: np.ndarray) -> dict:
    elbow = _elbow_for(SHOULDER_R, hand)
    return {
        "right-shoulder": tuple(SHOULDER_R),
        "right-elbow": tuple(elbow),
        "right-wrist": tuple(hand),
        "left-shoulder": tuple(SHOULDER_L),
        "left-elbow": tuple(SHOULDER_L + np.array([0.0, 0.02, -0.32])),
        "left-wrist": tuple(SHOULDER_L + np.array([0.0, 0.04, -0.70])),
    }


@dataclass(frozen=True)
class DemoCase:
    name: str
    recording: DemonstrationRecording
    planted_stops: tuple[float, ...]
    expected_tasks: tuple[TaskType, ...]
    world: Optional[dict] = None
    object_name: str = ""


def build_recording(name: str, plans: Sequence[SegmentPlan], object_name: str,
                    object_initial: Sequence[float], grasp_offset: Sequence[float],
                    release_index: Optional[int], rate: float = RATE,
                    rest: Sequence[float] = (0.35, -0.10, 0.95)) -> DemoCase:
    """Assemble a recording from segment plans.

    The activity channel is one raised-cosine bump per segment plus a trailing
    half bump (the demonstrator relaxing), so every stop timing is a V-shaped
    valley between bumps.  The object track follows the hand (minus the grasp
    offset) from the end of the grasp segment until the release segment starts.
    """
    stops = []
    t = 0.0
    for p in plans:
        t += p.duration
        stops.append(t)
    relax = 2.5
    t_total = stops[-1] + relax / 2.0

    n = int(round(t_total * rate)) + 1
    times = np.arange(n) / rate

    bounds = [0.0] + stops
    activity = _bump_train(times, bounds, np.ones(len(plans)), relax)

    def hand_at(t_abs: float) -> np.ndarray:
        if t_abs >= stops[-1]:  # relax: drift back toward rest
            u = min((t_abs - stops[-1]) / relax, 1.0)
            end = plans[-1].hand_at(1.0)
            return end + (np.asarray(rest) - end) * 0.3 * _ease(u)
        for (a, b), plan in zip(zip(bounds, bounds[1:]), plans):
            if t_abs <= b:
                return plan.hand_at((t_abs - a) / (b - a))
        return plans[-1].hand_at(1.0)

    grasp_end = stops[0]
    follow_end = bounds[release_index] if release_index is not None else stops[-1]
    obj0 = np.asarray(object_initial, float)
    off = np.asarray(grasp_offset, float)

    frames = []
    track = []
    for t_abs in times:
        hand = hand_at(float(t_abs))
        frames.append(RecordingFrame(float(t_abs), _skeleton_joints(hand), tuple(hand)))
        if t_abs <= grasp_end:
            obj = obj0
        elif t_abs <= follow_end:
            obj = hand - off
        else:
            obj = hand_at(follow_end) - off
        track.append((float(t_abs), tuple(float(x) for x in obj)))

    instructions = tuple((round(a + 0.15, 3), p.phrase) for a, p in zip(bounds, plans))
    rec = DemonstrationRecording(
        frames=tuple(frames),
        instructions=instructions,
        activity=ActivitySignal(tuple(activity), rate),
        object_tracks={object_name: tuple(track)},
        actor="right",
        recording_id=name,
    )
    return DemoCase(name, rec, tuple(stops), (), None, object_name)


def _bump_train(times: np.ndarray, bounds: Sequence[float], amps: Sequence[float],
                relax: float) -> np.ndarray:
    """Raised-cosine bumps abutting at the stop timings (V-shaped zero valleys).

    The trailing relax bump is truncated at its peak so the signal ends rising;
    the final stop stays an interior minimum and the tail adds no spurious one.
    """
    x = np.zeros_like(times)
    for i, (a, b) in enumerate(zip(bounds, bounds[1:])):
        mask = (times >= a) & (times < b)
        x[mask] = amps[i] * np.sin(np.pi * (times[mask] - a) / (b - a)) ** 2
    mask = times >= bounds[-1]
    x[mask] = np.sin(np.pi * np.minimum((times[mask] - bounds[-1]) / relax, 0.5)) ** 2
    return x


def _world(surfaces, objects) -> dict:
    return {"version": 1, "kind": "world", "surfaces": surfaces, "objects": objects}


def box_demo() -> DemoCase:
    above = (0.55, -0.10, 0.93)
    grasp = (0.55, -0.10, 0.81)
    lifted = (0.55, -0.10, 0.93)
    over_plate = (0.55, -0.35, 0.93)
    placed = (0.55, -0.35, 0.825)
    plans = [
        SegmentPlan("grasp the box", 2.5, ((0.35, -0.10, 0.95), above, grasp)),
        SegmentPlan("pick up the box", 2.5, (grasp, lifted)),
        SegmentPlan("bring it carefully", 2.5, (lifted, over_plate)),
        SegmentPlan("place the box on the plate", 2.5, (over_plate, placed)),
        SegmentPlan("release the box", 2.5, (placed, (0.55, -0.35, 0.905))),
    ]
    case = build_recording("box_demo", plans, "box",
                           object_initial=(0.55, -0.10, 0.75),
                           grasp_offset=(0.0, 0.0, 0.06),
                           release_index=4)
    world = _world(
        [
            {"name": "table", "height": 0.70, "center": [0.55, -0.10], "size": [0.9, 1.0]},
            {"name": "plate", "height": 0.715, "center": [0.55, -0.35], "size": [0.24, 0.24]},
        ],
        [
            {
                "name": "box",
                "shape": {"a": [0.03, 0.03, 0.05], "e": [0.25, 0.25]},
                "pose": {"position": [0.55, -0.10, 0.75], "rpy_deg": [0, 0, 0]},
                "attachment": {"kind": "on_surface", "surface": "table"},
            }
        ],
    )
    return DemoCase(case.name, case.recording, case.planted_stops,
                    (TaskType.GRASP, TaskType.PTG11, TaskType.STG12,
                     TaskType.PTG13, TaskType.RELEASE), world, "box")


def shelf_demo() -> DemoCase:
    grasp = (0.50, 0.05, 0.83)
    plans = [
        SegmentPlan("grasp the cup", 2.5, ((0.32, -0.05, 0.95), (0.50, 0.05, 0.95), grasp)),
        SegmentPlan("pick up the cup", 2.5, (grasp, (0.50, 0.05, 0.98))),
        SegmentPlan("bring it carefully", 2.5, ((0.50, 0.05, 0.98), (0.50, 0.05, 1.12))),
        SegmentPlan("bring it carefully", 2.5, ((0.50, 0.05, 1.12), (0.50, -0.20, 1.12))),
        SegmentPlan("bring it carefully", 2.5, ((0.50, -0.20, 1.12), (0.50, -0.35, 1.16))),
        SegmentPlan("place the cup", 2.5, ((0.50, -0.35, 1.16), (0.50, -0.35, 1.08))),
        SegmentPlan("release the cup", 2.5, ((0.50, -0.35, 1.08), (0.50, -0.35, 1.15))),
    ]
    case = build_recording("shelf_demo", plans, "cup",
                           object_initial=(0.50, 0.05, 0.76),
                           grasp_offset=(0.0, 0.0, 0.07),
                           release_index=6,
                           rest=(0.32, -0.05, 0.95))
    world = _world(
        [
            {"name": "table", "height": 0.70, "center": [0.50, 0.05], "size": [0.9, 1.0]},
            {"name": "shelf", "height": 0.95, "center": [0.50, -0.35], "size": [0.30, 0.22]},
        ],
        [
            {
                "name": "cup",
                "shape": {"a": [0.035, 0.035, 0.06], "e": [1.0, 0.9]},
                "pose": {"position": [0.50, 0.05, 0.76], "rpy_deg": [0, 0, 0]},
                "attachment": {"kind": "on_surface", "surface": "table"},
            }
        ],
    )
    return DemoCase(case.name, case.recording, case.planted_stops,
                    (TaskType.GRASP, TaskType.PTG11, TaskType.STG12, TaskType.STG12,
                     TaskType.STG12, TaskType.PTG13, TaskType.RELEASE), world, "cup")


def garbage_demo() -> DemoCase:
    grasp = (0.55, 0.05, 0.83)
    over_bin = (0.40, -0.35, 0.95)
    plans = [
        SegmentPlan("grasp the can", 2.5, ((0.35, -0.05, 0.95), (0.55, 0.05, 0.95), grasp)),
        SegmentPlan("pick up the can", 2.5, (grasp, (0.55, 0.05, 0.95))),
        SegmentPlan("bring it carefully", 2.5, ((0.55, 0.05, 0.95), over_bin)),
        SegmentPlan("release the can", 2.5, (over_bin, (0.40, -0.35, 1.03))),
    ]
    case = build_recording("garbage_demo", plans, "can",
                           object_initial=(0.55, 0.05, 0.76),
                           grasp_offset=(0.0, 0.0, 0.07),
                           release_index=3,
                           rest=(0.35, -0.05, 0.95))
    world = _world(
        [
            {"name": "table", "height": 0.70, "center": [0.55, 0.05], "size": [0.7, 0.8]},
        ],
        [
            {
                "name": "can",
                "shape": {"a": [0.03, 0.03, 0.06], "e": [1.0, 1.0]},
                "pose": {"position": [0.55, 0.05, 0.76], "rpy_deg": [0, 0, 0]},
                "attachment": {"kind": "on_surface", "surface": "table"},
            }
        ],
    )
    return DemoCase(case.name, case.recording, case.planted_stops,
                    (TaskType.GRASP, TaskType.PTG11, TaskType.STG12, TaskType.RELEASE),
                    world, "can")


FRIDGE_HINGE = (0.50, 0.25)
FRIDGE_RADIUS = 0.40
FRIDGE_SWING_DEG = 35.0
_HAND_OFFSET = (-0.012, 0.0, 0.0)


def fridge_demo() -> DemoCase:
    handle = (0.50, -0.15, 1.00)
    hand_grasp = tuple(np.asarray(handle) + _HAND_OFFSET)
    plans = [
        SegmentPlan("grasp the handle", 2.5,
                    ((0.30, -0.10, 1.00), (0.40, -0.15, 1.00), hand_grasp)),
        SegmentPlan("open the refrigerator", 2.5, (hand_grasp,),
                    arc={"center": FRIDGE_HINGE, "radius": FRIDGE_RADIUS,
                         "start_deg": 0.0, "end_deg": FRIDGE_SWING_DEG, "z": 1.00,
                         "offset": _HAND_OFFSET}),
    ]
    case = build_recording("fridge_demo", plans, "handle",
                           object_initial=handle,
                           grasp_offset=_HAND_OFFSET,
                           release_index=None,
                           rest=(0.30, -0.10, 1.00))
    world = _world(
        [
            {"name": "floorcab", "height": 0.70, "center": [0.8, 0.0], "size": [0.4, 0.8]},
        ],
        [
            {
                "name": "handle",
                "shape": {"a": [0.012, 0.012, 0.06], "e": [0.3, 0.3]},
                "pose": {"position": [0.50, -0.15, 1.00], "rpy_deg": [0, 0, 0]},
                "attachment": {
                    "kind": "hinged",
                    "axis_point": [FRIDGE_HINGE[0], FRIDGE_HINGE[1], 0.0],
                    "axis_dir": [0, 0, -1],
                    "range_deg": [0.0, 100.0],
                    "angle_deg": 0.0,
                    "face_point": [0.512, -0.15, 1.00],
                    "face_normal": [-1, 0, 0],
                },
            }
        ],
    )
    return DemoCase(case.name, case.recording, case.planted_stops,
                    (TaskType.GRASP, TaskType.PTG51), world, "handle")


DEMOS = {
    "box_demo": box_demo,
    "shelf_demo": shelf_demo,
    "garbage_demo": garbage_demo,
    "fridge_demo": fridge_demo,
}


# ---------------------------------------------------------------------------
# Property-test material


def activity_with_valleys(n_valleys: int, seed: int, rate: float = RATE,
                          ) -> tuple[ActivitySignal, list[float]]:
    """Random bump train with V-shaped valleys at known times."""
    rng = np.random.default_rng(seed)
    durations = rng.choice([2.5, 3.0], size=n_valleys + 1)
    amps = rng.uniform(0.95, 1.05, size=n_valleys + 1)
    bounds = np.concatenate([[0.0], np.cumsum(durations)])
    valleys = [float(b) for b in bounds[1:-1]]
    relax = float(durations[-1])
    n = int(round((bounds[-2] + relax / 2.0) * rate)) + 1
    times = np.arange(n) / rate
    # the final duration serves as the trailing relax bump, truncated mid-top
    x = _bump_train(times, list(bounds[:-1]), amps[:-1], relax)
    return ActivitySignal(tuple(x), rate), valleys


def random_pick_place_case(seed: int) -> DemoCase:
    """Randomized box-style GMR for end-to-end property tests."""
    rng = np.random.default_rng(seed)
    x0 = float(rng.uniform(0.45, 0.60))
    y0 = float(rng.uniform(-0.15, 0.05))
    y1 = float(rng.uniform(-0.40, -0.25))
    rise = float(rng.uniform(0.08, 0.16))
    grasp = (x0, y0, 0.81)
    lifted = (x0, y0, 0.81 + rise)
    over = (x0, y1, 0.81 + rise)
    placed = (x0, y1, 0.822)
    durs = [float(rng.choice([2.5, 3.0])) for _ in range(5)]
    plans = [
        SegmentPlan("grasp the box", durs[0], ((0.35, -0.10, 0.95), (x0, y0, 0.93), grasp)),
        SegmentPlan("pick up the box", durs[1], (grasp, lifted)),
        SegmentPlan("bring it carefully", durs[2], (lifted, over)),
        SegmentPlan("place the box on the plate", durs[3], (over, placed)),
        SegmentPlan("release the box", durs[4], (placed, (x0, y1, 0.90))),
    ]
    case = build_recording(f"random_{seed}", plans, "box",
                           object_initial=(x0, y0, 0.75),
                           grasp_offset=(0.0, 0.0, 0.06),
                           release_index=4)
    return DemoCase(case.name, case.recording, case.planted_stops,
                    (TaskType.GRASP, TaskType.PTG11, TaskType.STG12,
                     TaskType.PTG13, TaskType.RELEASE), None, "box")
