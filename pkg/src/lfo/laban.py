"""Labanotation encoding and decoding.

Body-part directions are quantized into 8 azimuth bins x 5 zenith levels at
pause keyframes, and scores decode back into joint targets for any limb
lengths.  The world frame is right-handed with +z up and +x the demonstrator's
forward, so "Right" is the -y half-space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.ndimage import uniform_filter
from scipy.signal import butter, filtfilt

from .errors import InvalidInputError, ScoreParseError
from .geometry import as_vec3, unit

AZIMUTH_TOKENS = ("F", "RF", "R", "RB", "B", "LB", "L", "LF")
AZIMUTH_NAMES = (
    "forward",
    "right-forward",
    "right",
    "right-back",
    "back",
    "left-back",
    "left",
    "left-forward",
)
# Zenith levels 0..4: straight up, high (45 deg), level, low (135 deg), straight down.
ZENITH_TOKENS = ("H", "HH", "M", "LL", "L")
ZENITH_NAMES = ("place high", "high", "level", "low", "place low")
PLACE_TOKEN = "PL"

_ZENITH_EDGES = (22.5, 67.5, 112.5, 157.5)


@dataclass(frozen=True)
class LabanDirection:
    """One quantized direction: azimuth bin 0..7, zenith level 0..4.

    place_flag marks the vertical bins (levels 0 and 4) where azimuth is
    undefined and normalized to 0.
    """

    azimuth_bin: int
    zenith_level: int
    place_flag: bool = False

    def __post_init__(self):
        if not 0 <= self.azimuth_bin <= 7:
            raise InvalidInputError(f"azimuth_bin {self.azimuth_bin} out of range 0..7")
        if not 0 <= self.zenith_level <= 4:
            raise InvalidInputError(f"zenith_level {self.zenith_level} out of range 0..4")
        if self.place_flag:
            if self.zenith_level not in (0, 4):
                raise InvalidInputError("place directions must be at zenith level 0 or 4")
            if self.azimuth_bin != 0:
                raise InvalidInputError("place directions must normalize azimuth_bin to 0")
        elif self.zenith_level in (0, 4):
            raise InvalidInputError("zenith levels 0 and 4 are only representable as place bins")

    @property
    def token(self) -> str:
        if self.place_flag:
            return f"{PLACE_TOKEN}-{ZENITH_TOKENS[self.zenith_level]}"
        return f"{AZIMUTH_TOKENS[self.azimuth_bin]}-{ZENITH_TOKENS[self.zenith_level]}"

    @property
    def label(self) -> str:
        if self.place_flag:
            return ZENITH_NAMES[self.zenith_level]
        return f"{AZIMUTH_NAMES[self.azimuth_bin]} {ZENITH_NAMES[self.zenith_level]}"

    @staticmethod
    def from_token(token: str) -> "LabanDirection":
        parts = token.strip().split("-")
        if len(parts) != 2:
            raise InvalidInputError(f"malformed direction token {token!r}")
        az, zen = parts
        if zen not in ZENITH_TOKENS:
            raise InvalidInputError(f"unknown zenith token {zen!r}")
        level = ZENITH_TOKENS.index(zen)
        if az == PLACE_TOKEN:
            return LabanDirection(0, level, True)
        if az not in AZIMUTH_TOKENS:
            raise InvalidInputError(f"unknown azimuth token {az!r}")
        return LabanDirection(AZIMUTH_TOKENS.index(az), level, False)


PLACE_HIGH = LabanDirection(0, 0, True)
PLACE_LOW = LabanDirection(0, 4, True)


def all_directions() -> tuple[LabanDirection, ...]:
    """The 26 representable bins: 8 azimuths x 3 mid levels, plus the two poles."""
    dirs = [PLACE_HIGH, PLACE_LOW]
    for level in (1, 2, 3):
        for az in range(8):
            dirs.append(LabanDirection(az, level))
    return tuple(dirs)


def digitize_direction(v) -> LabanDirection:
    """Quantize a unit vector into a Labanotation direction bin.

    Zenith bins have centers at 0/45/90/135/180 deg with midpoint boundaries;
    within 22.5 deg of vertical the azimuth is undefined and the direction
    collapses to Place High / Place Low.  Exact boundary angles resolve to the
    lower bin index.
    """
    a = unit(v, "direction")
    zen = math.degrees(math.acos(float(np.clip(a[2], -1.0, 1.0))))
    if zen <= _ZENITH_EDGES[0]:
        return PLACE_HIGH
    if zen > _ZENITH_EDGES[3]:
        return PLACE_LOW
    level = 1
    for edge in _ZENITH_EDGES[1:3]:
        if zen > edge:
            level += 1
    phi = math.degrees(math.atan2(-a[1], a[0])) % 360.0
    shifted = (phi + 22.5) / 45.0
    bin_idx = int(math.floor(shifted))
    if shifted == bin_idx:  # exact sector boundary: take the lower bin index
        left = (bin_idx - 1) % 8
        bin_idx = min(bin_idx % 8, left)
    return LabanDirection(bin_idx % 8, level)


def canonical_direction(d: LabanDirection) -> np.ndarray:
    """Bin-center unit vector; inverse of digitize_direction on every bin."""
    if d.place_flag:
        return np.array([0.0, 0.0, 1.0 if d.zenith_level == 0 else -1.0])
    theta = math.radians(45.0 * d.zenith_level)
    phi = math.radians(45.0 * d.azimuth_bin)
    s = math.sin(theta)
    return np.array([s * math.cos(phi), -s * math.sin(phi), math.cos(theta)])


def bin_circumradius(d: LabanDirection) -> float:
    """Maximum angle (radians) between the bin center and any point of the bin.

    The bin is a spherical cap for the poles and a zenith/azimuth rectangle
    otherwise; the maximum is attained at the corners.
    """
    if d.place_flag:
        return math.radians(22.5)
    theta_c = math.radians(45.0 * d.zenith_level)
    worst = 0.0
    for dth in (-22.5, 22.5):
        for dph in (-22.5, 22.5):
            th = theta_c + math.radians(dth)
            cosg = math.cos(th) * math.cos(theta_c) + math.sin(th) * math.sin(
                theta_c
            ) * math.cos(math.radians(abs(dph)))
            worst = max(worst, math.acos(max(-1.0, min(1.0, cosg))))
    return worst


# ---------------------------------------------------------------------------
# Scores


@dataclass(frozen=True)
class LabanSymbol:
    """Direction of one body part held for a duration (seconds)."""

    column: str
    direction: LabanDirection
    duration: float

    def __post_init__(self):
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise InvalidInputError(f"symbol duration must be > 0, got {self.duration}")


@dataclass(frozen=True)
class LabanRow:
    time: float
    symbols: tuple[LabanSymbol, ...]

    def symbol(self, column: str) -> LabanSymbol:
        for s in self.symbols:
            if s.column == column:
                return s
        raise KeyError(column)

    @property
    def duration(self) -> float:
        return max(s.duration for s in self.symbols)


@dataclass(frozen=True)
class LabanScore:
    """Time-ordered keyframe rows over a fixed column set.

    Durations are stored in seconds; beat_duration is display metadata only.
    """

    columns: tuple[str, ...]
    rows: tuple[LabanRow, ...]
    beat_duration: float = 1.0

    def __post_init__(self):
        if not self.columns:
            raise InvalidInputError("score needs at least one column")
        prev = -math.inf
        for row in self.rows:
            if row.time <= prev:
                raise InvalidInputError("score rows must be strictly increasing in time")
            prev = row.time
            cols = tuple(s.column for s in row.symbols)
            if cols != self.columns:
                raise InvalidInputError(
                    f"row at t={row.time} covers columns {cols}, expected {self.columns}"
                )


# Column registry: column name -> (proximal joint, distal joint).
@dataclass(frozen=True)
class LabanColumn:
    name: str
    proximal: str
    distal: str


DEFAULT_COLUMNS = (
    LabanColumn("right-elbow", "right-shoulder", "right-elbow"),
    LabanColumn("right-wrist", "right-elbow", "right-wrist"),
    LabanColumn("left-elbow", "left-shoulder", "left-elbow"),
    LabanColumn("left-wrist", "left-elbow", "left-wrist"),
)


def columns_by_name(names: Iterable[str]) -> tuple[LabanColumn, ...]:
    table = {c.name: c for c in DEFAULT_COLUMNS}
    out = []
    for n in names:
        if n not in table:
            raise InvalidInputError(f"unknown laban column {n!r}")
        out.append(table[n])
    return tuple(out)


# ---------------------------------------------------------------------------
# Skeletons and activity


@dataclass(frozen=True)
class SkeletonFrame:
    """Named joint positions (meters) at one timestamp, +z up / +x forward."""

    timestamp: float
    joints: Mapping[str, tuple[float, float, float]]

    def joint(self, name: str) -> np.ndarray:
        try:
            p = self.joints[name]
        except KeyError:
            raise InvalidInputError(f"skeleton frame missing joint {name!r}")
        return as_vec3(p, f"joint {name}")


@dataclass(frozen=True)
class ActivitySignal:
    """Non-negative scalar motion-activity series sampled at sample_rate Hz."""

    samples: tuple[float, ...]
    sample_rate: float

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise InvalidInputError("sample_rate must be > 0")
        arr = np.asarray(self.samples, float)
        if arr.size and not np.all(np.isfinite(arr)):
            raise InvalidInputError("activity samples must be finite")


def box_mean_filter(img: np.ndarray, size: int) -> np.ndarray:
    """Moving average over the size x size window clipped at the image border."""
    img = np.asarray(img, float)
    ones = np.ones_like(img)
    # uniform_filter with constant padding gives window *sums* after rescaling;
    # dividing by the filtered counts realizes border-clipped means.
    acc = uniform_filter(img, size=size, mode="constant", cval=0.0) * (size * size)
    cnt = uniform_filter(ones, size=size, mode="constant", cval=0.0) * (size * size)
    return acc / cnt


def activity_from_frames(frames: Sequence[np.ndarray], window: int = 50,
                         sample_rate: float = 30.0) -> ActivitySignal:
    """Brightness-perturbation activity from a grayscale frame sequence.

    Each frame is box-filtered with a window x window moving average; adjacent
    filtered frames are differenced pixel-wise and the mean absolute difference
    becomes one activity sample, so the output has len(frames) - 1 samples.
    """
    if len(frames) < 2:
        raise InvalidInputError("need at least 2 frames")
    shape = np.asarray(frames[0]).shape
    if len(shape) != 2 or shape[0] < window or shape[1] < window:
        raise InvalidInputError(f"frames must be 2D and at least {window}x{window}")
    filtered = []
    for i, f in enumerate(frames):
        arr = np.asarray(f, float)
        if arr.shape != shape:
            raise InvalidInputError(f"frame {i} has shape {arr.shape}, expected {shape}")
        filtered.append(box_mean_filter(arr, window))
    samples = [float(np.mean(np.abs(b - a))) for a, b in zip(filtered, filtered[1:])]
    return ActivitySignal(tuple(samples), sample_rate)


def _remove_outliers_mad(x: np.ndarray, threshold: float = 3.5) -> np.ndarray:
    med = np.median(x)
    mad = np.median(np.abs(x - med))
    if mad == 0:
        return x
    z = 0.6745 * (x - med) / mad
    bad = np.abs(z) > threshold
    if not np.any(bad):
        return x
    out = x.copy()
    idx = np.arange(len(x))
    good = ~bad
    if not np.any(good):
        return x
    out[bad] = np.interp(idx[bad], idx[good], x[good])
    return out


def detect_pauses(signal: ActivitySignal, cutoff_hz: float = 0.5,
                  minimum_fraction: float = 0.5,
                  mad_threshold: float = 3.5) -> list[float]:
    """Pause timestamps: MAD outlier removal, zero-phase low-pass, then strict
    local minima below minimum_fraction of the filtered signal's median.

    Sample i is timestamped at i / sample_rate.
    """
    rate = signal.sample_rate
    if rate < 2 * cutoff_hz * 2:
        raise InvalidInputError(f"sample_rate {rate} Hz too low for a {cutoff_hz} Hz cutoff")
    x = np.asarray(signal.samples, float)
    b, a = butter(2, cutoff_hz / (rate / 2.0))
    padlen = 3 * max(len(a), len(b))
    if len(x) <= padlen:
        raise InvalidInputError(
            f"signal of {len(x)} samples is shorter than the filter warm-up ({padlen})"
        )
    x = _remove_outliers_mad(x, mad_threshold)
    y = filtfilt(b, a, x)
    threshold = minimum_fraction * float(np.median(y))
    pauses = []
    for i in range(1, len(y) - 1):
        if y[i] < y[i - 1] and y[i] < y[i + 1] and y[i] < threshold:
            pauses.append(i / rate)
    return pauses


# ---------------------------------------------------------------------------
# Encoding and decoding


def _frame_at(frames: Sequence[SkeletonFrame], t: float) -> SkeletonFrame:
    best = min(frames, key=lambda f: abs(f.timestamp - t))
    return best


def encode_skeleton(frames: Sequence[SkeletonFrame], pauses: Sequence[float],
                    columns: Sequence[LabanColumn] = DEFAULT_COLUMNS,
                    beat_duration: float = 1.0,
                    start_time: float | None = None) -> LabanScore:
    """Digitize limb directions at each pause into a score.

    Each symbol's duration is the interval since the previous pause; the first
    row's duration is measured from the start of the sequence (start_time, or
    the first frame's timestamp when not given — pass 0.0 when re-encoding
    decoded keyframes, whose first frame sits at the first keyframe time).
    """
    if not frames:
        raise InvalidInputError("no skeleton frames")
    if not pauses:
        raise InvalidInputError("no pauses")
    t0 = frames[0].timestamp if start_time is None else start_time
    t_end = frames[-1].timestamp
    prev = t0
    rows = []
    for p in pauses:
        if p <= prev or p > t_end + 1e-9:
            raise InvalidInputError(
                f"pause at {p} s outside the frame time range ({t0}..{t_end}) or not increasing"
            )
        frame = _frame_at(frames, p)
        duration = p - prev
        symbols = []
        for col in columns:
            v = frame.joint(col.distal) - frame.joint(col.proximal)
            n = float(np.linalg.norm(v))
            if n < 1e-9:
                raise InvalidInputError(
                    f"zero-length limb for column {col.name!r} at t={p}"
                )
            symbols.append(LabanSymbol(col.name, digitize_direction(v / n), duration))
        rows.append(LabanRow(p, tuple(symbols)))
        prev = p
    return LabanScore(tuple(c.name for c in columns), tuple(rows), beat_duration)


def decode_score(score: LabanScore, limb_lengths: Mapping[str, float],
                 shoulder_anchor) -> list[SkeletonFrame]:
    """Keyframed joint targets from a score.

    Per row, the elbow target is shoulder + canonical(elbow symbol) * upper
    length and the wrist target continues from the elbow.  Keyframe times are
    cumulative row durations; motion between keyframes is linear interpolation
    of the joint targets.

    shoulder_anchor is a single 3D point, or a mapping side -> point when the
    score covers both arms.
    """
    sides = sorted({c.split("-")[0] for c in score.columns})
    if isinstance(shoulder_anchor, Mapping):
        anchors = {s: as_vec3(p, f"{s} shoulder") for s, p in shoulder_anchor.items()}
    else:
        anchors = {s: as_vec3(shoulder_anchor, "shoulder") for s in sides}
    for side in sides:
        if side not in anchors:
            raise InvalidInputError(f"missing shoulder anchor for side {side!r}")
    for col in score.columns:
        if col not in limb_lengths:
            raise InvalidInputError(f"missing limb length for column {col!r}")
        if limb_lengths[col] <= 0:
            raise InvalidInputError(f"limb length for {col!r} must be > 0")

    out = []
    t = 0.0
    for row in score.rows:
        t += row.duration
        joints: dict[str, tuple[float, float, float]] = {}
        for side in sides:
            shoulder = anchors[side]
            joints[f"{side}-shoulder"] = tuple(shoulder)
            elbow_col, wrist_col = f"{side}-elbow", f"{side}-wrist"
            pos = shoulder
            if elbow_col in score.columns:
                d = canonical_direction(row.symbol(elbow_col).direction)
                pos = pos + d * limb_lengths[elbow_col]
                joints[elbow_col] = tuple(pos)
            if wrist_col in score.columns:
                d = canonical_direction(row.symbol(wrist_col).direction)
                joints[wrist_col] = tuple(pos + d * limb_lengths[wrist_col])
        out.append(SkeletonFrame(t, joints))
    return out


# ---------------------------------------------------------------------------
# Text serialization
#
# Format:
#   columns: right-elbow,right-wrist
#   beat: 1.0
#   t=0.55 | right-elbow=PL-L:0.55 | right-wrist=F-LL:0.55


def serialize_score(score: LabanScore) -> str:
    lines = ["columns: " + ",".join(score.columns), f"beat: {score.beat_duration!r}"]
    for row in score.rows:
        cells = [f"t={row.time!r}"]
        for sym in row.symbols:
            cells.append(f"{sym.column}={sym.direction.token}:{sym.duration!r}")
        lines.append(" | ".join(cells))
    return "\n".join(lines) + "\n"


def parse_score(text: str) -> LabanScore:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("columns:"):
        raise ScoreParseError("expected 'columns:' header", 1)
    columns = tuple(c.strip() for c in lines[0].split(":", 1)[1].split(",") if c.strip())
    if not columns:
        raise ScoreParseError("empty column list", 1)
    beat = 1.0
    body_start = 1
    if len(lines) > 1 and lines[1].startswith("beat:"):
        try:
            beat = float(lines[1].split(":", 1)[1])
        except ValueError:
            raise ScoreParseError("malformed beat value", 2)
        body_start = 2
    rows = []
    for ln, line in enumerate(lines[body_start:], start=body_start + 1):
        if not line.strip():
            continue
        cells = [c.strip() for c in line.split("|")]
        if not cells[0].startswith("t="):
            raise ScoreParseError("row must start with 't=<sec>'", ln)
        try:
            t = float(cells[0][2:])
        except ValueError:
            raise ScoreParseError(f"malformed time {cells[0][2:]!r}", ln)
        symbols = []
        for cell in cells[1:]:
            if "=" not in cell or ":" not in cell:
                raise ScoreParseError(f"malformed symbol cell {cell!r}", ln)
            col, rest = cell.split("=", 1)
            tok, _, dur_text = rest.rpartition(":")
            col = col.strip()
            if col not in columns:
                raise ScoreParseError(f"unknown column {col!r}", ln)
            try:
                direction = LabanDirection.from_token(tok)
            except InvalidInputError as e:
                raise ScoreParseError(str(e), ln)
            try:
                dur = float(dur_text)
            except ValueError:
                raise ScoreParseError(f"malformed duration {dur_text!r}", ln)
            if dur <= 0:
                raise ScoreParseError(f"non-positive duration {dur}", ln)
            symbols.append(LabanSymbol(col, direction, dur))
        found = tuple(s.column for s in symbols)
        if found != columns:
            raise ScoreParseError(f"row covers {found}, expected {columns}", ln)
        rows.append(LabanRow(t, tuple(symbols)))
    try:
        return LabanScore(columns, tuple(rows), beat)
    except InvalidInputError as e:
        raise ScoreParseError(str(e), len(lines))
