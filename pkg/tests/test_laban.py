import math

import numpy as np
import pytest

from lfo.errors import InvalidInputError, ScoreParseError
from lfo import laban
from lfo.laban import (
    ActivitySignal,
    LabanDirection,
    LabanScore,
    LabanRow,
    LabanSymbol,
    SkeletonFrame,
    activity_from_frames,
    all_directions,
    bin_circumradius,
    canonical_direction,
    columns_by_name,
    decode_score,
    detect_pauses,
    digitize_direction,
    encode_skeleton,
    parse_score,
    serialize_score,
)


def test_digitize_pole_cases():
    assert digitize_direction((0, 0, 1)) == laban.PLACE_HIGH
    assert digitize_direction((0, 0, -1)) == laban.PLACE_LOW


def test_digitize_forward_level():
    d = digitize_direction((1, 0, 0))
    assert (d.azimuth_bin, d.zenith_level, d.place_flag) == (0, 2, False)
    assert d.token == "F-M"


def test_digitize_pick_posture_forward_low():
    # right-wrist posture when picking: forward and 45 degrees below level
    s = math.sqrt(2) / 2
    d = digitize_direction((s, 0, -s))
    assert (d.azimuth_bin, d.zenith_level, d.place_flag) == (0, 3, False)
    assert d.label == "forward low"


def test_digitize_right_is_minus_y():
    d = digitize_direction((0, -1, 0))
    assert (d.azimuth_bin, d.zenith_level) == (2, 2)
    assert d.token == "R-M"


def test_digitize_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        digitize_direction((1, 1, 0))
    with pytest.raises(InvalidInputError):
        digitize_direction((np.nan, 0, 0))


def test_canonical_trivial_bins():
    assert np.allclose(canonical_direction(laban.PLACE_HIGH), [0, 0, 1])
    assert np.allclose(canonical_direction(LabanDirection(0, 2)), [1, 0, 0])
    # right low: azimuth 90 deg toward -y, zenith 135 deg
    v = canonical_direction(LabanDirection(2, 3))
    s = math.sqrt(2) / 2
    assert np.allclose(v, [0, -s, -s], atol=1e-12)


def test_round_trip_all_bins():
    bins = all_directions()
    assert len(bins) == 26
    for d in bins:
        assert digitize_direction(canonical_direction(d)) == d


def test_quantization_bound_random_vectors():
    rng = np.random.default_rng(7)
    v = rng.normal(size=(2000, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    for x in v:
        d = digitize_direction(x)
        ang = math.acos(float(np.clip(np.dot(x, canonical_direction(d)), -1, 1)))
        assert ang <= bin_circumradius(d) + 1e-9


def test_mid_zenith_circumradius_below_35_deg():
    for az in range(8):
        assert bin_circumradius(LabanDirection(az, 2)) <= math.radians(35.0)


# ---------------------------------------------------------------------------
# activity


def test_activity_identical_frames_is_zero():
    f = np.zeros((60, 60))
    sig = activity_from_frames([f, f])
    assert sig.samples == (0.0,)


def test_activity_uniform_shift_gives_shift():
    a = np.full((64, 64), 100.0)
    b = a + 10.0
    sig = activity_from_frames([a, b])
    assert sig.samples[0] == pytest.approx(10.0, abs=1e-9)


def _naive_box_mean(img, size):
    h, w = img.shape
    out = np.zeros_like(img, dtype=float)
    half = size // 2
    for i in range(h):
        for j in range(w):
            r0, r1 = max(0, i - half), min(h, i - half + size)
            c0, c1 = max(0, j - half), min(w, j - half + size)
            out[i, j] = img[r0:r1, c0:c1].mean()
    return out


def test_activity_translating_square_matches_direct_recompute():
    rng = np.random.default_rng(3)
    frames = []
    for k in range(4):
        img = np.zeros((56, 56))
        img[10 + k : 22 + k, 8 + 2 * k : 20 + 2 * k] = 200.0
        img += rng.normal(0, 1.0, img.shape)
        frames.append(img)
    sig = activity_from_frames(frames)
    filtered = [_naive_box_mean(f, 50) for f in frames]
    expected = [float(np.mean(np.abs(b - a))) for a, b in zip(filtered, filtered[1:])]
    assert np.allclose(sig.samples, expected, atol=1e-9)


def test_activity_input_validation():
    with pytest.raises(InvalidInputError):
        activity_from_frames([np.zeros((60, 60))])
    with pytest.raises(InvalidInputError):
        activity_from_frames([np.zeros((60, 60)), np.zeros((50, 61))])
    with pytest.raises(InvalidInputError):
        activity_from_frames([np.zeros((20, 20)), np.zeros((20, 20))])


# ---------------------------------------------------------------------------
# pause detection


def _bump_signal(valleys, rate=30.0, amp=1.0):
    """Raised-cosine bumps abutting at the given valley times (V-shaped zeros)."""
    bounds = [0.0] + list(valleys) + [valleys[-1] + 2.5]
    t = np.arange(0, bounds[-1], 1.0 / rate)
    x = np.zeros_like(t)
    for a, b in zip(bounds, bounds[1:]):
        mask = (t >= a) & (t < b)
        x[mask] = amp * 0.5 * (1 - np.cos(2 * np.pi * (t[mask] - a) / (b - a)))
    return ActivitySignal(tuple(x), rate)


def test_detect_pauses_monotone_has_none():
    sig = ActivitySignal(tuple(np.linspace(0, 1, 200)), 30.0)
    assert detect_pauses(sig) == []


def test_detect_pauses_two_bumps():
    sig = _bump_signal([2.0])
    pauses = detect_pauses(sig)
    assert len(pauses) == 1
    assert abs(pauses[0] - 2.0) <= 2.0 / 30.0 + 1e-9


def test_detect_pauses_removes_spikes():
    sig = _bump_signal([2.0, 4.5])
    x = np.asarray(sig.samples)
    x[20] = 50.0  # sensor glitch
    x[100] = 40.0
    spiky = ActivitySignal(tuple(x), sig.sample_rate)
    pauses = detect_pauses(spiky)
    assert len(pauses) == 2
    for p, truth in zip(pauses, [2.0, 4.5]):
        assert abs(p - truth) <= 2.0 / 30.0 + 1e-9


def test_detect_pauses_warmup_guard():
    with pytest.raises(InvalidInputError):
        detect_pauses(ActivitySignal(tuple(np.ones(6)), 30.0))
    with pytest.raises(InvalidInputError):
        detect_pauses(ActivitySignal(tuple(np.ones(100)), 1.0))


# ---------------------------------------------------------------------------
# skeleton encoding / decoding


def _arm_frame(t, elbow_dir, wrist_dir, shoulder=(0.0, -0.2, 1.4), upper=0.3, fore=0.3):
    shoulder = np.asarray(shoulder)
    elbow = shoulder + upper * np.asarray(elbow_dir, float)
    wrist = elbow + fore * np.asarray(wrist_dir, float)
    return SkeletonFrame(
        t,
        {
            "right-shoulder": tuple(shoulder),
            "right-elbow": tuple(elbow),
            "right-wrist": tuple(wrist),
        },
    )


RIGHT_ARM = columns_by_name(["right-elbow", "right-wrist"])


def test_encode_arm_hanging_down():
    frames = [_arm_frame(t, (0, 0, -1), (0, 0, -1)) for t in np.arange(0, 2.01, 1 / 30)]
    score = encode_skeleton(frames, [1.0], RIGHT_ARM)
    row = score.rows[0]
    assert row.symbol("right-elbow").direction == laban.PLACE_LOW
    assert row.symbol("right-wrist").direction == laban.PLACE_LOW


def test_encode_pick_posture():
    s = math.sqrt(2) / 2
    frames = [_arm_frame(t, (0, 0, -1), (s, 0, -s)) for t in np.arange(0, 2.01, 1 / 30)]
    score = encode_skeleton(frames, [1.5], RIGHT_ARM)
    row = score.rows[0]
    assert row.symbol("right-elbow").direction.token == "PL-L"
    assert row.symbol("right-wrist").direction.token == "F-LL"


def test_encode_durations_are_pause_intervals():
    frames = [_arm_frame(t, (0, 0, -1), (1, 0, 0)) for t in np.arange(0, 4.01, 1 / 30)]
    score = encode_skeleton(frames, [1.0, 3.0], RIGHT_ARM)
    assert score.rows[0].duration == pytest.approx(1.0)
    assert score.rows[1].duration == pytest.approx(2.0)


def test_encode_scale_invariance():
    rng = np.random.default_rng(11)
    dirs = rng.normal(size=(4, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    frames = [_arm_frame(t, dirs[0], dirs[1]) for t in np.arange(0, 2.01, 1 / 30)]
    shoulder = np.array([0.0, -0.2, 1.4])
    scaled = [
        SkeletonFrame(
            f.timestamp,
            {k: tuple(shoulder + 2.5 * (np.asarray(v) - shoulder)) for k, v in f.joints.items()},
        )
        for f in frames
    ]
    s1 = encode_skeleton(frames, [1.0], RIGHT_ARM)
    s2 = encode_skeleton(scaled, [1.0], RIGHT_ARM)
    assert s1 == s2


def test_encode_pause_outside_range():
    frames = [_arm_frame(t, (0, 0, -1), (0, 0, -1)) for t in np.arange(0, 1.01, 1 / 30)]
    with pytest.raises(InvalidInputError):
        encode_skeleton(frames, [5.0], RIGHT_ARM)


def test_decode_single_row_vector_composition():
    row = LabanRow(
        1.0,
        (
            LabanSymbol("right-elbow", laban.PLACE_LOW, 1.0),
            LabanSymbol("right-wrist", laban.PLACE_LOW, 1.0),
        ),
    )
    score = LabanScore(("right-elbow", "right-wrist"), (row,))
    frames = decode_score(
        score, {"right-elbow": 0.3, "right-wrist": 0.3}, (0.0, 0.0, 1.4)
    )
    assert len(frames) == 1
    assert np.allclose(frames[0].joint("right-elbow"), [0, 0, 1.1])
    assert np.allclose(frames[0].joint("right-wrist"), [0, 0, 0.8])


def _random_score(rng, n_rows=4):
    rows = []
    t = 0.0
    bins = all_directions()
    for _ in range(n_rows):
        t += 0.25 * int(rng.integers(1, 8))
        dur = 0.0
        syms = []
        for col in ("right-elbow", "right-wrist"):
            d = bins[int(rng.integers(len(bins)))]
            syms.append((col, d))
        rows.append((t, syms))
    # durations are deltas of the dyadic-grid times
    prev = 0.0
    out_rows = []
    for t, syms in rows:
        dur = t - prev
        prev = t
        out_rows.append(
            LabanRow(t, tuple(LabanSymbol(c, d, dur) for c, d in syms))
        )
    return LabanScore(("right-elbow", "right-wrist"), tuple(out_rows))


def test_decode_then_reencode_is_identity():
    rng = np.random.default_rng(23)
    for _ in range(25):
        score = _random_score(rng)
        frames = decode_score(
            score, {"right-elbow": 0.3, "right-wrist": 0.28}, (0.1, -0.2, 1.4)
        )
        pauses = [f.timestamp for f in frames]
        again = encode_skeleton(frames, pauses, RIGHT_ARM, start_time=0.0)
        assert again == score


def test_decode_scale_changes_targets_not_score():
    rng = np.random.default_rng(5)
    score = _random_score(rng)
    f1 = decode_score(score, {"right-elbow": 0.3, "right-wrist": 0.3}, (0, 0, 1.4))
    f2 = decode_score(score, {"right-elbow": 0.6, "right-wrist": 0.6}, (0, 0, 1.4))
    shoulder = np.array([0, 0, 1.4])
    for a, b in zip(f1, f2):
        off1 = a.joint("right-elbow") - shoulder
        off2 = b.joint("right-elbow") - shoulder
        assert np.allclose(2 * off1, off2)
    pauses = [f.timestamp for f in f2]
    assert encode_skeleton(f2, pauses, RIGHT_ARM, start_time=0.0) == score


def test_decode_missing_length():
    rng = np.random.default_rng(9)
    score = _random_score(rng)
    with pytest.raises(InvalidInputError):
        decode_score(score, {"right-elbow": 0.3}, (0, 0, 1.4))


# ---------------------------------------------------------------------------
# serialization


def test_serialize_parse_identity():
    rng = np.random.default_rng(31)
    for _ in range(50):
        score = _random_score(rng, n_rows=int(rng.integers(1, 6)))
        assert parse_score(serialize_score(score)) == score


def test_parse_unknown_column_reports_line():
    text = "columns: right-elbow\nbeat: 1.0\nt=1.0 | left-knee=F-M:1.0\n"
    with pytest.raises(ScoreParseError) as ei:
        parse_score(text)
    assert ei.value.line == 3


def test_parse_rejects_bad_duration_and_token():
    base = "columns: right-elbow\nbeat: 1.0\n"
    with pytest.raises(ScoreParseError):
        parse_score(base + "t=1.0 | right-elbow=F-M:0.0\n")
    with pytest.raises(ScoreParseError):
        parse_score(base + "t=1.0 | right-elbow=XX-M:1.0\n")
