import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import make_stroke, stroke_from_angles
from touchauth.ingest import Stroke
from touchauth.features import (
    FEATURE_NAMES,
    DegenerateStroke,
    Direction,
    direction_of,
    extract_features,
    mean_direction,
    mean_resultant_length,
    pairwise_accelerations,
    pairwise_velocities,
    percentile,
    perpendicular_deviations,
)

GEOMETRIC_INVARIANT = (
    "end_to_end_dist", "trajectory_length", "ratio_dist_traj", "end_to_end_direction", "avg_direction",
    "mean_resultant_length", "max_deviation", "dev_p20", "dev_p50", "dev_p80", "vel_p20", "vel_p50", "vel_p80",
    "avg_velocity", "median_vel_last3", "acc_p20", "acc_p50", "acc_p80", "median_acc_first5", "duration",
    "direction_flag",
)


def random_stroke(rng, n=20, prev_end=None):
    xy = 0.3 + np.cumsum(rng.normal(0.01, 0.01, size=(n, 2)), axis=0)
    t = np.cumsum(rng.uniform(5, 20, n))
    return make_stroke(xy, t=t, prev_end=prev_end, pressures=rng.uniform(0, 1, n), orients=rng.normal(size=n))


# ---------------------------------------------------------------------------
# velocities and accelerations
# ---------------------------------------------------------------------------


def test_single_pair_velocity():
    assert pairwise_velocities(make_stroke([[0, 0], [0.1, 0]], t=[0, 100])).tolist() == pytest.approx([1.0])


def test_uniform_motion_velocities():
    v = pairwise_velocities(make_stroke([[0, 0], [0.1, 0], [0.2, 0]], t=[0, 50, 100]))
    assert v[0] == pytest.approx(v[1])


def test_random_velocities_against_raw_deltas():
    rng = np.random.default_rng(1)
    s = random_stroke(rng)
    expect = [math.dist((a.x, a.y), (b.x, b.y)) / ((b.t - a.t) / 1000) for a, b in zip(s.samples, s.samples[1:])]
    np.testing.assert_allclose(pairwise_velocities(s), expect, rtol=1e-12)


def test_zero_dt_pairs_skipped():
    s = make_stroke([[0, 0], [0.1, 0], [0.2, 0]], t=[0, 0, 100])
    assert pairwise_velocities(s).tolist() == pytest.approx([1.0])
    with pytest.raises(DegenerateStroke):
        pairwise_velocities(make_stroke([[0, 0], [0.1, 0]], t=[5, 5]))


def test_uniform_motion_zero_acceleration():
    s = make_stroke([[0.1 * i, 0] for i in range(6)], t=[20 * i for i in range(6)])
    np.testing.assert_allclose(pairwise_accelerations(s), 0.0, atol=1e-9)


def test_linearly_increasing_speed_constant_acceleration():
    # segment lengths 0.01, 0.02, 0.03 at dt = 10 ms: speeds 1, 2, 3 /s
    # midpoints 10 ms apart -> acceleration 100 /s^2
    x = np.cumsum([0, 0.01, 0.02, 0.03])
    s = make_stroke(np.c_[x, np.zeros(4)], t=[0, 10, 20, 30])
    np.testing.assert_allclose(pairwise_accelerations(s), [100.0, 100.0], rtol=1e-9)


def test_single_velocity_acceleration_absent():
    s = make_stroke([[0, 0], [0.1, 0]], t=[0, 10])
    assert pairwise_accelerations(s) is None
    fv = extract_features(s)
    assert math.isnan(fv["acc_p50"]) and "median_acc_first5" in fv.absent


# ---------------------------------------------------------------------------
# directional statistics
# ---------------------------------------------------------------------------


def test_R_collinear_is_exactly_one():
    assert mean_resultant_length(make_stroke([[0.1 * i, 0.05 * i] for i in range(8)])) == 1.0


def test_R_opposing_segments():
    assert mean_resultant_length(stroke_from_angles([0.0, math.pi])) == pytest.approx(0.0, abs=1e-12)


def test_R_right_angle():
    assert abs(mean_resultant_length(stroke_from_angles([0.0, math.pi / 2])) - math.sqrt(2) / 2) < 1e-12


def test_R_skips_zero_segments():
    s = make_stroke([[0, 0], [0.1, 0], [0.1, 0], [0.2, 0]])
    assert mean_resultant_length(s) == 1.0
    with pytest.raises(DegenerateStroke):
        mean_resultant_length(make_stroke([[0.1, 0.1], [0.1, 0.1]]))


def test_mean_direction_conventions():
    assert mean_direction(make_stroke([[0, 0.5], [0.2, 0.5]])) == pytest.approx(0.0)
    # screen y decreasing means moving up
    assert mean_direction(make_stroke([[0.5, 0.5], [0.5, 0.3]])) == pytest.approx(math.pi / 2)
    assert mean_direction(stroke_from_angles([0.0, math.pi / 2])) == pytest.approx(math.pi / 4)
    assert mean_direction(make_stroke([[0.5, 0.5], [0.3, 0.5]])) == pytest.approx(math.pi)


def test_mean_direction_absent_when_R_vanishes():
    assert mean_direction(stroke_from_angles([0.0, math.pi])) is None


def test_R_random_angles_small():
    rng = np.random.default_rng(7)
    Rs = [mean_resultant_length(stroke_from_angles(rng.uniform(-math.pi, math.pi, 100), step=0.001))
          for _ in range(1000)]
    assert np.mean(Rs) < 0.15


@given(st.lists(st.floats(-math.pi, math.pi), min_size=1, max_size=30))
@settings(max_examples=200, deadline=None)
def test_R_in_unit_interval(angles):
    R = mean_resultant_length(stroke_from_angles(angles))
    assert 0.0 <= R <= 1.0


# ---------------------------------------------------------------------------
# deviations and percentiles
# ---------------------------------------------------------------------------


def test_collinear_deviations_zero():
    np.testing.assert_allclose(perpendicular_deviations(make_stroke([[0.1 * i, 0.1 * i] for i in range(5)])), 0,
                               atol=1e-15)


def test_arc_left_of_travel_positive():
    # travelling right along the screen, "left" is up the screen (smaller y)
    u = np.linspace(0, 1, 9)
    xy = np.c_[0.1 + 0.5 * u, 0.5 - 0.1 * np.sin(np.pi * u)]
    dev = perpendicular_deviations(make_stroke(xy))
    assert (dev > 0).all()


def test_deviations_against_cross_product_oracle():
    rng = np.random.default_rng(3)
    s = random_stroke(rng)
    p = [(e.x, -e.y) for e in s.samples]
    (x0, y0), (x1, y1) = p[0], p[-1]
    L = math.hypot(x1 - x0, y1 - y0)
    expect = [((x1 - x0) * (y - y0) - (y1 - y0) * (x - x0)) / L for x, y in p[1:-1]]
    np.testing.assert_allclose(perpendicular_deviations(s), expect, rtol=1e-9, atol=1e-15)


def test_mirroring_negates_deviations():
    rng = np.random.default_rng(5)
    s = random_stroke(rng)
    xy = s.xy
    a, b = xy[0], xy[-1]
    d = (b - a) / np.linalg.norm(b - a)
    rel = xy - a
    mirrored = a + 2 * np.outer(rel @ d, d) - rel
    m = make_stroke(mirrored, t=s.t)
    np.testing.assert_allclose(perpendicular_deviations(m), -perpendicular_deviations(s), atol=1e-12)


def test_two_sample_deviations_empty():
    assert perpendicular_deviations(make_stroke([[0, 0], [0.1, 0.1]])).size == 0


@pytest.mark.parametrize("vals, q, expect", [([1, 2, 3, 4, 5], 50, 3), ([1, 2, 3, 4], 100, 4), ([1, 2, 3, 4], 20, 1.6)])
def test_percentile_examples(vals, q, expect):
    assert percentile(vals, q) == pytest.approx(expect, abs=1e-12)


def test_percentile_errors():
    with pytest.raises(ValueError):
        percentile([], 50)
    with pytest.raises(ValueError):
        percentile([1], 101)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30))
def test_extractor_percentiles_match_reference(vals):
    from touchauth.features import _percentiles

    got = _percentiles(np.array(vals))
    for q, g in zip((20, 50, 80), got):
        assert g == pytest.approx(percentile(vals, q), rel=1e-12, abs=1e-9)


# ---------------------------------------------------------------------------
# full vector
# ---------------------------------------------------------------------------


def test_three_sample_golden():
    s = make_stroke([[0.1, 0.5], [0.2, 0.5], [0.3, 0.5]], t=[0, 100, 200])
    fv = extract_features(s)
    assert fv["end_to_end_dist"] == pytest.approx(0.2)
    assert fv["trajectory_length"] == pytest.approx(0.2)
    assert fv["ratio_dist_traj"] == pytest.approx(1.0)
    assert fv["duration"] == 200.0
    assert fv["vel_p50"] == pytest.approx(1.0)
    assert fv["mean_resultant_length"] == 1.0
    assert fv.direction_class is Direction.RIGHT
    assert fv["direction_flag"] == Direction.RIGHT.value
    assert len(fv.values) == len(FEATURE_NAMES) == 31


def test_time_reversal():
    xy = [[0.1, 0.5], [0.2, 0.52], [0.3, 0.5]]
    fwd = extract_features(make_stroke(xy, t=[0, 100, 200]))
    rev = extract_features(make_stroke(xy[::-1], t=[0, 100, 200]))
    assert rev.direction_class is Direction.LEFT
    diff = (rev["end_to_end_direction"] - fwd["end_to_end_direction"]) % (2 * math.pi)
    assert diff == pytest.approx(math.pi)
    for name in ("end_to_end_dist", "trajectory_length", "ratio_dist_traj", "duration", "vel_p50",
                 "mean_resultant_length", "dev_p50"):
        assert rev[name] == pytest.approx(fwd[name], rel=1e-12)


def test_mid_stroke_sample_and_orientation_change():
    s = make_stroke([[0.1 * i, 0.5] for i in range(5)], pressures=[0.1, 0.2, 0.3, 0.4, 0.5],
                    orients=[1.0, 0, 0, 0, 0.25])
    fv = extract_features(s)
    # ceil(5/2) = 3rd sample
    assert fv["mid_stroke_pressure"] == 0.3
    assert fv["finger_orientation_change"] == -0.75
    s4 = make_stroke([[0.1 * i, 0.5] for i in range(4)], pressures=[0.1, 0.2, 0.3, 0.4])
    assert extract_features(s4)["mid_stroke_pressure"] == 0.2


def test_inter_stroke_time_and_absence():
    s = make_stroke([[0, 0], [0.1, 0]], t=[1000, 1010], prev_end=400.0)
    assert extract_features(s)["inter_stroke_time"] == 600.0
    first = extract_features(make_stroke([[0, 0], [0.1, 0]]))
    assert "inter_stroke_time" in first.absent and not first.complete


def test_last3_and_first5_windows():
    # speeds 1..6 per second from segment lengths growing by 0.01
    x = np.cumsum([0] + [0.01 * k for k in range(1, 7)])
    s = make_stroke(np.c_[x, np.zeros(7)], t=[10 * i for i in range(7)])
    fv = extract_features(s)
    assert fv["median_vel_last3"] == pytest.approx(5.0)
    acc = pairwise_accelerations(s)
    assert fv["median_acc_first5"] == pytest.approx(np.median(acc[:5]))


def test_direction_flag_ties_horizontal():
    assert direction_of(0.1, 0.1) is Direction.RIGHT
    assert direction_of(-0.1, 0.1) is Direction.LEFT
    assert direction_of(0.0, -0.2) is Direction.UP
    assert direction_of(0.05, 0.2) is Direction.DOWN


@given(st.integers(0, 10_000), st.floats(-0.2, 0.2), st.floats(-0.2, 0.2))
@settings(max_examples=100, deadline=None)
def test_translation_invariance(seed, ox, oy):
    rng = np.random.default_rng(seed)
    s = random_stroke(rng, n=int(rng.integers(2, 25)), prev_end=-50.0)
    moved = make_stroke(s.xy + [ox, oy], t=s.t, prev_end=-50.0)
    a, b = extract_features(s), extract_features(moved)
    for name in GEOMETRIC_INVARIANT:
        if math.isnan(a[name]):
            assert math.isnan(b[name])
        elif name in ("end_to_end_direction", "avg_direction"):
            d = (a[name] - b[name] + math.pi) % (2 * math.pi) - math.pi
            assert abs(d) < 1e-9
        else:
            assert b[name] == pytest.approx(a[name], rel=1e-7, abs=1e-9), name
    assert b["start_x"] == pytest.approx(a["start_x"] + ox)


@given(st.integers(0, 10_000), st.floats(0, 1e6))
@settings(max_examples=50, deadline=None)
def test_time_shift_invariance(seed, shift):
    rng = np.random.default_rng(seed)
    s = random_stroke(rng, prev_end=-5.0)
    shifted = Stroke(tuple(replace(e, t=e.t + shift) for e in s.samples), -5.0 + shift)
    np.testing.assert_allclose(extract_features(shifted).values, extract_features(s).values, rtol=1e-6, equal_nan=True)


@given(st.integers(0, 10_000))
@settings(max_examples=100, deadline=None)
def test_range_invariants(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 30))
    xy = np.clip(0.5 + np.cumsum(rng.normal(0, 0.05, (n, 2)), axis=0), 0, 1)
    xy[-1] = xy[0] + [0.1, 0.05]
    s = make_stroke(np.clip(xy, 0, 1), t=np.cumsum(rng.uniform(1, 20, n)), prev_end=0.0)
    fv = extract_features(s)
    assert 0 <= fv["mean_resultant_length"] <= 1
    assert 0 < fv["ratio_dist_traj"] <= 1
    assert fv["trajectory_length"] >= fv["end_to_end_dist"] * (1 - 1e-12)
    for k in ("start_x", "stop_x", "start_y", "stop_y"):
        assert 0 <= fv[k] <= 1
    assert fv["duration"] > 0 and fv["inter_stroke_time"] >= 0


def test_collinear_iff_ratio_one():
    assert extract_features(make_stroke([[0, 0], [0.1, 0.1], [0.3, 0.3]]))["ratio_dist_traj"] == 1.0
    assert extract_features(make_stroke([[0, 0], [0.1, 0.12], [0.3, 0.3]]))["ratio_dist_traj"] < 1.0
    # collinear but backtracking is not "in travel order"
    assert extract_features(make_stroke([[0, 0], [0.4, 0.4], [0.3, 0.3]]))["ratio_dist_traj"] < 1.0
