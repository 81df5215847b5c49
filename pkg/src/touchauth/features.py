"""Per-stroke feature extraction.

Coordinates are screen fractions with y growing downward, as logged. Every
angle is measured in the flipped (mathematical) frame, so a stroke moving up
the screen has direction pi/2. Velocities are in screen fractions per second,
times (duration, inter-stroke time) in milliseconds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .ingest import Stroke

FEATURE_NAMES = (
    "mid_stroke_area",
    "vel_p20",
    "mid_stroke_pressure",
    "end_to_end_direction",
    "stop_x",
    "start_x",
    "avg_direction",
    "start_y",
    "avg_velocity",
    "stop_y",
    "duration",
    "end_to_end_dist",
    "trajectory_length",
    "vel_p80",
    "median_vel_last3",
    "vel_p50",
    "acc_p20",
    "ratio_dist_traj",
    "max_deviation",
    "acc_p80",
    "mean_resultant_length",
    "median_acc_first5",
    "dev_p50",
    "inter_stroke_time",
    "dev_p80",
    "dev_p20",
    "acc_p50",
    "phone_orientation",
    "mid_stroke_finger_orientation",
    "direction_flag",
    "finger_orientation_change",
)
FEATURE_INDEX = {name: i for i, name in enumerate(FEATURE_NAMES)}
CATEGORICAL_FEATURES = frozenset({"phone_orientation", "direction_flag"})

LAST_VEL_WINDOW = 3
FIRST_ACC_WINDOW = 5
# R below this counts as "no mean direction"
ZERO_RESULTANT = 1e-12
RESULTANT_SNAP = 1e-12


class Direction(Enum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3

    @property
    def axis(self) -> str:
        return "vertical" if self in (Direction.UP, Direction.DOWN) else "horizontal"


class DegenerateStroke(ValueError):
    """The stroke cannot support the requested quantity."""


@dataclass
class FeatureVector:
    values: np.ndarray  # shape (31,), NaN marks an absent feature
    direction_class: Direction
    user_id: str
    doc_id: str
    phone_id: str
    stroke_index_in_session: int = 0
    week: int = 1
    absent: tuple[str, ...] = field(default=())

    def __getitem__(self, name: str) -> float:
        return float(self.values[FEATURE_INDEX[name]])

    @property
    def complete(self) -> bool:
        return not np.isnan(self.values).any()

    def as_dict(self) -> dict[str, float]:
        return {n: float(v) for n, v in zip(FEATURE_NAMES, self.values)}


# ---------------------------------------------------------------------------
# primitive quantities
# ---------------------------------------------------------------------------


def _math_frame(xy: np.ndarray) -> np.ndarray:
    out = np.array(xy, dtype=np.float64, copy=True)
    out[:, 1] = -out[:, 1]
    return out


def _pair_speeds(xy: np.ndarray, t_ms: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Speeds of pairs with positive dt, plus their midpoint times (s)."""
    d = np.diff(xy, axis=0)
    dt = np.diff(t_ms) / 1000.0
    keep = dt > 0
    speeds = np.hypot(d[keep, 0], d[keep, 1]) / dt[keep]
    t_s = t_ms / 1000.0
    mids = ((t_s[:-1] + t_s[1:]) / 2)[keep]
    return speeds, mids


def pairwise_velocities(stroke: Stroke) -> np.ndarray:
    speeds, _ = _pair_speeds(stroke.xy, stroke.t)
    if speeds.size == 0:
        raise DegenerateStroke("every sample pair has zero time difference")
    return speeds


def pairwise_accelerations(stroke: Stroke) -> np.ndarray | None:
    """Speed differences over the time between pair midpoints; None if < 2 speeds."""
    speeds, mids = _pair_speeds(stroke.xy, stroke.t)
    if speeds.size < 2:
        return None
    return np.diff(speeds) / np.diff(mids)


def _unit_segments(xy: np.ndarray) -> np.ndarray:
    d = np.diff(_math_frame(xy), axis=0)
    length = np.hypot(d[:, 0], d[:, 1])
    keep = length > 0
    if not keep.any():
        raise DegenerateStroke("no segment with nonzero displacement")
    return (d[keep, 0] + 1j * d[keep, 1]) / length[keep]


def mean_resultant_length(stroke: Stroke) -> float:
    z = _unit_segments(stroke.xy)
    R = abs(z.sum()) / z.size
    # summing parallel unit vectors can land a few ulps below 1
    return 1.0 if R > 1.0 - RESULTANT_SNAP else float(R)


def mean_direction(stroke: Stroke) -> float | None:
    """Argument of the mean unit segment vector, or None when R vanishes."""
    z = _unit_segments(stroke.xy)
    m = z.sum() / z.size
    if abs(m) < ZERO_RESULTANT:
        return None
    return _wrap(math.atan2(m.imag, m.real))


def _wrap(a: float) -> float:
    # into (-pi, pi]
    return math.pi if a == -math.pi else a


def perpendicular_deviations(stroke: Stroke) -> np.ndarray:
    """Signed distances of interior samples from the start->end line (left of travel > 0)."""
    p = _math_frame(stroke.xy)
    e = p[-1] - p[0]
    L = math.hypot(e[0], e[1])
    if L == 0:
        raise DegenerateStroke("zero end-to-end distance")
    normal = np.array([-e[1], e[0]]) / L
    return (p[1:-1] - p[0]) @ normal


def percentile(values, q: float) -> float:
    """Linear interpolation between closest ranks."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("percentile of an empty list")
    if not 0 <= q <= 100:
        raise ValueError("q must lie in [0, 100]")
    return float(np.percentile(v, q))


def _percentiles(values: np.ndarray, qs=(20, 50, 80)) -> tuple[float, ...]:
    # same rule as percentile(), without np.percentile's per-call overhead
    v = np.sort(values)
    out = []
    for q in qs:
        pos = q / 100 * (v.size - 1)
        lo = int(pos)
        hi = min(lo + 1, v.size - 1)
        out.append(float(v[lo] + (v[hi] - v[lo]) * (pos - lo)))
    return tuple(out)


def direction_of(dx: float, dy_screen: float) -> Direction:
    # ties go horizontal; screen y grows downward
    if abs(dx) >= abs(dy_screen):
        return Direction.RIGHT if dx > 0 else Direction.LEFT
    return Direction.UP if dy_screen < 0 else Direction.DOWN


# ---------------------------------------------------------------------------
# full vector
# ---------------------------------------------------------------------------


def extract_features(
    stroke: Stroke,
    stroke_index: int = 0,
    week: int = 1,
    last_vel_window: int = LAST_VEL_WINDOW,
    first_acc_window: int = FIRST_ACC_WINDOW,
) -> FeatureVector:
    xy = stroke.xy
    t = stroke.t
    N = stroke.n
    s0, s1 = stroke.samples[0], stroke.samples[-1]
    f: dict[str, float] = {}

    f["start_x"], f["start_y"] = s0.x, s0.y
    f["stop_x"], f["stop_y"] = s1.x, s1.y
    dx, dy = s1.x - s0.x, s1.y - s0.y
    e2e = math.hypot(dx, dy)
    seg = np.diff(xy, axis=0)
    traj = float(np.hypot(seg[:, 0], seg[:, 1]).sum())
    f["end_to_end_dist"] = e2e
    f["trajectory_length"] = traj
    f["ratio_dist_traj"] = min(e2e / traj, 1.0) if traj > 0 else math.nan
    f["end_to_end_direction"] = _wrap(math.atan2(-dy, dx)) if e2e > 0 else math.nan

    try:
        f["mean_resultant_length"] = mean_resultant_length(stroke)
        md = mean_direction(stroke)
        f["avg_direction"] = math.nan if md is None else md
    except DegenerateStroke:
        f["mean_resultant_length"] = f["avg_direction"] = math.nan

    duration = float(t[-1] - t[0])
    f["duration"] = duration
    f["avg_velocity"] = e2e / (duration / 1000.0) if duration > 0 else math.nan

    speeds, _ = _pair_speeds(xy, t)
    if speeds.size:
        f["vel_p20"], f["vel_p50"], f["vel_p80"] = _percentiles(speeds)
        f["median_vel_last3"] = float(np.median(speeds[-last_vel_window:]))
    else:
        for k in ("vel_p20", "vel_p50", "vel_p80", "median_vel_last3"):
            f[k] = math.nan

    acc = pairwise_accelerations(stroke)
    if acc is not None:
        f["acc_p20"], f["acc_p50"], f["acc_p80"] = _percentiles(acc)
        f["median_acc_first5"] = float(np.median(acc[:first_acc_window]))
    else:
        for k in ("acc_p20", "acc_p50", "acc_p80", "median_acc_first5"):
            f[k] = math.nan

    if e2e > 0:
        dev = perpendicular_deviations(stroke)
        if dev.size:
            f["max_deviation"] = float(dev[np.argmax(np.abs(dev))])
            a = np.abs(dev)
            f["dev_p20"], f["dev_p50"], f["dev_p80"] = _percentiles(a)
        else:
            # two-sample stroke: the trajectory is the line itself
            f["max_deviation"] = f["dev_p20"] = f["dev_p50"] = f["dev_p80"] = 0.0
    else:
        for k in ("max_deviation", "dev_p20", "dev_p50", "dev_p80"):
            f[k] = math.nan

    prev = stroke.prev_stroke_end_t
    f["inter_stroke_time"] = float(t[0] - prev) if prev is not None else math.nan

    mid = stroke.samples[math.ceil(N / 2) - 1]
    f["mid_stroke_pressure"] = mid.pressure
    f["mid_stroke_area"] = mid.area
    f["mid_stroke_finger_orientation"] = mid.finger_orientation
    f["finger_orientation_change"] = s1.finger_orientation - s0.finger_orientation
    f["phone_orientation"] = float(s0.phone_orientation.value)

    direction = direction_of(dx, dy)
    f["direction_flag"] = float(direction.value)

    values = np.array([f[name] for name in FEATURE_NAMES], dtype=np.float64)
    absent = tuple(n for n, v in zip(FEATURE_NAMES, values) if math.isnan(v))
    return FeatureVector(
        values=values,
        direction_class=direction,
        user_id=stroke.user_id,
        doc_id=stroke.doc_id,
        phone_id=stroke.phone_id,
        stroke_index_in_session=stroke_index,
        week=week,
        absent=absent,
    )


def extract_session(strokes, week: int = 1) -> list[FeatureVector]:
    return [extract_features(s, i, week) for i, s in enumerate(strokes)]
