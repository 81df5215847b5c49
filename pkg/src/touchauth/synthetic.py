"""Seeded synthetic touch users.

A user is a Gaussian over a small vector of standardized stroke parameters
(where the stroke starts, how long, how curved, how fast, how hard the finger
presses, ...). Each drawn parameter vector is rendered into an actual touch
trace and run through the real feature extractor, so every generated vector
is a genuine stroke's feature vector and obeys the extractor's invariants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .classify import derive_seed
from .dataset import FeatureTable
from .features import Direction, FeatureVector, extract_features
from .ingest import Action, PhoneOrientation, ScreenSpec, Stroke, TouchEvent

LATENT_NAMES = (
    "start_x",
    "start_y",
    "length",
    "drift",
    "curvature",
    "duration",
    "ballistic",
    "pressure",
    "area",
    "finger_orientation",
    "sampling",
    "noise",
)
N_LATENT = len(LATENT_NAMES)
MARGIN = 0.02
SCREEN_PX = (1080.0, 1920.0)


def _logistic(z):
    return 1.0 / (1.0 + math.exp(-z))


@dataclass
class SyntheticUserSpec:
    user_id: str
    phone_id: str = "phone0"
    mean_vertical: np.ndarray = field(default_factory=lambda: np.zeros(N_LATENT))
    mean_horizontal: np.ndarray = field(default_factory=lambda: np.zeros(N_LATENT))
    cov: np.ndarray = field(default_factory=lambda: np.ones(N_LATENT))  # diagonal, or a full matrix
    interval_median_ms: float = 3900.0
    interval_sigma: float = 0.6
    p_vertical: float = 0.5
    p_landscape: float = 0.0
    session_drift: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.mean_vertical = np.asarray(self.mean_vertical, dtype=np.float64)
        self.mean_horizontal = np.asarray(self.mean_horizontal, dtype=np.float64)
        self.cov = np.asarray(self.cov, dtype=np.float64)
        for m in (self.mean_vertical, self.mean_horizontal):
            if m.shape != (N_LATENT,):
                raise ValueError(f"means must have {N_LATENT} entries")
        var = np.diag(self.cov) if self.cov.ndim == 2 else self.cov
        for name, v in zip(LATENT_NAMES, var):
            if not v > 0:
                raise ValueError(f"variance of {name!r} must be positive, got {v}")
        if self.cov.ndim == 2 and np.linalg.eigvalsh(self.cov).min() <= 0:
            raise ValueError("covariance matrix is not positive definite")
        if not self.interval_median_ms > 0 or not self.interval_sigma >= 0:
            raise ValueError("interval distribution needs a positive median and a non-negative sigma")
        for name in ("p_vertical", "p_landscape"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "phone_id": self.phone_id,
            "mean_vertical": self.mean_vertical.tolist(),
            "mean_horizontal": self.mean_horizontal.tolist(),
            "cov": self.cov.tolist(),
            "interval_median_ms": self.interval_median_ms,
            "interval_sigma": self.interval_sigma,
            "p_vertical": self.p_vertical,
            "p_landscape": self.p_landscape,
            "session_drift": self.session_drift,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticUserSpec":
        return cls(**d)


@dataclass
class Session:
    vectors: list[FeatureVector]
    strokes: list[Stroke]


# ---------------------------------------------------------------------------
# one stroke
# ---------------------------------------------------------------------------


def render_stroke(z, direction: Direction, t0: float, rng: np.random.Generator, user_id: str, doc_id: str,
                  phone_id: str, orientation: PhoneOrientation, prev_end: float | None) -> Stroke:
    """Turn one latent parameter vector into a touch trace in screen fractions."""
    L = 0.08 + 0.5 * _logistic(0.8 * z[2])
    drift = 0.3 * math.tanh(0.5 * z[3]) * L
    curv = 0.1 * math.tanh(0.5 * z[4]) * L
    duration = max(30.0, math.exp(math.log(180.0) + 0.35 * z[5]))
    w = _logistic(z[6])
    pressure = 0.15 + 0.7 * _logistic(0.8 * z[7])
    area = 0.02 + 0.2 * _logistic(0.8 * z[8])
    f_orient = 0.5 * z[9]
    dt = 16.0 * math.exp(0.2 * z[10])
    noise = 0.0015 * math.exp(0.3 * z[11])

    sign = -1.0 if direction in (Direction.UP, Direction.LEFT) else 1.0
    if direction.axis == "vertical":
        D = np.array([drift, sign * L])  # screen frame, y down
    else:
        D = np.array([sign * L, drift])
    start = np.empty(2)
    for a, zz in ((0, z[0]), (1, z[1])):
        room = 1.0 - 2 * MARGIN - abs(D[a])
        start[a] = MARGIN + max(0.0, -D[a]) + room * _logistic(zz)
    stop = start + D

    N = max(3, int(round(duration / dt)) + 1)
    s = np.linspace(0.0, 1.0, N)
    u = (1 - w) * (3 * s**2 - 2 * s**3) + w * s**1.5
    pts = start + np.outer(u, D)
    # left-of-travel normal, expressed in the y-down screen frame
    normal = np.array([D[1], -D[0]]) / math.hypot(*D)
    pts += np.outer(curv * np.sin(np.pi * u), normal)
    pts[1:-1] += rng.normal(0.0, noise, size=(N - 2, 2))
    pts[0], pts[-1] = start, stop
    pts = np.clip(pts, 0.0, 1.0)
    t = t0 + duration * s

    press = pressure * (1 + 0.1 * np.sin(np.pi * s))
    samples = []
    for k in range(N):
        action = Action.DOWN if k == 0 else Action.UP if k == N - 1 else Action.MOVE
        samples.append(
            TouchEvent(phone_id, user_id, doc_id, float(t[k]), action, orientation,
                       float(pts[k, 0]), float(pts[k, 1]), float(press[k]), area, f_orient)
        )
    return Stroke(tuple(samples), prev_end)


def _draw(rng, mean, cov):
    if cov.ndim == 2:
        return rng.multivariate_normal(mean, cov)
    return mean + rng.normal(size=N_LATENT) * np.sqrt(cov)


# ---------------------------------------------------------------------------
# sessions and corpora
# ---------------------------------------------------------------------------


def generate_session(spec: SyntheticUserSpec, n_strokes: int, doc_id: str = "s1", week: int = 1,
                     raw: bool = False, screen: ScreenSpec | None = None) -> Session:
    """Deterministic in (spec, n_strokes, doc_id, week).

    With ``raw=True`` the strokes are in pixels of ``screen`` (ready to be
    written as a log); the returned vectors are always computed from the
    normalized trace.
    """
    if screen is None:
        screen = ScreenSpec(spec.phone_id, *SCREEN_PX)
    elif screen.phone_id != spec.phone_id:
        raise ValueError(f"screen spec is for {screen.phone_id!r}, user is on {spec.phone_id!r}")
    rng = np.random.default_rng(derive_seed(spec.seed, spec.user_id, doc_id, week))
    offset = rng.normal(0.0, spec.session_drift, size=N_LATENT) if spec.session_drift > 0 else np.zeros(N_LATENT)
    vectors, strokes = [], []
    t = 0.0
    prev_end = None
    for i in range(n_strokes):
        if i > 0:
            t = prev_end + math.exp(math.log(spec.interval_median_ms) + spec.interval_sigma * rng.normal())
        vertical = rng.random() < spec.p_vertical
        if vertical:
            direction = Direction.UP if rng.random() < 0.5 else Direction.DOWN
            z = _draw(rng, spec.mean_vertical + offset, spec.cov)
        else:
            direction = Direction.LEFT if rng.random() < 0.5 else Direction.RIGHT
            z = _draw(rng, spec.mean_horizontal + offset, spec.cov)
        orient = PhoneOrientation.LANDSCAPE if rng.random() < spec.p_landscape else PhoneOrientation.PORTRAIT
        stroke = render_stroke(z, direction, t, rng, spec.user_id, doc_id, spec.phone_id, orient, prev_end)
        fv = extract_features(stroke, i, week)
        vectors.append(fv)
        strokes.append(render_px(stroke, screen) if raw else stroke)
        prev_end = stroke.samples[-1].t
    return Session(vectors, strokes)


def render_px(stroke: Stroke, screen: ScreenSpec) -> Stroke:
    return Stroke(
        tuple(replace(e, x=e.x * screen.width_px, y=e.y * screen.height_px)
              for e in stroke.samples),
        stroke.prev_stroke_end_t,
    )


def simplex_means(n_users: int, separation: float, dims: int, rng: np.random.Generator) -> np.ndarray:
    """User means with pairwise Euclidean distance exactly ``separation`` when n_users <= dims."""
    if n_users <= dims:
        Q, _ = np.linalg.qr(rng.normal(size=(dims, dims)))
        return separation / math.sqrt(2) * Q[:, :n_users].T
    V = rng.normal(size=(n_users, dims))
    return separation / math.sqrt(2) * V / np.linalg.norm(V, axis=1, keepdims=True)


def make_population(n_users: int, separation: float, seed: int = 0, n_informative: int = 10,
                    n_phones: int = 1, phone_offset: float = 0.0, session_drift: float = 0.2,
                    correlation: float = 0.0, p_vertical: float = 0.5) -> list[SyntheticUserSpec]:
    """Users whose means differ by ``separation`` standard deviations on the informative parameters."""
    if not 1 <= n_informative <= N_LATENT:
        raise ValueError(f"n_informative must lie in [1, {N_LATENT}]")
    rng = np.random.default_rng(derive_seed(seed, "population"))
    mv = np.zeros((n_users, N_LATENT))
    mh = np.zeros((n_users, N_LATENT))
    mv[:, :n_informative] = simplex_means(n_users, separation, n_informative, rng)
    mh[:, :n_informative] = simplex_means(n_users, separation, n_informative, rng)
    offsets = np.zeros((n_phones, N_LATENT))
    if phone_offset:
        dirs = rng.normal(size=(n_phones, n_informative))
        offsets[:, :n_informative] = phone_offset * dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    if correlation:
        idx = np.arange(N_LATENT)
        cov = correlation ** np.abs(idx[:, None] - idx[None, :])
    else:
        cov = np.ones(N_LATENT)
    width = len(str(n_users - 1))
    specs = []
    for u in range(n_users):
        p = u % n_phones
        specs.append(
            SyntheticUserSpec(
                user_id=f"u{u:0{width}d}",
                phone_id=f"phone{p}",
                mean_vertical=mv[u] + offsets[p],
                mean_horizontal=mh[u] + offsets[p],
                cov=cov,
                p_vertical=p_vertical,
                session_drift=session_drift,
                seed=derive_seed(seed, "user", u),
            )
        )
    return specs


def generate_corpus(specs, strokes_per_session: int = 120, week1_sessions: int = 3,
                    week2_sessions: int = 1) -> FeatureTable:
    vectors = []
    for spec in specs:
        for wk, count in ((1, week1_sessions), (2, week2_sessions)):
            for s in range(count):
                vectors.extend(generate_session(spec, strokes_per_session, f"w{wk}s{s + 1}", wk).vectors)
    return FeatureTable.from_vectors(vectors)


def synthetic_corpus(n_users: int = 10, separation: float = 6.0, seed: int = 0, strokes_per_session: int = 120,
                     week1_sessions: int = 3, week2_sessions: int = 1, **population_kw) -> FeatureTable:
    return generate_corpus(
        make_population(n_users, separation, seed, **population_kw),
        strokes_per_session, week1_sessions, week2_sessions,
    )
