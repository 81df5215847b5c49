"""Scenario splits, multi-stroke fusion, EER reports and the three sweeps."""
from __future__ import annotations

import hashlib
import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .analysis import prune_features
from .authsim import expected_relogin_interval
from .classify import (
    KNN_GRID,
    SVM_C_GRID,
    SVM_GAMMA_GRID,
    TrainingConfig,
    UserModel,
    derive_seed,
    train_user_model,
)
from .dataset import FeatureTable, sessions_in_order
from .features import FEATURE_INDEX, FEATURE_NAMES
from .metrics import oriented, roc_and_eer

log = logging.getLogger(__name__)

SCENARIOS = ("intra-session", "inter-session", "inter-week")


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class DecisionWindow:
    n: int = 11
    stride: int = 1

    def __post_init__(self):
        if self.n < 1 or self.stride < 1:
            raise ValueError("window size and stride must be positive")


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "inter-session"
    classifier: str = "svm"
    axis: str = "vertical"
    n: int = 11
    stride: int = 1
    seed: int = 0
    train_fraction: float = 2 / 3
    features: tuple[str, ...] = tuple(prune_features(FEATURE_NAMES))
    knn_grid: tuple[int, ...] = KNN_GRID
    svm_C: tuple[float, ...] = SVM_C_GRID
    svm_gamma: tuple[float, ...] = SVM_GAMMA_GRID
    folds: int = 5
    workers: int = 1
    include_roc: bool = False

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"scenario must be one of {SCENARIOS}")
        if self.classifier not in ("knn", "svm"):
            raise ValueError("classifier must be knn or svm")
        if self.axis not in ("vertical", "horizontal"):
            raise ValueError("axis must be vertical or horizontal")
        DecisionWindow(self.n, self.stride)
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie in (0, 1)")
        unknown = set(self.features) - set(FEATURE_NAMES)
        if unknown:
            raise ValueError(f"unknown features {sorted(unknown)}")

    @property
    def training(self) -> TrainingConfig:
        return TrainingConfig(self.classifier, tuple(self.knn_grid), tuple(self.svm_C), tuple(self.svm_gamma), self.folds)

    def to_dict(self) -> dict:
        d = asdict(self)
        # execution detail, not part of the experiment's identity
        del d["workers"]
        for k in ("features", "knn_grid", "svm_C", "svm_gamma"):
            d[k] = list(d[k])
        return d


# ---------------------------------------------------------------------------
# fusion
# ---------------------------------------------------------------------------


def fuse_svm(scores) -> float:
    s = np.asarray(scores, dtype=np.float64)
    if s.size == 0:
        raise ValueError("nothing to fuse")
    return float(s.mean())


def fuse_knn(positive_counts, k: int) -> float:
    c = np.asarray(positive_counts)
    if c.size == 0:
        raise ValueError("nothing to fuse")
    return float(c.sum() / (c.size * k))


def window_scores(per_stroke, n: int, stride: int = 1) -> np.ndarray:
    """Mean score of each sliding window of n consecutive strokes."""
    v = np.asarray(per_stroke, dtype=np.float64)
    if v.size < n:
        return np.empty(0)
    return sliding_window_view(v, n)[::stride].mean(axis=1)


# ---------------------------------------------------------------------------
# scenario splits
# ---------------------------------------------------------------------------


@dataclass
class Partition:
    train: np.ndarray
    test_sessions: list[np.ndarray]


@dataclass
class Split:
    partitions: dict[str, list[Partition]]  # user -> one Partition per rotation
    excluded: dict[str, str] = field(default_factory=dict)


def _train_draw(table: FeatureTable, rows: np.ndarray, seed: int, user: str) -> np.ndarray:
    """Uniform [0, 1) draw per stroke, keyed on the stroke's own values.

    A stroke's side of the split never depends on which other strokes exist,
    so removing test strokes cannot move anything into or out of training.
    """
    out = np.empty(len(rows))
    for j, r in enumerate(rows):
        key = hashlib.sha256(table.X[r].tobytes()).hexdigest()
        out[j] = derive_seed(seed, "intra", user, table.doc[r], key) / 2.0**63
    return out


def scenario_split(table: FeatureTable, scenario: str, seed: int = 0, train_fraction: float = 2 / 3) -> Split:
    """Train/test row indices per user and rotation."""
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}")
    parts: dict[str, list[Partition]] = {}
    excluded: dict[str, str] = {}
    for user in table.users():
        rows = np.flatnonzero(table.user == user)
        sessions = sessions_in_order(table, rows)
        if scenario == "intra-session":
            train, test = [], []
            for s in sessions:
                pick = _train_draw(table, s, seed, user) < train_fraction
                train.append(s[pick])
                test.append(s[~pick])
            test = [t for t in test if len(t)]
            tr = np.sort(np.concatenate(train)) if train else np.empty(0, np.int64)
            if len(tr) == 0 or not test:
                excluded[user] = "too few strokes for a stroke-level split"
                continue
            parts[user] = [Partition(tr, test)]
        elif scenario == "inter-session":
            w1 = [s for s in sessions if table.week[s[0]] == 1]
            if len(w1) < 2:
                excluded[user] = f"needs at least 2 week-1 sessions, has {len(w1)}"
                continue
            parts[user] = [
                Partition(np.concatenate([s for j, s in enumerate(w1) if j != r]), [w1[r]]) for r in range(len(w1))
            ]
        else:
            w1 = [s for s in sessions if table.week[s[0]] == 1]
            w2 = [s for s in sessions if table.week[s[0]] == 2]
            if not w1 or not w2:
                excluded[user] = "needs week-1 and week-2 sessions"
                continue
            parts[user] = [Partition(np.concatenate(w1), w2)]
    for user, why in excluded.items():
        log.warning("user %s excluded from %s: %s", user, scenario, why)
    return Split(parts, excluded)


# ---------------------------------------------------------------------------
# scoring
# ---------------------------------------------------------------------------


@dataclass
class RotationScores:
    genuine: list[np.ndarray]  # per-stroke scores, one array per test session
    impostor: list[np.ndarray]
    model: UserModel
    test_inter_stroke_ms: np.ndarray


@dataclass
class UserScores:
    user: str
    rotations: list[RotationScores] = field(default_factory=list)
    error: str | None = None


def _prepare(table: FeatureTable, config: ExperimentConfig) -> FeatureTable:
    t = table.subset(table.axis_mask(config.axis))
    return t.subset(t.complete_rows())


def _score_user(user, table, split, config, cols) -> UserScores:
    out = UserScores(user)
    others = [u for u in split.partitions if u != user]
    ist = FEATURE_INDEX["inter_stroke_time"]
    try:
        for r, part in enumerate(split.partitions[user]):
            corr = {v: split.partitions[v][r % len(split.partitions[v])] for v in others}
            neg_rows = np.concatenate([corr[v].train for v in others])
            model = train_user_model(
                user,
                config.axis,
                table.X[np.ix_(part.train, cols)],
                table.X[np.ix_(neg_rows, cols)],
                [FEATURE_NAMES[c] for c in cols],
                derive_seed(config.seed, "rotation", r),
                config.training,
            )
            gen = [model.score(table.X[np.ix_(s, cols)]) for s in part.test_sessions]
            imp = [model.score(table.X[np.ix_(s, cols)]) for v in others for s in corr[v].test_sessions]
            gaps = np.concatenate([table.X[s, ist] for s in part.test_sessions])
            out.rotations.append(RotationScores(gen, imp, model, gaps))
    except Exception as exc:  # a failing user is recorded, not fatal
        log.warning("user %s failed: %s", user, exc)
        out.error = f"{type(exc).__name__}: {exc}"
        out.rotations = []
    return out


@dataclass
class ScoredExperiment:
    config: ExperimentConfig
    users: list[UserScores]
    excluded: dict[str, str]
    input_hash: str


def score_experiment(table: FeatureTable, config: ExperimentConfig) -> ScoredExperiment:
    """Split, train one model per user and rotation, and score every test stroke."""
    t = _prepare(table, config)
    split = scenario_split(t, config.scenario, config.seed, config.train_fraction)
    if len(split.partitions) < 2:
        raise ExperimentError(
            f"{config.scenario}/{config.axis}: need at least two eligible users, have {len(split.partitions)}"
        )
    cols = [FEATURE_INDEX[f] for f in config.features]
    users = sorted(split.partitions)
    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as ex:
            scored = list(ex.map(lambda u: _score_user(u, t, split, config, cols), users))
    else:
        scored = [_score_user(u, t, split, config, cols) for u in users]
    return ScoredExperiment(config, scored, dict(split.excluded), table.content_hash())


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def boxplot_stats(values) -> dict:
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        return {"n": 0, "median": None, "q25": None, "q75": None, "whisker_low": None, "whisker_high": None, "outliers": []}
    q25, med, q75 = np.percentile(v, [25, 50, 75])
    iqr = q75 - q25
    inside = v[(v >= q25 - 1.5 * iqr) & (v <= q75 + 1.5 * iqr)]
    return {
        "n": int(v.size),
        "median": float(med),
        "q25": float(q25),
        "q75": float(q75),
        "whisker_low": float(inside.min()),
        "whisker_high": float(inside.max()),
        "outliers": [float(x) for x in v if x < inside.min() or x > inside.max()],
    }


def _finite(x: float):
    return float(x) if math.isfinite(x) else None


def _roc_json(roc) -> list:
    return [[_finite(th) if math.isfinite(th) else ("inf" if th > 0 else "-inf"), far, frr] for th, far, frr in roc.points()]


def build_report(scored: ScoredExperiment, n: int | None = None, stride: int | None = None) -> dict:
    cfg = scored.config
    n = cfg.n if n is None else n
    stride = cfg.stride if stride is None else stride
    users = {}
    failures = {}
    skipped = {}
    pooled_gen, pooled_imp = [], []
    eers = []
    ts_all = []
    for us in scored.users:
        if us.error:
            failures[us.user] = us.error
            continue
        rot_entries = []
        for rs in us.rotations:
            g = np.concatenate([window_scores(s, n, stride) for s in rs.genuine] or [np.empty(0)])
            i = np.concatenate([window_scores(s, n, stride) for s in rs.impostor] or [np.empty(0)])
            if g.size == 0 or i.size == 0:
                continue
            roc = roc_and_eer(np.concatenate([g, i]), np.r_[np.ones(g.size, bool), np.zeros(i.size, bool)])
            entry = {
                "eer": oriented(roc.eer),
                "raw_eer": roc.eer,
                "n_genuine_decisions": int(g.size),
                "n_impostor_decisions": int(i.size),
                "hyperparameters": rs.model.hyperparameters,
                "cv_eer": rs.model.cv_eer,
                "eer_threshold": _finite(roc.eer_threshold),
            }
            if cfg.include_roc:
                entry["roc"] = _roc_json(roc)
            rot_entries.append(entry)
            pooled_gen.append(g)
            pooled_imp.append(i)
        if not rot_entries:
            skipped[us.user] = f"fewer than {n} test strokes in every session"
            log.warning("user %s skipped: %s", us.user, skipped[us.user])
            continue
        gaps = np.concatenate([rs.test_inter_stroke_ms for rs in us.rotations])
        ts = float(np.median(gaps)) / 1000.0
        ts_all.append(ts)
        e = float(np.mean([r["eer"] for r in rot_entries]))
        eers.append(e)
        users[us.user] = {
            "eer": e,
            "rotations": rot_entries,
            "median_inter_stroke_s": ts,
            "time_to_first_decision_s": n * ts,
            "expected_relogin_interval_s": _finite(expected_relogin_interval(e, ts)),
        }
    pooled = None
    if pooled_gen and pooled_imp:
        g, i = np.concatenate(pooled_gen), np.concatenate(pooled_imp)
        pooled = oriented(roc_and_eer(np.r_[g, i], np.r_[np.ones(g.size, bool), np.zeros(i.size, bool)]).eer)
    ts_med = float(np.median(ts_all)) if ts_all else None
    med_eer = boxplot_stats(eers)["median"]
    return {
        "config": {**cfg.to_dict(), "n": n, "stride": stride},
        "input_sha256": scored.input_hash,
        "users": users,
        "summary": {
            "eer": boxplot_stats(eers),
            "pooled_eer": pooled,
            "median_inter_stroke_s": ts_med,
            "time_to_first_decision_s": None if ts_med is None else n * ts_med,
            "expected_relogin_interval_s": (
                None if ts_med is None or med_eer is None else _finite(expected_relogin_interval(med_eer, ts_med))
            ),
        },
        "excluded": dict(sorted(scored.excluded.items())),
        "skipped": dict(sorted(skipped.items())),
        "failed": dict(sorted(failures.items())),
    }


def run_experiment(table: FeatureTable, config: ExperimentConfig) -> dict:
    """split -> balance -> standardize -> tune -> train -> fuse -> ROC/EER, per user."""
    return build_report(score_experiment(table, config))


def median_roc_csv(scored: ScoredExperiment, n: int | None = None, grid_points: int = 101) -> str:
    """FRR at a fixed FAR grid, median and quartiles across users."""
    cfg = scored.config
    n = cfg.n if n is None else n
    far_grid = np.linspace(0.0, 1.0, grid_points)
    curves = []
    for us in scored.users:
        for rs in us.rotations:
            g = np.concatenate([window_scores(s, n, cfg.stride) for s in rs.genuine] or [np.empty(0)])
            i = np.concatenate([window_scores(s, n, cfg.stride) for s in rs.impostor] or [np.empty(0)])
            if g.size == 0 or i.size == 0:
                continue
            roc = roc_and_eer(np.r_[g, i], np.r_[np.ones(g.size, bool), np.zeros(i.size, bool)])
            # far is non-increasing along the sweep; interpolate on the reversed arrays
            curves.append(np.interp(far_grid, roc.far[::-1], roc.frr[::-1]))
    rows = []
    if curves:
        C = np.vstack(curves)
        q25, med, q75 = np.percentile(C, [25, 50, 75], axis=0)
        rows = list(zip(far_grid, med, q25, q75))
    return curve_csv(rows)


def curve_csv(rows) -> str:
    lines = ["x,median,q25,q75"]
    for x, med, q25, q75 in rows:
        lines.append(",".join("" if v is None else repr(float(v)) for v in (x, med, q25, q75)))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def sweep_strokes(table: FeatureTable, config: ExperimentConfig, n_values) -> tuple[list[tuple], list[dict]]:
    """EER vs strokes per decision. Models are trained once; only the fusion changes."""
    scored = score_experiment(table, config)
    rows, reports = [], []
    for n in n_values:
        rep = build_report(scored, n=int(n))
        s = rep["summary"]["eer"]
        rows.append((int(n), s["median"], s["q25"], s["q75"]))
        reports.append(rep)
    return rows, reports


def _subset_users(table: FeatureTable, users) -> FeatureTable:
    return table.subset(np.isin(table.user, list(users)))


def sweep_subjects(table: FeatureTable, config: ExperimentConfig, counts, repetitions: int = 10) -> tuple[list[tuple], dict]:
    """EER vs number of enrolled subjects over seeded random subject draws."""
    population = _prepare(table, config).users()
    rows = []
    detail = {}
    for c in counts:
        c = int(c)
        if c < 2:
            raise ValueError("subject counts must be at least 2")
        if c >= len(population):
            draws = [population]
        else:
            draws = []
            for r in range(repetitions):
                rng = np.random.default_rng(derive_seed(config.seed, "subjects", c, r))
                draws.append(sorted(rng.choice(population, size=c, replace=False).tolist()))
        eers = []
        medians = []
        for users in draws:
            rep = run_experiment(_subset_users(table, users), config)
            e = [u["eer"] for u in rep["users"].values()]
            eers.extend(e)
            medians.append(rep["summary"]["eer"]["median"])
        s = boxplot_stats(eers)
        rows.append((min(c, len(population)), s["median"], s["q25"], s["q75"]))
        detail[str(c)] = {"draws": draws, "draw_medians": medians, "eer": s}
    return rows, detail


def user_phones(table: FeatureTable) -> dict[str, str]:
    """Most frequent phone per user; ties go to the lexicographically first phone."""
    out = {}
    for u in table.users():
        cnt = Counter(table.phone[table.user == u].tolist())
        out[u] = min(cnt, key=lambda p: (-cnt[p], p))
    return out


def device_influence(table: FeatureTable, config: ExperimentConfig) -> dict:
    """Same-phone vs mixed-phone EERs at matched subject counts."""
    prepared = _prepare(table, config)
    phones = user_phones(prepared)
    by_phone: dict[str, list[str]] = {}
    for u, p in sorted(phones.items()):
        by_phone.setdefault(p, []).append(u)
    usable = {p: us for p, us in by_phone.items() if len(us) >= 2}
    if not usable:
        raise ExperimentError("no phone has two or more users")
    m = min(len(us) for us in usable.values())
    population = sorted(phones)
    same, mixed = [], []
    arms = {"same_phone": {}, "mixed_phone": {}}
    for p, us in sorted(usable.items()):
        rng = np.random.default_rng(derive_seed(config.seed, "device", p))
        pick = us if len(us) == m else sorted(rng.choice(us, size=m, replace=False).tolist())
        rep = run_experiment(_subset_users(table, pick), config)
        e = [v["eer"] for v in rep["users"].values()]
        same.extend(e)
        arms["same_phone"][p] = {"users": pick, "eer": boxplot_stats(e)}
        pool = sorted(rng.choice(population, size=m, replace=False).tolist())
        rep = run_experiment(_subset_users(table, pool), config)
        e = [v["eer"] for v in rep["users"].values()]
        mixed.extend(e)
        arms["mixed_phone"][p] = {"users": pool, "eer": boxplot_stats(e)}
    s, x = boxplot_stats(same), boxplot_stats(mixed)
    return {
        "config": config.to_dict(),
        "input_sha256": table.content_hash(),
        "users_per_arm": m,
        "same_phone": s,
        "mixed_phone": x,
        "eer_gap": None if s["median"] is None or x["median"] is None else s["median"] - x["median"],
        "arms": arms,
    }


def with_overrides(config: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(config, **kw)
