"""Feature informativeness and redundancy."""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .features import CATEGORICAL_FEATURES, FEATURE_NAMES

PRUNED_FEATURES = ("trajectory_length", "end_to_end_direction", "avg_velocity")


@dataclass(frozen=True)
class BinningSpec:
    n_bins: int = 50
    lo_quantile: float = 0.10
    hi_quantile: float = 0.90

    def __post_init__(self):
        if self.n_bins < 2:
            raise ValueError("n_bins must be at least 2")
        if not 0 <= self.lo_quantile < self.hi_quantile <= 1:
            raise ValueError("need 0 <= lo_quantile < hi_quantile <= 1")


def quantile_bin(values, spec: BinningSpec = BinningSpec()) -> np.ndarray:
    """Equal-width bins between two quantiles; values outside are clamped to the edge bins."""
    v = np.asarray(values, dtype=np.float64)
    lo, hi = np.quantile(v, [spec.lo_quantile, spec.hi_quantile])
    if hi <= lo:
        return np.where(v > hi, spec.n_bins - 1, 0).astype(np.int64)
    idx = np.floor((v - lo) / (hi - lo) * spec.n_bins).astype(np.int64)
    return np.clip(idx, 0, spec.n_bins - 1)


def _entropy(counts: np.ndarray) -> float:
    c = counts[counts > 0].astype(np.float64)
    p = c / c.sum()
    return float(-(p * np.log(p)).sum())


def relative_mutual_information(feature, user_ids, spec: BinningSpec = BinningSpec(), categorical: bool = False) -> float:
    """1 - H(U|F)/H(U) from the joint (bin, user) histogram."""
    f = np.asarray(feature)
    _, u = np.unique(np.asarray(user_ids), return_inverse=True)
    if u.max(initial=-1) < 1:
        raise ValueError("relative mutual information needs at least two users")
    if categorical:
        _, bins = np.unique(f, return_inverse=True)
    else:
        bins = quantile_bin(f, spec)
    joint = np.zeros((bins.max() + 1, u.max() + 1))
    np.add.at(joint, (bins, u), 1.0)
    h_u = _entropy(joint.sum(axis=0))
    n = joint.sum()
    h_u_given_f = sum(row.sum() / n * _entropy(row) for row in joint if row.sum() > 0)
    return float(min(max(1.0 - h_u_given_f / h_u, 0.0), 1.0))


def correlation_matrix(X) -> np.ndarray:
    """Pearson correlations; constant columns are uncorrelated with everything."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] < 2:
        raise ValueError("correlation needs at least two rows")
    Z = X - X.mean(axis=0)
    sd = np.sqrt((Z * Z).mean(axis=0))
    ok = sd > 0
    Z[:, ok] /= sd[ok]
    Z[:, ~ok] = 0.0
    R = Z.T @ Z / X.shape[0]
    R = np.clip((R + R.T) / 2, -1.0, 1.0)
    np.fill_diagonal(R, 1.0)
    return R


def prune_features(names) -> list[str]:
    """Drop the three redundant features; everything else passes through."""
    names = list(names)
    unknown = [n for n in names if n not in FEATURE_NAMES]
    if unknown:
        raise ValueError(f"unknown feature names: {unknown}")
    missing = [p for p in PRUNED_FEATURES if p not in names]
    if missing and len(missing) < len(PRUNED_FEATURES):
        warnings.warn(f"prune targets already absent: {missing}", stacklevel=2)
    return [n for n in names if n not in PRUNED_FEATURES]


@dataclass
class FeatureReport:
    names: list[str]
    informativeness: dict[str, float]
    correlation: np.ndarray
    pruned: list[str]

    def ranking(self) -> list[tuple[str, float]]:
        return sorted(self.informativeness.items(), key=lambda kv: (-kv[1], kv[0]))

    def to_json(self) -> dict:
        return {
            "ranking": [{"feature": n, "relative_mutual_information": v} for n, v in self.ranking()],
            "pruned_features": self.pruned,
        }

    def correlation_csv(self) -> str:
        lines = ["feature," + ",".join(self.names)]
        for n, row in zip(self.names, self.correlation):
            lines.append(n + "," + ",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"


def feature_report(X, user_ids, spec: BinningSpec = BinningSpec(), names=FEATURE_NAMES) -> FeatureReport:
    X = np.asarray(X, dtype=np.float64)
    ok = ~np.isnan(X).any(axis=1)
    X, users = X[ok], np.asarray(user_ids)[ok]
    info = {
        n: relative_mutual_information(X[:, j], users, spec, categorical=n in CATEGORICAL_FEATURES)
        for j, n in enumerate(names)
    }
    return FeatureReport(list(names), info, correlation_matrix(X), prune_features(names))


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)
