"""Per-user binary classifiers: kNN over a k-d tree and an rbf-kernel SVM.

Labels are 1 for the legitimate user and 0 for everyone else. Both models
score so that larger means "more likely the legitimate user".
"""
from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .metrics import eer

MODEL_FORMAT_VERSION = 1

KNN_GRID = (1, 3, 5, 7)
SVM_C_GRID = tuple(2.0**e for e in range(-3, 8))
SVM_GAMMA_GRID = tuple(2.0**e for e in range(-7, 4))
SVM_TOL = 1e-3
SVM_MAX_ITER = 100_000


class SvmConvergenceError(RuntimeError):
    pass


def derive_seed(seed: int, *keys) -> int:
    """Stable child seed from a parent seed and any printable keys."""
    h = hashlib.sha256(repr((int(seed),) + tuple(str(k) for k in keys)).encode())
    return int.from_bytes(h.digest()[:8], "little") >> 1


# ---------------------------------------------------------------------------
# preprocessing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] == 0:
            raise ValueError("cannot fit a standardizer on zero rows")
        mu = X.mean(axis=0)
        return cls(mu, np.sqrt(((X - mu) ** 2).mean(axis=0)))

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        safe = np.where(self.std > 0, self.std, 1.0)
        return np.where(self.std > 0, (X - self.mean) / safe, 0.0)


def balance_classes(positives, negatives, seed: int):
    """Subsample negatives without replacement down to the positive count."""
    pos = np.asarray(positives)
    neg = np.asarray(negatives)
    if len(neg) < len(pos):
        warnings.warn(f"only {len(neg)} negatives for {len(pos)} positives; keeping all", stacklevel=2)
        return pos, neg
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.choice(len(neg), size=len(pos), replace=False))
    return pos, neg[keep]


def stratified_folds(y, folds: int, seed: int) -> np.ndarray:
    """Fold id per sample, each class dealt round-robin after a seeded shuffle."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    out = np.empty(len(y), dtype=np.int64)
    for label in np.unique(y):
        idx = np.flatnonzero(y == label)
        idx = idx[rng.permutation(len(idx))]
        out[idx] = np.arange(len(idx)) % folds
    return out


def feasible_folds(y, folds: int) -> int:
    counts = np.bincount(np.asarray(y, dtype=np.int64), minlength=2)
    f = min(folds, int(counts.min()))
    if f < 2:
        raise ValueError("need at least two samples of each class for cross-validation")
    if f < folds:
        warnings.warn(f"only {f} folds feasible (asked for {folds})", stacklevel=3)
    return f


# ---------------------------------------------------------------------------
# kNN
# ---------------------------------------------------------------------------


class KdTree:
    def __init__(self, X, leaf_size: int = 8):
        self.X = np.ascontiguousarray(X, dtype=np.float64)
        self._arrays = kernels.build_kdtree(self.X, leaf_size)

    def query(self, Q, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Indices and squared distances of the k nearest points; ties go to the lower index."""
        if not 1 <= k <= len(self.X):
            raise ValueError(f"k={k} outside [1, {len(self.X)}]")
        Q = np.ascontiguousarray(np.atleast_2d(Q), dtype=np.float64)
        return kernels.kd_query(self.X, *self._arrays, Q, k)


@dataclass
class KnnModel:
    X: np.ndarray
    labels: np.ndarray
    k: int
    tree: KdTree = field(repr=False, default=None)

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.tree is None:
            self.tree = KdTree(self.X)

    def positive_counts(self, Q) -> np.ndarray:
        idx, _ = self.tree.query(Q, self.k)
        return self.labels[idx].sum(axis=1)

    def score(self, Q) -> np.ndarray:
        return self.positive_counts(Q) / self.k


def _feasible_ks(n_train: int, grid=KNN_GRID) -> tuple[int, ...]:
    ks = tuple(k for k in grid if k <= n_train)
    return ks or (1,)


def knn_cross_validate(X, y, seed: int, grid=KNN_GRID, folds: int = 5) -> tuple[int, float]:
    f = feasible_folds(y, folds)
    fold = stratified_folds(y, f, seed)
    ks = _feasible_ks(int((fold != 0).sum()), grid)
    kmax = max(ks)
    per_k = {k: [] for k in ks}
    for i in range(f):
        tr, te = fold != i, fold == i
        tree = KdTree(X[tr])
        idx, _ = tree.query(X[te], min(kmax, int(tr.sum())))
        lab = y[tr][idx]
        for k in ks:
            per_k[k].append(eer(lab[:, :k].mean(axis=1), y[te] == 1))
    means = {k: float(np.mean(v)) for k, v in per_k.items()}
    best = min(ks, key=lambda k: (means[k], k))
    return best, means[best]


def knn_train(pos, neg, seed: int, grid=KNN_GRID, folds: int = 5) -> tuple[KnnModel, float]:
    """Balance, pick k by stratified CV, and store the training set. Inputs already standardized."""
    if len(neg) > len(pos):
        pos, neg = balance_classes(pos, neg, derive_seed(seed, "balance"))
    X = np.vstack([pos, neg])
    y = np.concatenate([np.ones(len(pos), np.int64), np.zeros(len(neg), np.int64)])
    k, cv = knn_cross_validate(X, y, derive_seed(seed, "folds"), _feasible_ks(len(X), grid), folds)
    return KnnModel(X, y, k), cv


# ---------------------------------------------------------------------------
# SVM
# ---------------------------------------------------------------------------


def sq_dists(A, B) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    d = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.maximum(d, 0.0)


def rbf_kernel(A, B, gamma: float) -> np.ndarray:
    return np.exp(-gamma * sq_dists(A, B))


@dataclass
class SvmModel:
    support: np.ndarray
    coef: np.ndarray  # alpha_i * y_i
    bias: float
    C: float
    gamma: float
    n_iter: int = 0
    kkt_gap: float = 0.0

    def decision(self, Q) -> np.ndarray:
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        if len(self.support) == 0:
            return np.full(len(Q), self.bias)
        return rbf_kernel(Q, self.support, self.gamma) @ self.coef + self.bias

    score = decision


def _solve(K, y_pm, C, tol, max_iter):
    alpha, G, it, gap = kernels.smo_solve(
        np.ascontiguousarray(K), np.ascontiguousarray(y_pm, dtype=np.float64), float(C), float(tol), int(max_iter)
    )
    if gap >= tol:
        raise SvmConvergenceError(f"SMO stopped after {it} updates with KKT gap {gap:.3g} (C={C:g})")
    return alpha, G, it, gap


def svm_fit_kernel(K, y, C, tol=SVM_TOL, max_iter=SVM_MAX_ITER):
    """Solve the dual on a precomputed kernel. Returns (alpha, bias, n_iter, gap)."""
    y_pm = np.where(np.asarray(y) == 1, 1.0, -1.0)
    alpha, G, it, gap = _solve(K, y_pm, C, tol, max_iter)
    return alpha, kernels.smo_bias(alpha, G, y_pm, C), it, gap


def svm_fit(X, y, C: float, gamma: float, tol=SVM_TOL, max_iter=SVM_MAX_ITER) -> SvmModel:
    X = np.asarray(X, dtype=np.float64)
    K = rbf_kernel(X, X, gamma)
    try:
        alpha, b, it, gap = svm_fit_kernel(K, y, C, tol, max_iter)
    except SvmConvergenceError as exc:
        raise SvmConvergenceError(f"{exc}, gamma={gamma:g}") from None
    sv = alpha > 0
    y_pm = np.where(np.asarray(y) == 1, 1.0, -1.0)
    return SvmModel(X[sv].copy(), (alpha * y_pm)[sv], b, C, gamma, it, gap)


def dual_objective(alpha, K, y) -> float:
    """0.5 a'Qa - sum(a), the quantity SMO minimises."""
    y_pm = np.where(np.asarray(y) == 1, 1.0, -1.0)
    ay = alpha * y_pm
    return float(0.5 * ay @ K @ ay - alpha.sum())


def svm_cross_validate(
    X, y, seed: int, Cs=SVM_C_GRID, gammas=SVM_GAMMA_GRID, folds: int = 5, tol=SVM_TOL, max_iter=SVM_MAX_ITER
) -> tuple[tuple[float, float], float, list[str]]:
    """Grid search by mean per-fold EER. Ties go to smaller C, then smaller gamma."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    f = feasible_folds(y, folds)
    fold = stratified_folds(y, f, seed)
    D = sq_dists(X, X)
    y_pm = np.where(y == 1, 1.0, -1.0)
    results = {}
    skipped = []
    for gamma in sorted(gammas):
        K = np.exp(-gamma * D)
        for C in sorted(Cs):
            errs = []
            try:
                for i in range(f):
                    tr = np.flatnonzero(fold != i)
                    te = np.flatnonzero(fold == i)
                    alpha, b, _, _ = svm_fit_kernel(K[np.ix_(tr, tr)], y[tr], C, tol, max_iter)
                    s = K[np.ix_(te, tr)] @ (alpha * y_pm[tr]) + b
                    errs.append(eer(s, y[te] == 1))
            except SvmConvergenceError:
                skipped.append(f"C={C:g}, gamma={gamma:g}")
                continue
            results[(C, gamma)] = float(np.mean(errs))
    if not results:
        raise SvmConvergenceError("no grid cell converged")
    best = min(results, key=lambda cg: (results[cg], cg[0], cg[1]))
    return best, results[best], skipped


def svm_train(pos, neg, seed: int = 0, Cs=SVM_C_GRID, gammas=SVM_GAMMA_GRID, folds: int = 5) -> tuple[SvmModel, float]:
    """Tune (C, gamma) by CV and fit on everything. Inputs standardized and balanced."""
    X = np.vstack([pos, neg])
    y = np.concatenate([np.ones(len(pos), np.int64), np.zeros(len(neg), np.int64)])
    (C, gamma), cv, skipped = svm_cross_validate(X, y, derive_seed(seed, "folds"), Cs, gammas, folds)
    if skipped:
        warnings.warn(f"skipped non-converging grid cells: {skipped}", stacklevel=2)
    return svm_fit(X, y, C, gamma), cv


# ---------------------------------------------------------------------------
# per-user model
# ---------------------------------------------------------------------------


@dataclass
class UserModel:
    user_id: str
    axis: str
    classifier: str
    features: list[str]
    standardizer: Standardizer
    model: KnnModel | SvmModel
    cv_eer: float
    n_positive: int
    n_negative: int

    @property
    def hyperparameters(self) -> dict:
        if isinstance(self.model, KnnModel):
            return {"k": self.model.k}
        return {"C": self.model.C, "gamma": self.model.gamma}

    def score(self, X_raw) -> np.ndarray:
        """Per-stroke score: positive-neighbour fraction (kNN) or decision value (SVM)."""
        return self.model.score(self.standardizer.apply(X_raw))

    def positive_counts(self, X_raw) -> np.ndarray:
        if not isinstance(self.model, KnnModel):
            raise TypeError("neighbour counts exist only for kNN models")
        return self.model.positive_counts(self.standardizer.apply(X_raw))

    @property
    def default_threshold(self) -> float:
        return 0.5 if self.classifier == "knn" else 0.0

    def to_dict(self) -> dict:
        d = {
            "format_version": MODEL_FORMAT_VERSION,
            "user_id": self.user_id,
            "axis": self.axis,
            "classifier": self.classifier,
            "features": list(self.features),
            "standardizer": {"mean": self.standardizer.mean.tolist(), "std": self.standardizer.std.tolist()},
            "cv_eer": self.cv_eer,
            "n_positive": self.n_positive,
            "n_negative": self.n_negative,
            "hyperparameters": self.hyperparameters,
        }
        m = self.model
        if isinstance(m, KnnModel):
            d["knn"] = {"vectors": m.X.tolist(), "labels": m.labels.tolist()}
        else:
            d["svm"] = {
                "support_vectors": m.support.tolist(),
                "coefficients": m.coef.tolist(),
                "bias": m.bias,
                "n_iter": m.n_iter,
                "kkt_gap": m.kkt_gap,
            }
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "UserModel":
        if d.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format {d.get('format_version')!r}")
        st = Standardizer(np.array(d["standardizer"]["mean"]), np.array(d["standardizer"]["std"]))
        hp = d["hyperparameters"]
        if d["classifier"] == "knn":
            nf = len(d["features"])
            X = np.array(d["knn"]["vectors"], dtype=np.float64).reshape(-1, nf)
            model = KnnModel(X, np.array(d["knn"]["labels"]), int(hp["k"]))
        else:
            s = d["svm"]
            nf = len(d["features"])
            model = SvmModel(
                np.array(s["support_vectors"], dtype=np.float64).reshape(-1, nf),
                np.array(s["coefficients"], dtype=np.float64),
                float(s["bias"]),
                float(hp["C"]),
                float(hp["gamma"]),
                int(s["n_iter"]),
                float(s["kkt_gap"]),
            )
        return cls(
            d["user_id"], d["axis"], d["classifier"], list(d["features"]), st, model,
            float(d["cv_eer"]), int(d["n_positive"]), int(d["n_negative"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "UserModel":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class TrainingConfig:
    classifier: str = "svm"
    knn_grid: tuple[int, ...] = KNN_GRID
    svm_C: tuple[float, ...] = SVM_C_GRID
    svm_gamma: tuple[float, ...] = SVM_GAMMA_GRID
    folds: int = 5


def train_user_model(
    user_id: str,
    axis: str,
    pos_raw,
    neg_raw,
    features: list[str],
    seed: int,
    config: TrainingConfig = TrainingConfig(),
) -> UserModel:
    """balance -> standardize (fit on the balanced training set) -> tune -> fit."""
    pos_raw = np.asarray(pos_raw, dtype=np.float64)
    neg_raw = np.asarray(neg_raw, dtype=np.float64)
    if len(pos_raw) == 0 or len(neg_raw) == 0:
        raise ValueError(f"user {user_id}: empty positive or negative training set")
    pos, neg = balance_classes(pos_raw, neg_raw, derive_seed(seed, user_id, axis, "balance"))
    st = Standardizer.fit(np.vstack([pos, neg]))
    P, N = st.apply(pos), st.apply(neg)
    if config.classifier == "knn":
        model, cv = knn_train(P, N, derive_seed(seed, user_id, axis), config.knn_grid, config.folds)
    elif config.classifier == "svm":
        model, cv = svm_train(P, N, derive_seed(seed, user_id, axis), config.svm_C, config.svm_gamma, config.folds)
    else:
        raise ValueError(f"unknown classifier {config.classifier!r}")
    return UserModel(user_id, axis, config.classifier, list(features), st, model, cv, len(P), len(N))
