import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import relative_mi_oracle
from touchauth.analysis import (
    PRUNED_FEATURES,
    BinningSpec,
    correlation_matrix,
    feature_report,
    prune_features,
    quantile_bin,
    relative_mutual_information,
)
from touchauth.features import FEATURE_NAMES


def test_uniform_bins_span_decile_range():
    rng = np.random.default_rng(0)
    v = rng.uniform(0, 1, 20_000)
    b = quantile_bin(v)
    assert b.min() == 0 and b.max() == 49
    # equal-width bins on [q10, q90]; bin 25 starts near 0.5
    inner = v[(b > 0) & (b < 49)]
    assert inner.min() == pytest.approx(0.1 + 0.8 / 50, abs=0.01)
    assert inner.max() == pytest.approx(0.9 - 0.8 / 50, abs=0.01)
    assert (b[v < 0.09] == 0).all() and (b[v > 0.91] == 49).all()


def test_constant_column_single_bin():
    assert (quantile_bin(np.full(10, 3.3)) == 0).all()


def test_outlier_clamped():
    v = np.r_[np.linspace(0, 1, 99), 1e9]
    b = quantile_bin(v)
    assert b[-1] == 49
    # the quantiles move by one rank at most, so bins shift by at most one
    assert np.abs(quantile_bin(v[:-1]) - b[:-1]).max() <= 1


def test_binning_spec_validation():
    with pytest.raises(ValueError):
        BinningSpec(n_bins=1)
    with pytest.raises(ValueError):
        BinningSpec(lo_quantile=0.9, hi_quantile=0.1)


def test_mi_constant_feature_zero():
    users = np.repeat(["a", "b", "c"], 20)
    assert relative_mutual_information(np.full(60, 2.0), users) == 0.0


def test_mi_separated_users_one():
    users = np.repeat(["a", "b"], 50)
    f = np.r_[np.zeros(50), np.ones(50)]
    assert abs(relative_mutual_information(f, users) - 1.0) < 1e-12


def test_mi_single_user_error():
    with pytest.raises(ValueError):
        relative_mutual_information(np.arange(5.0), ["a"] * 5)


def test_mi_matches_counter_oracle():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(20, 200))
        users = rng.integers(0, 2, n)
        f = rng.normal(users * rng.uniform(0, 2), 1.0)
        got = relative_mutual_information(f, users)
        want = relative_mi_oracle(quantile_bin(f).tolist(), users.tolist())
        assert abs(got - want) < 1e-10


def test_mi_categorical_uses_categories():
    users = np.repeat([0, 1], 4)
    f = np.array([0, 0, 0, 1, 1, 1, 1, 0])
    assert relative_mutual_information(f, users, categorical=True) == pytest.approx(
        relative_mi_oracle(f.tolist(), users.tolist()), abs=1e-12
    )


@given(st.integers(0, 10_000), st.floats(0.1, 100), st.floats(-100, 100))
@settings(max_examples=50, deadline=None)
def test_mi_affine_invariance(seed, scale, shift):
    rng = np.random.default_rng(seed)
    users = rng.integers(0, 3, 150)
    f = rng.normal(users, 1.0)
    a = relative_mutual_information(f, users)
    b = relative_mutual_information(f * scale + shift, users)
    # bins are defined by quantiles, so only a float-level edge change could differ
    fb, gb = quantile_bin(f), quantile_bin(f * scale + shift)
    if (fb == gb).all():
        assert abs(a - b) < 1e-12


def test_mi_permuted_labels_near_zero():
    rng = np.random.default_rng(2)
    n = 4000
    users = rng.integers(0, 4, n)
    f = rng.normal(users, 1.0)
    vals = [relative_mutual_information(f, rng.permutation(users)) for _ in range(100)]
    assert np.mean(vals) < 0.05
    assert all(0 <= v <= 1 for v in vals)


def test_correlation_examples():
    rng = np.random.default_rng(3)
    x = rng.normal(size=40)
    R = correlation_matrix(np.c_[x, x, -x, np.full(40, 7.0)])
    assert R[0, 1] == pytest.approx(1.0) and R[0, 2] == pytest.approx(-1.0)
    assert R[3, 3] == 1.0 and (R[3, :3] == 0).all()


def test_correlation_textbook_oracle_and_psd():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(50, 5)) @ rng.normal(size=(5, 5))
    R = correlation_matrix(X)
    for i in range(5):
        for j in range(5):
            a, b = X[:, i] - X[:, i].mean(), X[:, j] - X[:, j].mean()
            assert R[i, j] == pytest.approx((a @ b) / np.sqrt((a @ a) * (b @ b)), abs=1e-12)
    assert np.allclose(R, R.T) and (np.abs(R) <= 1).all()
    assert np.linalg.eigvalsh(R).min() > -1e-8


def test_prune_examples():
    full = prune_features(FEATURE_NAMES)
    assert len(full) == 28 and not set(PRUNED_FEATURES) & set(full)
    assert prune_features(full) == full
    partial = [n for n in FEATURE_NAMES if n != "avg_velocity"]
    with pytest.warns(UserWarning, match="avg_velocity"):
        assert prune_features(partial) == full
    with pytest.raises(ValueError):
        prune_features(["nope"])


def test_prune_already_pruned_is_silent():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        prune_features(prune_features(FEATURE_NAMES))


def test_feature_report_json_and_csv():
    rng = np.random.default_rng(5)
    users = np.repeat(["a", "b"], 100)
    X = rng.normal(size=(200, len(FEATURE_NAMES)))
    X[:, 0] += (users == "a") * 5
    for name in ("phone_orientation", "direction_flag"):
        X[:, FEATURE_NAMES.index(name)] = rng.integers(0, 2, 200)
    rep = feature_report(X, users)
    js = rep.to_json()
    json.dumps(js)
    assert js["ranking"][0]["feature"] == FEATURE_NAMES[0]
    assert len(js["pruned_features"]) == 28
    lines = rep.correlation_csv().strip().split("\n")
    assert len(lines) == len(FEATURE_NAMES) + 1
