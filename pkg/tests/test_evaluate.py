import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import brute_force_eer
from touchauth.evaluate import (
    ExperimentConfig,
    ExperimentError,
    boxplot_stats,
    build_report,
    device_influence,
    fuse_knn,
    fuse_svm,
    run_experiment,
    scenario_split,
    score_experiment,
    sweep_strokes,
    sweep_subjects,
    window_scores,
)
from touchauth.metrics import oriented
from touchauth.synthetic import synthetic_corpus

FAST = dict(classifier="knn", knn_grid=(1, 3, 5), folds=3)


def prepared(table, axis="vertical"):
    t = table.subset(table.axis_mask(axis))
    return t.subset(t.complete_rows())


# ---------------------------------------------------------------------------
# fusion
# ---------------------------------------------------------------------------


def test_fusion_examples():
    assert fuse_svm([2.0, -2.0]) == 0.0
    assert fuse_knn([2, 1], 3) == 0.5
    with pytest.raises(ValueError):
        fuse_svm([])


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=40), st.integers(1, 10), st.integers(1, 4))
@settings(max_examples=200, deadline=None)
def test_window_scores_are_window_means(v, n, stride):
    got = window_scores(v, n, stride)
    want = [np.mean(v[i:i + n]) for i in range(0, len(v) - n + 1, stride)]
    assert np.allclose(got, want)
    assert all(min(v) - 1e-9 <= g <= max(v) + 1e-9 for g in got)


def test_window_n1_is_identity():
    v = np.random.default_rng(0).normal(size=17)
    assert np.array_equal(window_scores(v, 1), v)


# ---------------------------------------------------------------------------
# splits
# ---------------------------------------------------------------------------


def test_inter_session_rotations(small_corpus):
    t = prepared(small_corpus)
    split = scenario_split(t, "inter-session")
    assert not split.excluded
    for user, parts in split.partitions.items():
        assert len(parts) == 3
        held = set()
        for p in parts:
            (test,) = p.test_sessions
            assert not set(p.train) & set(test)
            assert set(t.user[p.train]) == {user} and (t.week[p.train] == 1).all()
            held.add(t.doc[test[0]])
        assert held == {"w1s1", "w1s2", "w1s3"}


def test_intra_and_inter_week_disjoint(small_corpus):
    t = prepared(small_corpus)
    for scenario in ("intra-session", "inter-week"):
        for parts in scenario_split(t, scenario).partitions.values():
            for p in parts:
                test = np.concatenate(p.test_sessions)
                assert not set(p.train) & set(test)
    for parts in scenario_split(t, "inter-week").partitions.values():
        (p,) = parts
        assert (t.week[p.train] == 1).all() and (t.week[np.concatenate(p.test_sessions)] == 2).all()


def test_intra_fraction(small_corpus):
    t = prepared(small_corpus)
    split = scenario_split(t, "intra-session", train_fraction=2 / 3)
    n_train = sum(len(p[0].train) for p in split.partitions.values())
    n_test = sum(sum(map(len, p[0].test_sessions)) for p in split.partitions.values())
    assert abs(n_train / (n_train + n_test) - 2 / 3) < 0.05


def test_no_week2_means_no_eligible_users():
    t = synthetic_corpus(n_users=3, strokes_per_session=20, week2_sessions=0)
    split = scenario_split(prepared(t), "inter-week")
    assert split.partitions == {} and len(split.excluded) == 3
    with pytest.raises(ExperimentError):
        score_experiment(t, ExperimentConfig(scenario="inter-week", **FAST))


def test_single_user_is_an_error():
    t = synthetic_corpus(n_users=1, strokes_per_session=30)
    with pytest.raises(ExperimentError):
        run_experiment(t, ExperimentConfig(**FAST))


def test_unknown_scenario():
    with pytest.raises(ValueError):
        ExperimentConfig(scenario="cross-week")


# ---------------------------------------------------------------------------
# scoring and reports
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def scored_intra(small_corpus):
    return score_experiment(small_corpus, ExperimentConfig(scenario="intra-session", **FAST))


def test_n1_report_equals_per_stroke_eer(scored_intra):
    rep = build_report(scored_intra, n=1)
    for us in scored_intra.users:
        (rs,) = us.rotations
        g, i = np.concatenate(rs.genuine), np.concatenate(rs.impostor)
        want = brute_force_eer(np.r_[g, i].tolist(), [True] * len(g) + [False] * len(i))
        (rot,) = rep["users"][us.user]["rotations"]
        assert abs(rot["raw_eer"] - want) < 1e-9
        assert rot["eer"] == oriented(rot["raw_eer"])


def test_windows_stay_inside_sessions(scored_intra):
    n = 5
    rep = build_report(scored_intra, n=n)
    for us in scored_intra.users:
        (rs,) = us.rotations
        want = sum(max(0, len(s) - n + 1) for s in rs.genuine)
        assert rep["users"][us.user]["rotations"][0]["n_genuine_decisions"] == want


def test_well_separated_users_reach_zero(scored_intra):
    rep = build_report(scored_intra, n=11)
    assert rep["summary"]["eer"]["median"] == 0.0
    json.dumps(rep, allow_nan=False)


def test_too_long_window_skips_everyone(scored_intra):
    rep = build_report(scored_intra, n=10_000)
    assert rep["users"] == {} and len(rep["skipped"]) == 6
    assert rep["summary"]["eer"]["median"] is None


def test_report_timing_fields(scored_intra):
    rep = build_report(scored_intra, n=11)
    for u in rep["users"].values():
        assert u["time_to_first_decision_s"] == pytest.approx(11 * u["median_inter_stroke_s"])


def test_deleting_test_stroke_keeps_models(small_corpus):
    t = prepared(small_corpus)
    cfg = ExperimentConfig(scenario="intra-session", **FAST)
    split = scenario_split(t, "intra-session")
    victim_row = split.partitions["u0"][0].test_sessions[0][3]
    keep = np.ones(len(t), bool)
    keep[victim_row] = False
    a = score_experiment(t, cfg)
    b = score_experiment(t.subset(keep), cfg)
    for ua, ub in zip(a.users, b.users):
        assert ua.rotations[0].model.to_json() == ub.rotations[0].model.to_json()


def test_inter_session_test_deletion_keeps_rotation_models(small_corpus):
    t = prepared(small_corpus)
    cfg = ExperimentConfig(scenario="inter-session", **FAST)
    split = scenario_split(t, "inter-session")
    (test,) = split.partitions["u1"][0].test_sessions
    keep = np.ones(len(t), bool)
    keep[test[:4]] = False
    a = score_experiment(t, cfg)
    b = score_experiment(t.subset(keep), cfg)
    for ua, ub in zip(a.users, b.users):
        assert ua.rotations[0].model.to_json() == ub.rotations[0].model.to_json()


def test_workers_do_not_change_report(small_corpus):
    cfg = ExperimentConfig(scenario="inter-session", **FAST)
    one = run_experiment(small_corpus, cfg)
    three = run_experiment(small_corpus, ExperimentConfig(scenario="inter-session", workers=3, **FAST))
    assert json.dumps(one, sort_keys=True) == json.dumps(three, sort_keys=True)


def _percentile_oracle(v, q):
    v = sorted(v)
    pos = (len(v) - 1) * q
    lo = int(pos)
    hi = min(lo + 1, len(v) - 1)
    return v[lo] + (v[hi] - v[lo]) * (pos - lo)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=60))
@settings(max_examples=200, deadline=None)
def test_boxplot_stats_oracle(v):
    s = boxplot_stats(v)
    q25, med, q75 = (_percentile_oracle(v, q) for q in (0.25, 0.5, 0.75))
    assert s["median"] == pytest.approx(med, abs=1e-12)
    assert s["q25"] == pytest.approx(q25, abs=1e-12) and s["q75"] == pytest.approx(q75, abs=1e-12)
    iqr = s["q75"] - s["q25"]
    inside = [x for x in v if s["q25"] - 1.5 * iqr <= x <= s["q75"] + 1.5 * iqr]
    assert s["whisker_low"] == min(inside) and s["whisker_high"] == max(inside)
    assert len(s["outliers"]) + len(inside) == len(v)


def test_boxplot_empty():
    assert boxplot_stats([])["median"] is None


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def test_sweep_strokes_rows(small_corpus):
    rows, reports = sweep_strokes(small_corpus, ExperimentConfig(scenario="intra-session", **FAST), range(1, 6))
    assert [r[0] for r in rows] == [1, 2, 3, 4, 5]
    assert len(reports) == 5
    assert rows[-1][1] <= rows[0][1]


def test_sweep_subjects_full_population_single_draw(small_corpus):
    cfg = ExperimentConfig(scenario="intra-session", **FAST)
    rows, detail = sweep_subjects(small_corpus, cfg, [2, 6, 9], repetitions=3)
    assert len(detail["2"]["draws"]) == 3
    assert len(detail["6"]["draws"]) == 1 and len(detail["9"]["draws"]) == 1
    assert rows[2][0] == 6
    again, _ = sweep_subjects(small_corpus, cfg, [2], repetitions=3)
    assert again[0] == rows[0]
    with pytest.raises(ValueError):
        sweep_subjects(small_corpus, cfg, [1])


def test_device_single_phone_arms_identical(small_corpus):
    res = device_influence(small_corpus, ExperimentConfig(scenario="intra-session", **FAST))
    assert res["users_per_arm"] == 6
    assert res["same_phone"] == res["mixed_phone"] and res["eer_gap"] == 0.0


def test_device_offset_makes_same_phone_harder():
    t = synthetic_corpus(n_users=12, separation=1.0, seed=5, strokes_per_session=60,
                         n_phones=2, phone_offset=6.0, session_drift=0.0)
    res = device_influence(t, ExperimentConfig(scenario="intra-session", n=1, **FAST))
    assert res["users_per_arm"] == 6
    assert res["same_phone"]["median"] > res["mixed_phone"]["median"]
    for p, arm in res["arms"]["same_phone"].items():
        assert len(arm["users"]) == len(res["arms"]["mixed_phone"][p]["users"]) == 6
