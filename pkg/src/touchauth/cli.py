"""touchauth command line.

Every subcommand accepts ``--config FILE.json`` (keys named like the long
flags, dashes or underscores) with flags overriding the file, plus the
common ``--seed`` and ``--out``. Config problems exit with status 2, failed
experiments with status 1.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import analysis, authsim, evaluate, ingest, synthetic
from .classify import TrainingConfig, derive_seed, train_user_model
from .dataset import (
    FeatureTable,
    read_features_csv,
    read_sessions_csv,
    write_features_csv,
    write_sessions_csv,
)
from .features import FEATURE_INDEX, extract_features

log = logging.getLogger("touchauth")


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


# keys that affect where or how fast a command runs, never what it computes
NON_SEMANTIC_KEYS = ("out", "workers")


def provenance(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if k not in NON_SEMANTIC_KEYS}


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _parse_int_list(text: str) -> list[int]:
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if ".." in part:
            a, b = part.split("..")
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    return out


def _parse_float_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def resolve(args, defaults: dict) -> dict:
    """Config file values, overridden by explicitly given flags."""
    cfg = dict(defaults)
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        for k, v in data.items():
            k = k.replace("-", "_")
            if k not in defaults:
                raise ConfigError(f"unknown config key {k!r}")
            cfg[k] = v
    for k in defaults:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    if cfg.get("out") is None:
        raise ConfigError("--out is required")
    return cfg


def _need_file(cfg, key):
    p = cfg.get(key)
    if p is None:
        raise ConfigError(f"--{key.replace('_', '-')} is required")
    if not Path(p).is_file():
        raise ConfigError(f"{key} file not found: {p}")
    return Path(p)


def load_table(cfg) -> tuple[FeatureTable, dict]:
    fpath = _need_file(cfg, "features")
    inputs = {"features": file_sha256(fpath)}
    weeks = None
    if cfg.get("sessions"):
        spath = _need_file(cfg, "sessions")
        weeks = read_sessions_csv(spath.read_text())
        inputs["sessions"] = file_sha256(spath)
    try:
        table = read_features_csv(fpath.read_text(), weeks)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad feature file {fpath}: {exc}") from None
    return table, inputs


EXPERIMENT_KEYS = ("scenario", "classifier", "n", "stride", "seed", "train_fraction", "folds", "workers")


def experiment_config(cfg, axis: str, **extra) -> evaluate.ExperimentConfig:
    kw = {k: cfg[k] for k in EXPERIMENT_KEYS if cfg.get(k) is not None}
    if cfg.get("features_used"):
        kw["features"] = tuple(cfg["features_used"])
    if cfg.get("knn_grid") is not None:
        kw["knn_grid"] = tuple(int(v) for v in _parse_float_list(cfg["knn_grid"]))
    if cfg.get("svm_c") is not None:
        kw["svm_C"] = tuple(_parse_float_list(cfg["svm_c"]))
    if cfg.get("svm_gamma") is not None:
        kw["svm_gamma"] = tuple(_parse_float_list(cfg["svm_gamma"]))
    kw.update(extra)
    try:
        return evaluate.ExperimentConfig(axis=axis, **kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def axes_of(cfg) -> list[str]:
    a = cfg.get("direction_class") or "vertical"
    if a == "both":
        return ["vertical", "horizontal"]
    if a not in ("vertical", "horizontal"):
        raise ConfigError("--direction-class must be vertical, horizontal or both")
    return [a]


def print_box_table(rows) -> None:
    print(f"{'axis':<11}{'users':>6}{'median':>9}{'q25':>9}{'q75':>9}{'lo':>9}{'hi':>9}  outliers")
    for axis, s in rows:
        if not s["n"]:
            print(f"{axis:<11}{0:>6}  (no users)")
            continue
        print(
            f"{axis:<11}{s['n']:>6}{s['median']:>9.4f}{s['q25']:>9.4f}{s['q75']:>9.4f}"
            f"{s['whisker_low']:>9.4f}{s['whisker_high']:>9.4f}  {len(s['outliers'])}"
        )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_ingest(args) -> int:
    cfg = resolve(args, {"log": None, "screens": None, "weeks": None, "min_displacement": 0.02, "out": None,
                         "seed": None})
    log_path = _need_file(cfg, "log")
    if cfg.get("screens") is None:
        raise ConfigError("--screens is required (screen spec CSV phone_id,width_px,height_px)")
    screens_path = _need_file(cfg, "screens")
    out = Path(cfg["out"])
    try:
        screens = ingest.parse_screen_specs(screens_path.read_bytes())
        strokes, diags = ingest.load_strokes(log_path.read_bytes(), screens, float(cfg["min_displacement"]))
    except ingest.LogFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    weeks = read_sessions_csv(_need_file(cfg, "weeks").read_text()) if cfg.get("weeks") else {}
    vectors = []
    counters: dict[tuple[str, str], int] = {}
    for s in strokes:
        key = (s.user_id, s.doc_id)
        i = counters.get(key, 0)
        counters[key] = i + 1
        vectors.append(extract_features(s, i, weeks.get(key, 1)))
    table = FeatureTable.from_vectors(vectors)
    atomic_write(out / "features.csv", write_features_csv(table))
    atomic_write(out / "sessions.csv", write_sessions_csv(table))
    atomic_write(out / "diagnostics.jsonl", "".join(d.to_json() + "\n" for d in diags))
    if not vectors:
        print("warning: no strokes extracted", file=sys.stderr)
    if diags:
        print(f"warning: {len(diags)} diagnostics written to {out / 'diagnostics.jsonl'}", file=sys.stderr)
    print(f"{len(vectors)} strokes from {len(counters)} sessions -> {out / 'features.csv'}")
    return 0


def cmd_analyze(args) -> int:
    cfg = resolve(args, {"features": None, "sessions": None, "bins": 50, "lo_quantile": 0.1, "hi_quantile": 0.9,
                         "per_class": False, "out": None, "seed": None})
    table, inputs = load_table(cfg)
    table = table.subset(table.complete_rows())
    if len(table.users()) < 2:
        raise ConfigError("analysis needs at least two users")
    try:
        spec = analysis.BinningSpec(int(cfg["bins"]), float(cfg["lo_quantile"]), float(cfg["hi_quantile"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    groups = {"pooled": table}
    if cfg["per_class"]:
        groups = {a: table.subset(table.axis_mask(a)) for a in ("vertical", "horizontal")}
    out = Path(cfg["out"])
    result = {"config": provenance(cfg), "inputs": inputs, "reports": {}}
    for name, t in groups.items():
        if len(t.users()) < 2:
            continue
        rep = analysis.feature_report(t.X, t.user, spec)
        result["reports"][name] = rep.to_json()
        atomic_write(out / f"correlation_{name}.csv", rep.correlation_csv())
    atomic_write(out / "feature_report.json", dump_json(result))
    top = next(iter(result["reports"].values()))["ranking"][:5]
    for r in top:
        print(f"{r['relative_mutual_information']:8.4f}  {r['feature']}")
    return 0


EXP_DEFAULTS = {
    "features": None, "sessions": None, "out": None, "seed": 0, "scenario": "inter-session", "classifier": "svm",
    "direction_class": "vertical", "n": 11, "stride": 1, "train_fraction": None, "folds": None, "workers": None,
    "knn_grid": None, "svm_c": None, "svm_gamma": None, "features_used": None,
}


def cmd_train(args) -> int:
    cfg = resolve(args, dict(EXP_DEFAULTS))
    table, inputs = load_table(cfg)
    out = Path(cfg["out"])
    summary = {"config": provenance(cfg), "inputs": inputs, "models": {}}
    failed = {}
    for axis in axes_of(cfg):
        ec = experiment_config(cfg, axis)
        t = table.subset(table.axis_mask(axis))
        t = t.subset(t.complete_rows())
        cols = [FEATURE_INDEX[f] for f in ec.features]
        users = t.users()
        if len(users) < 2:
            raise ConfigError(f"{axis}: need at least two users with complete strokes")
        for u in users:
            pos = t.X[np.ix_(t.user == u, cols)]
            neg = t.X[np.ix_(t.user != u, cols)]
            try:
                m = train_user_model(u, axis, pos, neg, list(ec.features), derive_seed(ec.seed, "train"), ec.training)
            except Exception as exc:
                failed[f"{u}/{axis}"] = f"{type(exc).__name__}: {exc}"
                continue
            atomic_write(out / "models" / f"{u}_{axis}.json", m.to_json() + "\n")
            summary["models"][f"{u}/{axis}"] = {"cv_eer": m.cv_eer, "hyperparameters": m.hyperparameters}
    summary["failed"] = failed
    atomic_write(out / "train_report.json", dump_json(summary))
    print(f"{len(summary['models'])} models written to {out / 'models'}")
    if failed:
        for k, v in failed.items():
            print(f"failed {k}: {v}", file=sys.stderr)
        return 1
    return 0


def _num(v) -> str:
    return "n/a" if v is None else f"{v:.4f}"


def _run_axes(cfg, table, inputs, fn):
    results = {}
    for axis in axes_of(cfg):
        try:
            results[axis] = fn(experiment_config(cfg, axis))
        except evaluate.ExperimentError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return None
    return results


def _report_failures(reports) -> int:
    bad = {f"{a}/{u}": e for a, r in reports.items() for u, e in r.get("failed", {}).items()}
    for k, v in bad.items():
        print(f"failed {k}: {v}", file=sys.stderr)
    return 1 if bad else 0


def cmd_eval(args) -> int:
    cfg = resolve(args, dict(EXP_DEFAULTS))
    table, inputs = load_table(cfg)
    out = Path(cfg["out"])
    scored = {}

    def one(ec):
        ec = evaluate.with_overrides(ec, include_roc=True)
        s = evaluate.score_experiment(table, ec)
        scored[ec.axis] = s
        return evaluate.build_report(s)

    reports = _run_axes(cfg, table, inputs, one)
    if reports is None:
        return 1
    atomic_write(out / "eval_report.json", dump_json({"config": provenance(cfg), "inputs": inputs, "reports": reports}))
    for axis, s in scored.items():
        atomic_write(out / f"roc_{axis}.csv", evaluate.median_roc_csv(s))
    print_box_table([(a, r["summary"]["eer"]) for a, r in reports.items()])
    return _report_failures(reports)


def cmd_sweep_strokes(args) -> int:
    cfg = resolve(args, {**EXP_DEFAULTS, "strokes": "1..20"})
    table, inputs = load_table(cfg)
    n_values = _parse_int_list(cfg["strokes"])
    if not n_values or min(n_values) < 1:
        raise ConfigError("--strokes must list positive window sizes")
    out = Path(cfg["out"])
    res = _run_axes(cfg, table, inputs, lambda ec: evaluate.sweep_strokes(table, ec, n_values))
    if res is None:
        return 1
    js = {"config": provenance(cfg), "inputs": inputs, "curves": {}}
    for axis, (rows, reports) in res.items():
        atomic_write(out / f"sweep_strokes_{axis}.csv", evaluate.curve_csv(rows))
        js["curves"][axis] = [{"n": r[0], "median": r[1], "q25": r[2], "q75": r[3]} for r in rows]
    atomic_write(out / "sweep_strokes.json", dump_json(js))
    for axis, (rows, _) in res.items():
        for n, med, q25, q75 in rows:
            print(f"{axis:<11}n={n:<3} median EER {_num(med)}")
    return 0


def cmd_sweep_subjects(args) -> int:
    cfg = resolve(args, {**EXP_DEFAULTS, "counts": None, "repetitions": 10})
    table, inputs = load_table(cfg)
    if cfg.get("counts") is None:
        raise ConfigError("--counts is required")
    counts = _parse_int_list(cfg["counts"])
    out = Path(cfg["out"])
    res = _run_axes(
        cfg, table, inputs, lambda ec: evaluate.sweep_subjects(table, ec, counts, int(cfg["repetitions"]))
    )
    if res is None:
        return 1
    js = {"config": provenance(cfg), "inputs": inputs, "curves": {}}
    for axis, (rows, detail) in res.items():
        atomic_write(out / f"sweep_subjects_{axis}.csv", evaluate.curve_csv(rows))
        js["curves"][axis] = detail
    atomic_write(out / "sweep_subjects.json", dump_json(js))
    for axis, (rows, _) in res.items():
        for c, med, _, _ in rows:
            print(f"{axis:<11}{c:>4} users  median EER {_num(med)}")
    return 0


def cmd_device_influence(args) -> int:
    cfg = resolve(args, dict(EXP_DEFAULTS))
    table, inputs = load_table(cfg)
    out = Path(cfg["out"])
    res = _run_axes(cfg, table, inputs, lambda ec: evaluate.device_influence(table, ec))
    if res is None:
        return 1
    atomic_write(out / "device_influence.json", dump_json({"config": provenance(cfg), "inputs": inputs, "reports": res}))
    for axis, r in res.items():
        print(
            f"{axis:<11}same-phone {_num(r['same_phone']['median'])}  mixed {_num(r['mixed_phone']['median'])}  "
            f"gap {_num(r['eer_gap'])}  ({r['users_per_arm']} users per arm)"
        )
    return 0


def cmd_simulate(args) -> int:
    cfg = resolve(
        args,
        {**EXP_DEFAULTS, "victim": None, "attacker": None, "t_threshold": 1, "threshold": None},
    )
    table, inputs = load_table(cfg)
    axis = axes_of(cfg)[0]
    ec = experiment_config(cfg, axis)
    t = table.subset(table.axis_mask(axis))
    t = t.subset(t.complete_rows())
    users = t.users()
    victim = cfg.get("victim") or (users[0] if users else None)
    attacker = cfg.get("attacker") or next((u for u in users if u != victim), None)
    if victim not in users or attacker not in users or victim == attacker:
        raise ConfigError("need distinct --victim and --attacker present in the feature file")
    cols = [FEATURE_INDEX[f] for f in ec.features]
    v_rows = np.flatnonzero(t.user == victim)
    docs = list(dict.fromkeys(t.doc[v_rows].tolist()))
    if len(docs) < 2:
        raise ConfigError("the victim needs at least two sessions (train and replay)")
    train_rows = v_rows[t.doc[v_rows] != docs[-1]]
    replay_rows = v_rows[t.doc[v_rows] == docs[-1]]
    neg_rows = np.flatnonzero((t.user != victim) & (t.user != attacker))
    if len(neg_rows) == 0:
        raise ConfigError("need at least one user besides victim and attacker for negatives")
    model = train_user_model(
        victim, axis, t.X[np.ix_(train_rows, cols)], t.X[np.ix_(neg_rows, cols)], list(ec.features),
        derive_seed(ec.seed, "simulate"), ec.training,
    )
    a_rows = np.flatnonzero(t.user == attacker)
    a_rows = a_rows[t.doc[a_rows] == t.doc[a_rows[0]]]
    decider = authsim.ThresholdDecider(model, cfg.get("threshold"))
    state = authsim.AuthState(
        phase=authsim.Phase.AUTHENTICATING, n=ec.n, stride=ec.stride, t_threshold=int(cfg["t_threshold"])
    )
    # victim session first; the attacker then picks up a freshly unlocked device
    state, transcript = authsim.run(state, [t.X[i, cols] for i in replay_rows], decider)
    _, a_tr = authsim.run(authsim.entry_authenticated(state), [t.X[i, cols] for i in a_rows], decider)
    for rec in transcript:
        rec["source"] = "victim"
    for rec in a_tr:
        rec["source"] = "attacker"
        rec["stroke"] += len(replay_rows)
    a_lock = authsim.strokes_to_lockout([{**r, "stroke": r["stroke"] - len(replay_rows)} for r in a_tr])
    transcript += a_tr
    out = Path(cfg["out"])
    atomic_write(out / "transcript.jsonl", authsim.transcript_jsonl(transcript))
    lock = [r["stroke"] for r in transcript if r["event"] == "lockout"]
    summary = {
        "config": provenance(cfg),
        "inputs": inputs,
        "victim": victim,
        "attacker": attacker,
        "victim_strokes": int(len(replay_rows)),
        "attacker_strokes": int(len(a_rows)),
        "lockouts": lock,
        "victim_lockouts": [s for s in lock if s < len(replay_rows)],
        "attacker_strokes_to_lockout": a_lock,
    }
    atomic_write(out / "simulation.json", dump_json(summary))
    caught = f"locked out after {a_lock} strokes" if a_lock is not None else f"not locked out in {len(a_rows)} strokes"
    print(
        f"victim {victim}: {len(summary['victim_lockouts'])} false lockouts in {len(replay_rows)} strokes; "
        f"attacker {attacker} {caught}"
    )
    return 0


def cmd_gen_synthetic(args) -> int:
    cfg = resolve(
        args,
        {"users": 10, "separation": 6.0, "seed": 0, "strokes_per_session": 120, "week1_sessions": 3,
         "week2_sessions": 1, "phones": 1, "phone_offset": 0.0, "session_drift": 0.2, "informative": 10,
         "correlation": 0.0, "p_vertical": 0.5, "raw": False, "specs": None, "out": None},
    )
    out = Path(cfg["out"])
    try:
        if cfg.get("specs"):
            data = json.loads(_need_file(cfg, "specs").read_text())
            specs = [synthetic.SyntheticUserSpec.from_dict(d) for d in data["users"]]
        else:
            specs = synthetic.make_population(
                int(cfg["users"]), float(cfg["separation"]), int(cfg["seed"]), int(cfg["informative"]),
                int(cfg["phones"]), float(cfg["phone_offset"]), float(cfg["session_drift"]),
                float(cfg["correlation"]), float(cfg["p_vertical"]),
            )
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"bad generator settings: {exc}") from None
    vectors, events, screens = [], [], {}
    for spec in specs:
        for wk, count in ((1, int(cfg["week1_sessions"])), (2, int(cfg["week2_sessions"]))):
            for s in range(count):
                sess = synthetic.generate_session(
                    spec, int(cfg["strokes_per_session"]), f"w{wk}s{s + 1}", wk, raw=bool(cfg["raw"])
                )
                vectors.extend(sess.vectors)
                if cfg["raw"]:
                    events.extend(ingest.flatten(sess.strokes))
                    screens[spec.phone_id] = synthetic.SCREEN_PX
    table = FeatureTable.from_vectors(vectors)
    atomic_write(out / "features.csv", write_features_csv(table))
    atomic_write(out / "sessions.csv", write_sessions_csv(table))
    atomic_write(out / "specs.json", dump_json({"users": [s.to_dict() for s in specs]}))
    if cfg["raw"]:
        atomic_write(out / "log.csv", ingest.write_log(events))
        lines = ["phone_id,width_px,height_px"] + [f"{p},{w!r},{h!r}" for p, (w, h) in sorted(screens.items())]
        atomic_write(out / "screens.csv", "\n".join(lines) + "\n")
    print(f"{len(specs)} users, {len(table)} strokes -> {out}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="touchauth", description="Touch-stroke continuous authentication toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file; flags override it")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory")

    def experiment(sp):
        common(sp)
        sp.add_argument("--features", help="feature CSV")
        sp.add_argument("--sessions", help="session manifest CSV user_id,doc_id,week")
        sp.add_argument("--scenario", choices=evaluate.SCENARIOS)
        sp.add_argument("--classifier", choices=("knn", "svm"))
        sp.add_argument("--direction-class", choices=("vertical", "horizontal", "both"))
        sp.add_argument("-n", "--n", type=int, help="strokes per decision")
        sp.add_argument("--stride", type=int)
        sp.add_argument("--train-fraction", type=float)
        sp.add_argument("--folds", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--knn-grid", help="comma-separated odd k values")
        sp.add_argument("--svm-c", help="comma-separated C grid")
        sp.add_argument("--svm-gamma", help="comma-separated gamma grid")

    sp = sub.add_parser("ingest", help="raw touch log -> feature CSV")
    common(sp)
    sp.add_argument("--log")
    sp.add_argument("--screens")
    sp.add_argument("--weeks", help="optional session manifest assigning weeks")
    sp.add_argument("--min-displacement", type=float)
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("analyze", help="feature informativeness and correlations")
    common(sp)
    sp.add_argument("--features")
    sp.add_argument("--sessions")
    sp.add_argument("--bins", type=int)
    sp.add_argument("--lo-quantile", type=float)
    sp.add_argument("--hi-quantile", type=float)
    sp.add_argument("--per-class", action="store_true", default=None)
    sp.set_defaults(func=cmd_analyze)

    for name, func, hlp in (
        ("train", cmd_train, "train one model per user and direction class"),
        ("eval", cmd_eval, "EER evaluation for one scenario"),
        ("device-influence", cmd_device_influence, "same-phone vs mixed-phone comparison"),
    ):
        sp = sub.add_parser(name, help=hlp)
        experiment(sp)
        sp.set_defaults(func=func)

    sp = sub.add_parser("sweep-strokes", help="EER vs strokes per decision")
    experiment(sp)
    sp.add_argument("--strokes", help="window sizes, e.g. 1..20 or 1,5,11")
    sp.set_defaults(func=cmd_sweep_strokes)

    sp = sub.add_parser("sweep-subjects", help="EER vs number of subjects")
    experiment(sp)
    sp.add_argument("--counts", help="subject counts, e.g. 3,5,10")
    sp.add_argument("--repetitions", type=int)
    sp.set_defaults(func=cmd_sweep_subjects)

    sp = sub.add_parser("simulate", help="replay a victim session and an attacker through the lockout machine")
    experiment(sp)
    sp.add_argument("--victim")
    sp.add_argument("--attacker")
    sp.add_argument("--t-threshold", type=int)
    sp.add_argument("--threshold", type=float)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("gen-synthetic", help="write a seeded synthetic corpus")
    common(sp)
    sp.add_argument("--users", type=int)
    sp.add_argument("--separation", type=float, help="pairwise user separation in standard deviations")
    sp.add_argument("--strokes-per-session", type=int)
    sp.add_argument("--week1-sessions", type=int)
    sp.add_argument("--week2-sessions", type=int)
    sp.add_argument("--phones", type=int)
    sp.add_argument("--phone-offset", type=float)
    sp.add_argument("--session-drift", type=float)
    sp.add_argument("--informative", type=int)
    sp.add_argument("--correlation", type=float)
    sp.add_argument("--p-vertical", type=float)
    sp.add_argument("--raw", action="store_true", default=None, help="also write a raw touch log")
    sp.add_argument("--specs", help="JSON file of user specs instead of a generated population")
    sp.set_defaults(func=cmd_gen_synthetic)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
