"""Batch pipeline: data -> features -> tuning -> reports.

Each stage reads only the files written by the stage before it, so stages can
be re-run on their own. Output layout under the output directory::

    data/recording.raw_f64, data/events.csv
    features/<V>.csv            wide: epoch_id,label,f0..f197
    features/<V>_long.csv       long: epoch_id,label,feature_id,value
    tune/<V>_<model>_<set>_trace.csv / _convergence.svg / _cv.csv
    tune/best.json
    reports/summary.csv, top_trials.csv, importance_<model>.csv,
    reports/mi.csv, mi.svg, correlation_<V>.csv / .svg, report.md

Band-power features are computed once (CAR and notch) and shared by every
variant; topological features are recomputed per variant.
"""

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import svg
from .bandpower import FIRST_PB_ID, BandDefinition, extract_pb_features
from .config import dump_config
from .diagram_features import N_TDA_FEATURES, AmplitudeParams, extract_tda_features
from .errors import DataError, EcogTdaError
from .hyperopt import optimize
from .learn import (correlation_matrix, cross_validate, impurity_importance, make_model,
                    mutual_information_all, rank_aggregate)
from .persistence import vr_persistence
from .signal import (VARIANTS, bandcut, car_filter, load_events, load_recording, notch_cascade,
                     save_events, save_recording, segment_epochs)
from .synthetic import SyntheticSpec, generate_synthetic
from .takens import EmbeddingParams, takens_embed

log = logging.getLogger(__name__)

FEATURE_SETS = ("PB", "TDA", "PB+TDA")
_SET_TAG = {"PB": "pb", "TDA": "tda", "PB+TDA": "pb_tda"}
TREE_MODELS = ("rf", "gb")


@contextmanager
def stage(name):
    """Tag any package error raised inside with the stage name."""
    try:
        yield
    except EcogTdaError as err:
        if getattr(err, "stage", None) is None:
            err.stage = name
        raise
    except OSError as err:
        wrapped = DataError(str(err))
        wrapped.stage = name
        raise wrapped from err


def _fmt(x):
    return repr(float(x))


def _dirs(cfg):
    root = Path(cfg.output_dir)
    d = {k: root / k for k in ("data", "features", "tune", "reports")}
    d["root"] = root
    return d


def _require(path, hint):
    if not Path(path).exists():
        raise DataError(f"missing {path}; run the `{hint}` stage first")


# -- generate ------------------------------------------------------------------------


def run_generate(cfg):
    with stage("generate"):
        d = _dirs(cfg)
        d["root"].mkdir(parents=True, exist_ok=True)
        (d["root"] / "config.json").write_text(dump_config(cfg))
        if cfg.synthetic is None:
            log.info("recording given in config; nothing to generate")
            return
        d["data"].mkdir(parents=True, exist_ok=True)
        spec = SyntheticSpec(**cfg.synthetic.model_dump())
        rec, events = generate_synthetic(spec, cfg.seed)
        save_recording(rec, d["data"] / "recording.raw_f64", "raw_f64")
        save_events(events, d["data"] / "events.csv")
        log.info("generated %d channels x %d samples, %d events",
                 rec.n_channels, rec.n_samples, len(events))


def _load_inputs(cfg):
    if cfg.recording is not None:
        r = cfg.recording
        return (load_recording(r.path, r.format, r.sampling_rate), load_events(r.events))
    d = _dirs(cfg)
    _require(d["data"] / "recording.raw_f64", "generate")
    _require(d["data"] / "events.csv", "generate")
    return load_recording(d["data"] / "recording.raw_f64", "raw_f64"), load_events(d["data"] / "events.csv")


# -- features ------------------------------------------------------------------------


def _tda_row(epoch, emb, amp):
    return extract_tda_features(vr_persistence(takens_embed(epoch, emb)), amp).values


def compute_features(cfg, rec, events, executor=None):
    """Return ``(labels, trial_ids, {variant: matrix})`` with 18 + channels x bands columns."""
    bands = [BandDefinition(lo, hi, cfg.filter_order) for lo, hi in cfg.bands]
    n = cfg.notch
    notched = notch_cascade(rec, n.base_freq, n.n_harmonics, n.order, n.half_width)
    pb_epochs = segment_epochs(car_filter(notched), events, cfg.window_s)
    labels = [e.label for e in pb_epochs]
    trial_ids = [e.trial_id for e in pb_epochs]
    pb = np.array([extract_pb_features(e, bands, rec.sampling_rate).values for e in pb_epochs])
    log.info("band power: %d x %d", *pb.shape)

    emb = EmbeddingParams(**cfg.embedding.model_dump())
    amp = AmplitudeParams(**cfg.amplitude.model_dump())
    out = {}
    for vid in cfg.variants:
        filtered = bandcut(notched, VARIANTS[vid], cfg.filter_order)
        epochs = segment_epochs(filtered, events, cfg.window_s)
        del filtered
        mapper = executor.map if executor is not None else map
        tda = np.array(list(mapper(lambda e: _tda_row(e, emb, amp), epochs)))
        X = np.hstack([tda, pb])
        expected = N_TDA_FEATURES + rec.n_channels * len(bands)
        if X.shape[1] != expected or not np.isfinite(X).all():
            raise DataError(f"variant {vid}: feature matrix is {X.shape}, expected {expected} finite columns")
        out[vid] = X
        log.info("variant %s: %d x %d features", vid, *X.shape)
    return labels, trial_ids, out


def write_feature_csv(path, labels, trial_ids, X):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch_id", "label"] + [f"f{j}" for j in range(X.shape[1])])
        for tid, lab, row in zip(trial_ids, labels, X):
            w.writerow([tid, lab] + [_fmt(v) for v in row])


def write_feature_long_csv(path, labels, trial_ids, X):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch_id", "label", "feature_id", "value"])
        for tid, lab, row in zip(trial_ids, labels, X):
            for j, v in enumerate(row):
                w.writerow([tid, lab, j, _fmt(v)])


def read_feature_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header[:2] != ["epoch_id", "label"] or header[2:] != [f"f{j}" for j in range(len(header) - 2)]:
            raise DataError(f"{path}: unexpected feature header")
        rows = list(r)
    trial_ids = [int(row[0]) for row in rows]
    labels = np.array([row[1] for row in rows])
    X = np.array([[float(v) for v in row[2:]] for row in rows])
    return labels, trial_ids, X


def run_features(cfg):
    with stage("features"):
        rec, events = _load_inputs(cfg)
        d = _dirs(cfg)
        d["features"].mkdir(parents=True, exist_ok=True)
        with ThreadPoolExecutor(cfg.threads) as ex:
            labels, trial_ids, mats = compute_features(cfg, rec, events, ex if cfg.threads > 1 else None)
        for vid, X in mats.items():
            write_feature_csv(d["features"] / f"{vid}.csv", labels, trial_ids, X)
            write_feature_long_csv(d["features"] / f"{vid}_long.csv", labels, trial_ids, X)


def _load_features(cfg):
    d = _dirs(cfg)
    out = {}
    for vid in cfg.variants:
        path = d["features"] / f"{vid}.csv"
        _require(path, "features")
        out[vid] = read_feature_csv(path)
    return out


def feature_columns(n_columns, feature_set):
    ids = np.arange(n_columns)
    if feature_set == "PB":
        return ids[FIRST_PB_ID:]
    if feature_set == "TDA":
        return ids[:N_TDA_FEATURES]
    return ids


# -- tune ------------------------------------------------------------------------------


def _cv_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "variant", "feature_set", "fold", "accuracy"])
        w.writerows(rows)


def tune_one(cfg, model, X, y, feature_ids, executor=None):
    space = cfg.hyperopt.space_for(model)

    def objective(params):
        rep = cross_validate(model, params, X, y, cfg.folds, cfg.seed, feature_ids, executor=executor)
        return rep.mean, rep

    return optimize(objective, space, cfg.hyperopt.n_calls, cfg.hyperopt.n_initial, cfg.seed)


def _jsonable(params):
    return {k: (v.item() if hasattr(v, "item") else v) for k, v in params.items()}


def run_tune(cfg):
    with stage("tune"):
        feats = _load_features(cfg)
        d = _dirs(cfg)
        d["tune"].mkdir(parents=True, exist_ok=True)
        best = {}
        shared_pb = {}  # band-power columns are identical across variants
        with ThreadPoolExecutor(cfg.threads) as ex:
            executor = ex if cfg.threads > 1 else None
            for vid in cfg.variants:
                labels, _, X = feats[vid]
                for model in cfg.models:
                    for fs in FEATURE_SETS:
                        cols = feature_columns(X.shape[1], fs)
                        Xs = X[:, cols]
                        key = (model, Xs.tobytes(), tuple(labels))
                        if fs == "PB" and key in shared_pb:
                            trace = shared_pb[key]
                        else:
                            trace = tune_one(cfg, model, Xs, labels, cols, executor)
                            if fs == "PB":
                                shared_pb[key] = trace
                        stem = f"{vid}_{model}_{_SET_TAG[fs]}"
                        trace.to_csv(d["tune"] / f"{stem}_trace.csv")
                        svg.line_plot(d["tune"] / f"{stem}_convergence.svg", trace.best_so_far,
                                      f"{model} {fs} {vid}", "trial", "best CV accuracy")
                        b = trace.best
                        if b is None:
                            raise DataError(f"{stem}: every trial failed")
                        rep = b.info
                        _cv_csv(d["tune"] / f"{stem}_cv.csv",
                                [[model, vid, fs, i, _fmt(a)] for i, a in enumerate(rep.fold_accuracies)]
                                + [[model, vid, fs, "mean", _fmt(rep.mean)],
                                   [model, vid, fs, "std", _fmt(rep.std)]])
                        top = [{"trial": t.index, "params": _jsonable(t.assignment),
                                "accuracy": t.info.mean, "std": t.info.std}
                               for t in trace.top(cfg.hyperopt.top_k)]
                        best[stem] = {"variant": vid, "model": model, "feature_set": fs,
                                      "params": _jsonable(b.assignment), "accuracy": rep.mean,
                                      "std": rep.std, "folds": rep.fold_accuracies, "top": top}
                        log.info("%s: best %.4f", stem, rep.mean)
        with open(d["tune"] / "best.json", "w") as fh:
            json.dump(best, fh, indent=2, sort_keys=True)
            fh.write("\n")


# -- report ----------------------------------------------------------------------------


def run_report(cfg):
    with stage("report"):
        d = _dirs(cfg)
        _require(d["tune"] / "best.json", "tune")
        best = json.loads((d["tune"] / "best.json").read_text())
        feats = _load_features(cfg)
        d["reports"].mkdir(parents=True, exist_ok=True)

        rows = []
        for model in cfg.models:
            for vid in cfg.variants:
                for fs in FEATURE_SETS:
                    b = best[f"{vid}_{model}_{_SET_TAG[fs]}"]
                    rows.append([model, vid, fs, _fmt(b["accuracy"]), _fmt(b["std"]),
                                 json.dumps(b["params"], sort_keys=True)])
        with open(d["reports"] / "summary.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["model", "variant", "feature_set", "accuracy", "std", "params"])
            w.writerows(rows)

        with open(d["reports"] / "top_trials.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["model", "variant", "feature_set", "rank", "trial", "accuracy", "std", "params"])
            for model in cfg.models:
                for vid in cfg.variants:
                    for fs in FEATURE_SETS:
                        for k, t in enumerate(best[f"{vid}_{model}_{_SET_TAG[fs]}"]["top"], 1):
                            w.writerow([model, vid, fs, k, t["trial"], _fmt(t["accuracy"]),
                                        _fmt(t["std"]), json.dumps(t["params"], sort_keys=True)])

        # impurity importance of the tuned PB+TDA model, refit on all epochs
        for model in cfg.models:
            if model not in TREE_MODELS:
                continue
            per_variant = {}
            for vid in cfg.variants:
                labels, _, X = feats[vid]
                params = best[f"{vid}_{model}_pb_tda"]["params"]
                m = make_model(model, params, cfg.seed).fit(X, labels, np.arange(X.shape[1]))
                per_variant[vid] = (np.arange(X.shape[1]), impurity_importance(m))
            rank_aggregate(per_variant).to_csv(d["reports"] / f"importance_{model}.csv")

        # mutual information, per variant and averaged
        mis = {vid: mutual_information_all(feats[vid][2], feats[vid][0]) for vid in cfg.variants}
        avg = np.mean([mis[v] for v in cfg.variants], axis=0)
        with open(d["reports"] / "mi.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["feature_id"] + [f"mi_{v}" for v in cfg.variants] + ["mi_avg"])
            for j in range(len(avg)):
                w.writerow([j] + [_fmt(mis[v][j]) for v in cfg.variants] + [_fmt(avg[j])])
        svg.bar_chart(d["reports"] / "mi.svg", [f"f{j}" for j in range(len(avg))], avg,
                      "Mutual information with the class label (mean over variants)", "MI (nats)")

        for vid in cfg.variants:
            C = correlation_matrix(feats[vid][2])
            with open(d["reports"] / f"correlation_{vid}.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["feature_id"] + [f"f{j}" for j in range(C.shape[0])])
                for i, row in enumerate(C):
                    w.writerow([i] + [_fmt(v) for v in row])
            svg.heatmap(d["reports"] / f"correlation_{vid}.svg", C, f"Feature correlation, {vid}")

        (d["reports"] / "report.md").write_text(_markdown(cfg, best))


def _markdown(cfg, best):
    lines = ["# Classification summary", "",
             "Band-power features come from one preprocessing (CAR + notch) shared by all",
             "variants; topological features are recomputed for each variant.", "",
             "| model | variant | PB | TDA | PB+TDA |", "|---|---|---|---|---|"]
    for model in cfg.models:
        for vid in cfg.variants:
            cells = []
            for fs in FEATURE_SETS:
                b = best[f"{vid}_{model}_{_SET_TAG[fs]}"]
                cells.append(f"{b['accuracy']:.3f} +/- {b['std']:.3f}")
            lines.append(f"| {model} | {vid} | " + " | ".join(cells) + " |")
    lines += ["", "Hyperparameters are tuned on the same cross-validation folds that report the",
              "accuracy, so these figures are optimistic.", ""]
    return "\n".join(lines)


STAGES = {
    "generate": run_generate,
    "features": run_features,
    "tune": run_tune,
    "report": run_report,
}


def run_pipeline(cfg):
    for name in ("generate", "features", "tune", "report"):
        log.info("stage %s", name)
        STAGES[name](cfg)
