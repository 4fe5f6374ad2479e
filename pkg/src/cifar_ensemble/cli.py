"""Experiment driver: ``table1``, ``ensemble`` and ``export-knn`` subcommands.

Runs are configured by one JSON file (see ``DEFAULT_CONFIG``) plus a few flag
overrides.  Every output is a deterministic function of the resolved config
and the input files.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import dataset_io, ensemble, evaluation, experts_io, linear, neighbors, pca, preprocess

log = logging.getLogger("cifar_ensemble")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

LOGREG_SWEEP = [None, 50, 100, 150, 200, 225, 250]
KNN_SWEEP = [None, 200, 75, 50, 40, 30, 25, 15, 10]

DEFAULT_CONFIG = {
    "data_dir": "data/cifar-10-batches-bin",
    "pipeline": [],
    "preprocess": {"gcn": {"scale_s": 1.0, "lambda": 0.0, "epsilon": 1e-8}, "zca_epsilon": 1e-5},
    "pca": {"enabled": True, "components": 30},
    "classifier": {
        "type": "knn",
        "knn": {"k": 10, "vote": "uniform", "k_sweep": [1, 3, 5, 10, 20]},
        "logreg": {"l2": 1e-4, "learning_rate": 0.05, "epochs": 100,
                   "batch_size": 256, "standardize": True},
    },
    "table1": {"logreg_components": LOGREG_SWEEP, "knn_components": KNN_SWEEP},
    "experts": [],
    "ensemble": {"step": 0.05, "max_weight": 1.0, "search_split": "validation",
                 "validation_fraction": 0.5, "include_knn": False, "labels_file": None},
    "seed": 0,
    "n_jobs": 1,
    "output_dir": "out",
}


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage
        self.cause = exc


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def resolve_config(config_path=None, overrides: dict | None = None) -> dict:
    """Defaults <- config file <- flag overrides; relative paths resolved
    against the config file's directory (or the working directory)."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    base = Path.cwd()
    if config_path is not None:
        path = Path(config_path)
        try:
            user = json.loads(path.read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top level must be an object")
        unknown = set(user) - set(DEFAULT_CONFIG)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = _merge(cfg, user)
        base = path.resolve().parent
    for key, val in (overrides or {}).items():
        if val is not None:
            cfg[key] = val

    def absolute(p, relative_to):
        return str((relative_to / p).resolve()) if p is not None else None

    file_base = base
    flag_base = Path.cwd()
    from_flag = overrides or {}
    cfg["data_dir"] = absolute(cfg["data_dir"],
                               flag_base if from_flag.get("data_dir") else file_base)
    cfg["output_dir"] = absolute(cfg["output_dir"],
                                 flag_base if from_flag.get("output_dir") else file_base)
    cfg["experts"] = [absolute(p, file_base) for p in cfg["experts"]]
    cfg["ensemble"]["labels_file"] = absolute(cfg["ensemble"]["labels_file"], file_base)
    _validate(cfg)
    return cfg


def _validate(cfg: dict) -> None:
    if cfg["pca"]["enabled"] and int(cfg["pca"]["components"]) < 1:
        raise ConfigError("pca.components must be >= 1")
    for stage in cfg["pipeline"]:
        if stage not in ("gcn", "zca"):
            raise ConfigError(f"unknown pipeline stage {stage!r}")
    if cfg["classifier"]["type"] not in ("knn", "logreg", "centroid"):
        raise ConfigError(f"unknown classifier {cfg['classifier']['type']!r}")
    knn = cfg["classifier"]["knn"]
    if knn["vote"] not in neighbors.VOTES:
        raise ConfigError(f"unknown vote rule {knn['vote']!r}")
    if int(knn["k"]) < 1 or any(int(k) < 1 for k in knn["k_sweep"]):
        raise ConfigError("k values must be >= 1")
    ens = cfg["ensemble"]
    if ens["search_split"] not in ("validation", "test"):
        raise ConfigError("ensemble.search_split must be 'validation' or 'test'")
    if not 0 < float(ens["validation_fraction"]) < 1:
        raise ConfigError("ensemble.validation_fraction must be in (0, 1)")
    if not float(ens["step"]) > 0 or float(ens["max_weight"]) < float(ens["step"]):
        raise ConfigError("ensemble grid needs step > 0 and max_weight >= step")
    for p in cfg["experts"]:
        if not Path(p).is_file():
            raise ConfigError(f"expert file not found: {p}")
    if ens["labels_file"] and not Path(ens["labels_file"]).is_file():
        raise ConfigError(f"labels file not found: {ens['labels_file']}")


# --------------------------------------------------------------------------
# pipeline pieces

def _stage(name):
    def wrap(fn):
        def inner(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except (StageError, ConfigError):
                raise
            except Exception as exc:  # noqa: BLE001 - re-raised with the stage name
                raise StageError(name, exc) from exc
        return inner
    return wrap


@_stage("load")
def _load_data(cfg):
    return dataset_io.load_cifar10(cfg["data_dir"])


@_stage("preprocess")
def _preprocess(cfg, train, test):
    Xtr, Xte = train.features, test.features
    for stage in cfg["pipeline"]:
        if stage == "gcn":
            g = cfg["preprocess"]["gcn"]
            Xtr = preprocess.gcn(Xtr, g["scale_s"], g["lambda"], g["epsilon"])
            Xte = preprocess.gcn(Xte, g["scale_s"], g["lambda"], g["epsilon"])
        elif stage == "zca":
            model = preprocess.zca_fit(Xtr, cfg["preprocess"]["zca_epsilon"])
            Xtr, Xte = preprocess.zca_apply(model, Xtr), preprocess.zca_apply(model, Xte)
    return Xtr, Xte


@_stage("pca")
def _fit_pca(Xtr, k):
    return pca.pca_fit(Xtr, k)


def _project(model, Xtr, Xte, k):
    if k is None:
        return Xtr, Xte
    m = model.truncate(k)
    return pca.pca_transform(m, Xtr), pca.pca_transform(m, Xte)


@_stage("knn")
def _knn_sweep(Xtr, ytr, Xte, yte, ks, vote, n_jobs):
    """Accuracy for every k in ``ks`` from one neighbor search at max(ks)."""
    model = neighbors.knn_fit(Xtr, ytr, k=max(ks), vote=vote)
    idx, dist = neighbors.kneighbors(model, Xte, n_jobs=n_jobs)
    out = {}
    for k in sorted(ks):
        scores = neighbors.scores_from_neighbors(ytr[idx[:, :k]], dist[:, :k], vote)
        out[k] = (evaluation.accuracy(np.argmax(scores, axis=1), yte), scores)
    return out


@_stage("logreg")
def _logreg(cfg, Xtr, ytr, Xte):
    h = cfg["classifier"]["logreg"]
    hyper = linear.LogRegHyper(h["l2"], h["learning_rate"], int(h["epochs"]),
                               int(h["batch_size"]), int(cfg["seed"]), bool(h["standardize"]))
    model = linear.logreg_train(Xtr, ytr, hyper)
    return model, linear.logreg_predict_scores(model, Xte)


def _row_name(family, comps):
    feats = "3,072 Features" if comps is None else f"{comps} PCA Comp."
    return f"{family} + {feats}"


def _slug(family, comps):
    return f"{family.lower().replace('. ', '').replace('.', '')}_{'raw' if comps is None else comps}"


# --------------------------------------------------------------------------
# commands

def cmd_table1(cfg) -> Path:
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    train, test = _load_data(cfg)
    Xtr, Xte = _preprocess(cfg, train, test)
    ytr, yte = train.labels, test.labels

    lr_comps = cfg["table1"]["logreg_components"]
    knn_comps = cfg["table1"]["knn_components"]
    wanted = [c for c in lr_comps + knn_comps if c is not None]
    model = _fit_pca(Xtr, max(wanted + [200])) if wanted else None

    rows = []
    for comps in lr_comps:
        log.info("logreg, components=%s", comps)
        ftr, fte = _project(model, Xtr, Xte, comps)
        lr_model, scores = _logreg(cfg, ftr, ytr, fte)
        pred = np.argmax(scores, axis=1)
        body = {"row": _row_name("Log. Reg.", comps), "components": comps,
                "training_log": [[e, l] for e, l in lr_model.training_log],
                "metrics": evaluation.metrics_block(pred, yte, test.class_names)}
        evaluation.write_report(out / f"table1_{_slug('Log. Reg.', comps)}.json", cfg, body)
        rows.append({"family": "Log. Reg.", "row": body["row"], "components": comps,
                     "accuracy": body["metrics"]["accuracy"], "k": None})

    knn_cfg = cfg["classifier"]["knn"]
    for comps in knn_comps:
        log.info("knn, components=%s", comps)
        ftr, fte = _project(model, Xtr, Xte, comps)
        sweep = _knn_sweep(ftr, ytr, fte, yte, knn_cfg["k_sweep"], knn_cfg["vote"], cfg["n_jobs"])
        best_k = max(sorted(sweep), key=lambda k: sweep[k][0])
        pred = np.argmax(sweep[best_k][1], axis=1)
        body = {"row": _row_name("KNN", comps), "components": comps, "best_k": best_k,
                "k_sweep": {str(k): sweep[k][0] for k in sorted(sweep)},
                "metrics": evaluation.metrics_block(pred, yte, test.class_names)}
        evaluation.write_report(out / f"table1_{_slug('KNN', comps)}.json", cfg, body)
        rows.append({"family": "KNN", "row": body["row"], "components": comps,
                     "accuracy": sweep[best_k][0], "k": best_k})

    for family in ("Log. Reg.", "KNN"):
        fam = [r for r in rows if r["family"] == family]
        if fam:
            top = max(fam, key=lambda r: r["accuracy"])
            for r in fam:
                r["best"] = r is top

    variance = {}
    if model is not None and model.n_components >= 200:
        m200 = model.truncate(200)
        for lo, hi in ((0, 9), (191, 200)):
            for denom in ("retained", "total"):
                variance[f"[{lo},{hi})/{denom}"] = pca.explained_variance_fraction(m200, (lo, hi), denom)

    evaluation.write_report(out / "table1_summary.json", cfg,
                            {"rows": rows, "explained_variance_k200": variance})
    lines = [f"{'Classifier':<32} {'Accuracy (%)':>12}  k"]
    for r in rows:
        mark = "*" if r.get("best") else " "
        k = "" if r["k"] is None else str(r["k"])
        lines.append(f"{mark}{r['row']:<31} {evaluation.percent(r['accuracy']):>12}  {k}")
    summary = out / "table1_summary.txt"
    summary.write_text("\n".join(lines) + "\n")
    return summary


@_stage("experts")
def _load_experts(cfg, n_rows):
    return [experts_io.load_expert(p, expected_rows=n_rows) for p in cfg["experts"]]


@_stage("labels")
def _test_labels(cfg):
    lf = cfg["ensemble"]["labels_file"]
    if lf:
        return np.loadtxt(lf, dtype=np.int64, ndmin=1), dataset_io.CIFAR10_CLASSES
    test = dataset_io.load_cifar_batch(Path(cfg["data_dir"]) / dataset_io.TEST_BATCH,
                                       dataset_io.read_class_names(cfg["data_dir"]))
    return test.labels, test.class_names


def knn_test_scores(cfg):
    """KNN (or nearest-centroid) scores on the test batch under the configured pipeline/PCA/k."""
    train, test = _load_data(cfg)
    Xtr, Xte = _preprocess(cfg, train, test)
    if cfg["pca"]["enabled"]:
        model = _fit_pca(Xtr, int(cfg["pca"]["components"]))
        Xtr, Xte = _project(model, Xtr, Xte, model.n_components)
    if cfg["classifier"]["type"] == "centroid":
        model = neighbors.centroid_fit(Xtr, train.labels)
        return neighbors.centroid_predict_scores(model, Xte), test.labels, test.class_names
    k = int(cfg["classifier"]["knn"]["k"])
    sweep = _knn_sweep(Xtr, train.labels, Xte, test.labels, [k],
                       cfg["classifier"]["knn"]["vote"], cfg["n_jobs"])
    return sweep[k][1], test.labels, test.class_names


def cmd_export_knn(cfg) -> Path:
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    scores, y, names = knn_test_scores(cfg)
    pm = experts_io.ProbMatrix(scores, "knn", row_stochastic=True)
    path = out / "knn_scores.txt"
    experts_io.export_expert(pm, path)
    evaluation.write_report(out / "knn_report.json", cfg,
                            {"expert_file": path.name,
                             "metrics": evaluation.metrics_block(np.argmax(scores, axis=1), y, names)})
    return path


def cmd_ensemble(cfg, warn=print) -> Path:
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    if not cfg["experts"] and not cfg["ensemble"]["include_knn"]:
        raise ConfigError("ensemble needs at least one expert file")
    y, names = _test_labels(cfg)
    experts = _load_experts(cfg, len(y))
    if cfg["ensemble"]["include_knn"]:
        scores, y_knn, _ = knn_test_scores(cfg)
        if not np.array_equal(y_knn, y):
            raise StageError("knn", ValueError("KNN test labels do not match the evaluation labels"))
        experts.append(experts_io.ProbMatrix(scores, "knn"))

    ens = cfg["ensemble"]
    grid = ensemble.WeightGrid(float(ens["step"]), float(ens["max_weight"]))
    if ens["search_split"] == "test":
        warn("warning: searching ensemble weights on the test set; "
             "reported accuracy is optimistically biased", file=sys.stderr)
        search_idx = report_idx = np.arange(len(y))
        split_name = "test"
    else:
        split = dataset_io.stratified_split(y, float(ens["validation_fraction"]), int(cfg["seed"]))
        split.save(out / "ensemble_split.txt")
        search_idx, report_idx = split.validation_indices, split.train_indices
        split_name = "validation"

    def rows(pm, idx):
        return experts_io.ProbMatrix(pm.scores[idx], pm.expert_name, pm.row_stochastic)

    if len(experts) == 1:
        only = experts[0]
        acc = evaluation.accuracy(ensemble.argmax_labels(rows(only, search_idx)), y[search_idx])
        weights = ensemble.EnsembleWeights((1.0,), grid, acc, (), (only.expert_name,), split_name)
    else:
        res = ensemble.chained_search([rows(e, search_idx) for e in experts], y[search_idx], grid,
                                      int(cfg["n_jobs"]))
        weights = ensemble.EnsembleWeights(res.weights, grid, res.achieved_accuracy, res.steps,
                                           tuple(e.expert_name for e in experts), split_name)
    weights.save(out / "ensemble_weights.json")

    if len(experts) == 1:
        fused_pred = ensemble.argmax_labels(experts[0])
    else:
        # replay the chain step by step so reported decisions match the search exactly
        running = experts[0]
        for nxt, (l, r) in zip(experts[1:], weights.steps):
            running = ensemble.fuse([running, nxt], [l, r])
        fused_pred = ensemble.argmax_labels(running)

    singles = {}
    for e in experts:
        pred = ensemble.argmax_labels(e)
        singles[e.expert_name] = {
            "search_accuracy": evaluation.accuracy(pred[search_idx], y[search_idx]),
            "report_accuracy": evaluation.accuracy(pred[report_idx], y[report_idx]),
        }
    body = {
        "searched_split": split_name,
        "n_search": int(len(search_idx)),
        "n_report": int(len(report_idx)),
        "weights": weights.to_dict(),
        "single_experts": singles,
        "fused": {
            "search_accuracy": evaluation.accuracy(fused_pred[search_idx], y[search_idx]),
            "report": evaluation.metrics_block(fused_pred[report_idx], y[report_idx], names),
        },
    }
    report = out / "ensemble_report.json"
    evaluation.write_report(report, cfg, body)
    return report


COMMANDS = {"table1": cmd_table1, "ensemble": cmd_ensemble, "export-knn": cmd_export_knn}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cifar-ensemble", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--data-dir", help="directory holding the CIFAR-10 *.bin batches")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int)
        if name == "ensemble":
            p.add_argument("--search-on-test", action="store_true",
                           help="search weights on the test set itself")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args.config, {"data_dir": args.data_dir, "output_dir": args.out,
                                           "seed": args.seed})
        if getattr(args, "search_on_test", False):
            cfg["ensemble"]["search_split"] = "test"
        result = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        cause = exc.cause
        if isinstance(cause, (linear.DivergenceError, FloatingPointError, np.linalg.LinAlgError)):
            return EXIT_NUMERIC
        if isinstance(cause, ConfigError):
            return EXIT_CONFIG
        return EXIT_DATA
    print(result)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
