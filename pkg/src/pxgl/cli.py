"""Command-line entry point: ``pxgl <command> --config cfg.json --out dir``.

Every command reads an optional JSON config carrying ``"version": 1``.
Unknown keys are rejected, defaults are filled in and the materialised
config is written to ``run_manifest.json`` next to the outputs. JSON
outputs are written with sorted keys and no timestamps, so reruns with the
same config and seed are byte-identical.
"""
import argparse
import copy
import csv
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .bounds import dominance_suite
from .data import SynthSpec, load_tudataset, split, synth_pattern_dataset, write_tudataset
from .egk import EnsembleKernelLearner
from .exceptions import InputError, PxglError
from .gnn.estimator import PRESETS
from .gnn.model import EnsembleModel, ModelConfig
from .gnn.train import TrainConfig, explain, fit_model, sample_inputs
from .metrics import accuracy_from_logits, clustering_accuracy, kmeans, nmi

log = logging.getLogger("pxgl")

CONFIG_VERSION = 1
ANY = object()  # marks a free-form sub-dict validated elsewhere

DATASET = {"kind": "synthetic", "dir": None, "name": None, "spec": ANY, "seed": 0}
SPLIT = {"ratios": [0.8, 0.1, 0.1]}
MODEL = {"preset": "desk", "n_layers": None, "hidden": None, "out_dim": None,
         "clf_layers": None, "clf_hidden": None, "activation": "relu", "kinds": None}
TRAIN = {"objective": "ce", "epochs": 50, "batch_size": 32, "learning_rate": 0.01,
         "momentum": 0.9, "gamma": None, "q": 10, "max_attempts": None,
         "alternate": False, "restore_best": True}

DEFAULTS = {
    "synth-gen": {"dataset": DATASET},
    "egk-fit": {"dataset": DATASET, "objective": "scl", "mu": 1.0, "l_max": 4,
                "wl_depth": 3, "learning_rate": 0.05, "n_iter": 500,
                "backtracking": True, "write_grams": True},
    "gnn-train": {"dataset": DATASET, "split": SPLIT, "model": MODEL, "train": TRAIN},
    "gnn-embed": {"checkpoint": None, "dataset": None},
    "explain": {"checkpoint": None},
    "bound-check": {"checkpoint": None, "trials": 100, "variant": "whole",
                    "max_flips": 3, "max_noise": 0.1, "n_max": 12},
    "eval": {"mode": "unsupervised", "checkpoint": None, "dataset": None,
             "features": "embeddings", "n_clusters": None, "restarts": 10,
             "indices": "test"},
}


# -- config handling ------------------------------------------------------

def _merge(defaults, given, where):
    if given is None:
        given = {}
    if not isinstance(given, dict):
        raise InputError(f"{where or 'config'} must be a JSON object")
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise InputError(f"unknown config keys at {where or 'top level'}: {unknown}")
    out = {}
    for key, default in defaults.items():
        sub = f"{where}.{key}" if where else key
        if isinstance(default, dict):
            out[key] = _merge(default, given.get(key), sub)
        elif default is ANY:
            out[key] = copy.deepcopy(given.get(key))
        else:
            out[key] = copy.deepcopy(given.get(key, default))
    return out


def materialize_config(command, raw, seed=None):
    raw = dict(raw or {})
    version = raw.pop("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise InputError(f"unsupported config version {version!r}; expected {CONFIG_VERSION}")
    raw_seed = raw.pop("seed", 0)
    cfg = _merge(DEFAULTS[command], raw, "")
    cfg["version"] = CONFIG_VERSION
    cfg["seed"] = int(raw_seed if seed is None else seed)
    if "dataset" in cfg and isinstance(cfg["dataset"], dict) and cfg["dataset"]["kind"] == "synthetic":
        cfg["dataset"]["spec"] = _synth_spec_dict(cfg["dataset"]["spec"])
    return cfg


def _synth_spec_dict(spec):
    spec = dict(spec or {})
    if "counts" in spec:
        spec["counts"] = tuple(spec["counts"])
    d = dict(SynthSpec(**spec).__dict__)
    d["counts"] = list(d["counts"])
    return d


def load_dataset(dcfg):
    if dcfg is None:
        raise InputError("no dataset configured")
    kind = dcfg.get("kind")
    if kind == "tudataset":
        if not dcfg.get("dir") or not dcfg.get("name"):
            raise InputError("tudataset needs 'dir' and 'name'")
        return load_tudataset(dcfg["dir"], dcfg["name"])
    if kind == "synthetic":
        spec = dict(dcfg.get("spec") or {})
        if "counts" in spec:
            spec["counts"] = tuple(spec["counts"])
        return synth_pattern_dataset(SynthSpec(**spec), int(dcfg.get("seed", 0)))
    raise InputError(f"unknown dataset kind {kind!r}")


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _fmt(x):
    return format(float(x), ".17g")


def write_matrix_csv(path, m):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in np.asarray(m):
            w.writerow([_fmt(v) for v in row])


# -- commands -------------------------------------------------------------

def cmd_synth_gen(cfg, out):
    ds = load_dataset(cfg["dataset"])
    write_tudataset(ds, os.path.join(out, ds.name), ds.name)
    write_json(os.path.join(out, "synth_manifest.json"),
               {"name": ds.name, "graphs": len(ds), "provenance": ds.provenance,
                "fingerprint": ds.fingerprint()})
    return 0


def cmd_egk_fit(cfg, out):
    ds = load_dataset(cfg["dataset"])
    est = EnsembleKernelLearner(cfg["objective"], cfg["mu"], cfg["l_max"], cfg["wl_depth"],
                                cfg["learning_rate"], cfg["n_iter"], cfg["backtracking"])
    y = None if cfg["objective"] == "kl" else [g.label for g in ds.graphs]
    est.fit(ds.graphs, y)
    write_json(os.path.join(out, "lambda.json"), est.report_.to_json())
    if cfg["write_grams"]:
        for name, k in zip(est.names_, est.stack_.grams):
            write_matrix_csv(os.path.join(out, f"gram_{name}.csv"), k)
        write_matrix_csv(os.path.join(out, "gram_ensemble.csv"), est.gram())
    return 0


def _model_config(mcfg, in_dim, n_classes):
    preset = PRESETS.get(mcfg["preset"])
    if preset is None:
        raise InputError(f"unknown preset {mcfg['preset']!r}")
    dims = {k: (mcfg[k] if mcfg[k] is not None else preset[k]) for k in preset}
    kinds = tuple(mcfg["kinds"]) if mcfg["kinds"] else ModelConfig.__dataclass_fields__["kinds"].default
    return ModelConfig(in_dim, max(n_classes, 2), activation=mcfg["activation"], kinds=kinds, **dims)


def cmd_gnn_train(cfg, out):
    ds = load_dataset(cfg["dataset"])
    tc = TrainConfig(seed=cfg["seed"], **cfg["train"])
    mc = _model_config(cfg["model"], ds.feature_dim, ds.num_classes)
    supervised = tc.objective == "ce"
    if supervised:
        sp = split(ds, tuple(cfg["split"]["ratios"]), cfg["seed"])
        train_idx, val_idx, test_idx = sp.train, sp.val, sp.test
    else:
        sp = None
        train_idx, val_idx, test_idx = list(range(len(ds))), [], []
    model, hist, _ = fit_model(ds.subset(train_idx), mc, tc, ds.subset(val_idx) or None)
    model.meta["dataset"] = cfg["dataset"]
    model.meta["split"] = sp.to_json() if sp else None
    model.save(os.path.join(out, "checkpoint.json"))
    write_json(os.path.join(out, "history.json"), hist.to_json())
    lam = model.lam
    write_json(os.path.join(out, "lambda.json"),
               {"names": list(mc.kinds), "lambda": [float(x) for x in lam],
                "loss_curve": [float(x) for x in hist.train_loss]})
    metrics = {"seed": cfg["seed"], "train_loss_final": float(hist.train_loss[-1]) if hist.train_loss else None}
    if supervised and test_idx:
        inputs, _ = sample_inputs(ds.subset(test_idx), mc, tc.q, tc.seed, tc.max_attempts)
        metrics["classification_accuracy"] = accuracy_from_logits(
            model.logits(inputs), [ds[i].label for i in test_idx])
    write_json(os.path.join(out, "metrics.json"), metrics)
    return 0


def _load_checkpoint(cfg):
    if not cfg.get("checkpoint"):
        raise InputError("a checkpoint path is required")
    return EnsembleModel.load(cfg["checkpoint"])


def _model_inputs(model, graphs):
    s = model.meta.get("sampling", {})
    inputs, _ = sample_inputs(graphs, model.config, s.get("q", 10), s.get("seed", 0),
                              s.get("max_attempts"))
    return inputs


def cmd_gnn_embed(cfg, out):
    model = _load_checkpoint(cfg)
    ds = load_dataset(cfg["dataset"] or model.meta.get("dataset"))
    emb = model.embed(_model_inputs(model, ds.graphs))
    with open(os.path.join(out, "embeddings.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["graph_id", "label"] + [f"g_{i + 1}" for i in range(emb.shape[1])])
        for g, row in zip(ds.graphs, emb):
            w.writerow([g.id, "" if g.label is None else g.label] + [_fmt(v) for v in row])
    return 0


def cmd_explain(cfg, out):
    model = _load_checkpoint(cfg)
    write_json(os.path.join(out, "explain.json"), {"ranking": explain(model)})
    return 0


def cmd_bound_check(cfg, out):
    model = _load_checkpoint(cfg)
    report = dominance_suite(model, cfg["trials"], cfg["seed"], cfg["variant"],
                             cfg["max_flips"], cfg["max_noise"], cfg["n_max"])
    write_json(os.path.join(out, "bounds_report.json"), report)
    if report["violations"]:
        log.error("%d bound violations", report["violations"])
        return 1
    return 0


def cmd_eval(cfg, out):
    model = _load_checkpoint(cfg) if cfg["checkpoint"] else None
    dcfg = cfg["dataset"] or (model.meta.get("dataset") if model else None)
    ds = load_dataset(dcfg)
    metrics = {"seed": cfg["seed"], "mode": cfg["mode"]}
    labels = np.array([g.label for g in ds.graphs])
    if cfg["mode"] == "supervised":
        if model is None:
            raise InputError("supervised evaluation needs a checkpoint")
        sp = model.meta.get("split")
        idx = sp[cfg["indices"]] if sp and cfg["indices"] in sp else list(range(len(ds)))
        inputs = _model_inputs(model, ds.subset(idx))
        metrics["classification_accuracy"] = accuracy_from_logits(model.logits(inputs), labels[idx])
        metrics["n"] = len(idx)
    elif cfg["mode"] == "unsupervised":
        if cfg["features"] == "embeddings":
            if model is None:
                raise InputError("embedding features need a checkpoint")
            feats = model.embed(_model_inputs(model, ds.graphs))
        elif cfg["features"] == "kernel_rows":
            feats = EnsembleKernelLearner(objective="kl").fit(ds.graphs).gram()
        else:
            raise InputError(f"unknown features {cfg['features']!r}")
        c = cfg["n_clusters"] or ds.num_classes
        res = kmeans(feats, c, seed=cfg["seed"], restarts=cfg["restarts"])
        metrics.update({"acc": clustering_accuracy(res.assignments, labels),
                        "nmi": nmi(res.assignments, labels), "inertia": res.inertia,
                        "degenerate": res.degenerate, "n": len(ds)})
    else:
        raise InputError(f"unknown mode {cfg['mode']!r}")
    write_json(os.path.join(out, "metrics.json"), metrics)
    return 0


COMMANDS = {
    "synth-gen": cmd_synth_gen,
    "egk-fit": cmd_egk_fit,
    "gnn-train": cmd_gnn_train,
    "gnn-embed": cmd_gnn_embed,
    "explain": cmd_explain,
    "bound-check": cmd_bound_check,
    "eval": cmd_eval,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="pxgl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"pxgl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int, help="cap on BLAS/OpenMP threads")
    return parser


def run(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        raw = {}
        if args.config:
            with open(args.config) as fh:
                raw = json.load(fh)
        cfg = materialize_config(args.command, raw, args.seed)
        os.makedirs(args.out, exist_ok=True)
        write_json(os.path.join(args.out, "run_manifest.json"),
                   {"command": args.command, "config": cfg, "package_version": __version__})
        if args.threads:
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=args.threads):
                return COMMANDS[args.command](cfg, args.out)
        return COMMANDS[args.command](cfg, args.out)
    except (PxglError, OSError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
