"""Command-line entry point: preprocessing, feature selection, the four
training regimes (central, fl, ftml, fsml), and standalone evaluation.

Exit codes: 0 ok, 2 missing input file, 3 missing prep artifacts,
4 invalid configuration, 5 file-format or shape error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import data as D
from .data import (Dataset, ParseError, PreprocessPipeline, PublicSet,
                   apply_pipeline, class_counts, fit_pipeline,
                   load_attack_mapping, map_labels, parse_records,
                   select_columns, shard_clients, split_indices,
                   split_private_public)
from .features import select_union
from .fedsim import TAG_INIT, ClientShard, derive_seed, run_fl, test_accuracy
from .metrics import confusion, per_class_metrics
from .mimic import MimicClient, run_fsml, run_ftml
from .modelio import ModelFormatError, load_model, save_model
from .nn import TrainConfig, init_model, predict, train_local

EXIT_OK = 0
EXIT_MISSING_INPUT = 2
EXIT_MISSING_PREP = 3
EXIT_BAD_CONFIG = 4
EXIT_FORMAT = 5

DATA_ROOT_ENV = "FEDMIMIC_DATA_ROOT"

MODES = ("prep", "select", "central", "fl", "ftml", "fsml", "eval")

# defaults follow the simulation parameter table
DEFAULTS = {
    "train_file": None,
    "test_file": None,
    "config": None,
    "attack_map": None,
    "model_file": None,
    "history_file": None,
    "seed": 0,
    "rounds": 20,
    "clients": 10,
    "samples_per_client": 500,
    "epochs": 10,
    "batch": 128,
    "lr": 0.001,
    "beta1": 0.1,
    "beta2": 0.99,
    "dropout": 0.4,
    "loss": "mae",
    "k_features": 20,
    "rfe_step": 5,
    "private_fraction": 0.6,
    "student_init": "warm",
    "threads": 1,
    "hidden": 256,
    "test_fraction": 0.1,
    "official_split": False,
    "per_user_public": False,
    "mimic_full_data": False,
    "out_dir": "out",
}


class MissingInput(Exception):
    pass


class MissingPrep(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fedmimic",
        description="NSL-KDD federated mimic-learning training harness")
    p.add_argument("--mode", required=True, choices=MODES)
    p.add_argument("--train-file")
    p.add_argument("--test-file")
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--attack-map", help="custom attack->class mapping file")
    p.add_argument("--model-file", help="model to evaluate (mode=eval)")
    p.add_argument("--history-file", help="round history to re-emit as an "
                                          "accuracy series (mode=eval)")
    p.add_argument("--seed", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--clients", type=int)
    p.add_argument("--samples-per-client", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--beta1", type=float)
    p.add_argument("--beta2", type=float)
    p.add_argument("--dropout", type=float)
    p.add_argument("--loss", choices=("mae", "xent"))
    p.add_argument("--k-features", type=int)
    p.add_argument("--rfe-step", type=int)
    p.add_argument("--private-fraction", type=float)
    p.add_argument("--student-init", choices=("warm", "global", "fresh"))
    p.add_argument("--threads", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--test-fraction", type=float)
    p.add_argument("--official-split", action="store_true", default=None,
                   help="use the given train/test files as-is instead of "
                        "re-splitting the combined corpus")
    p.add_argument("--per-user-public", action="store_true", default=None,
                   help="give each mimic client its own public shard")
    p.add_argument("--mimic-full-data", action="store_true", default=None,
                   help="mimic pool = whole training set instead of "
                        "clients x samples-per-client")
    p.add_argument("--out-dir")
    return p


def resolve_config(args: argparse.Namespace) -> dict:
    """flag > config file > default, per key."""
    cfg = dict(DEFAULTS)
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise MissingInput(f"config file not found: {path}")
        file_cfg = json.loads(path.read_text())
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg["mode"] = args.mode
    return cfg


def train_config(cfg: dict) -> TrainConfig:
    tc = TrainConfig(learning_rate=cfg["lr"], beta1=cfg["beta1"],
                     beta2=cfg["beta2"], batch_size=cfg["batch"],
                     epochs=cfg["epochs"], dropout_rate=cfg["dropout"],
                     loss=cfg["loss"], seed=cfg["seed"])
    tc.validate()
    return tc


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_runmeta(out_dir: Path, cfg: dict, artifacts: list[Path]):
    meta = {
        "config": {k: v for k, v in sorted(cfg.items())},
        "artifacts": {p.name: _sha256(p) for p in artifacts if p.exists()},
    }
    (out_dir / "runmeta.json").write_text(json.dumps(meta, indent=1,
                                                     sort_keys=True))


def _resolve_dataset_path(cfg: dict, key: str, default_name: str) -> Path | None:
    if cfg[key]:
        return Path(cfg[key])
    root = os.environ.get(DATA_ROOT_ENV)
    if root and (Path(root) / default_name).exists():
        return Path(root) / default_name
    return None


def cmd_prep(cfg: dict) -> int:
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    train_path = _resolve_dataset_path(cfg, "train_file", "KDDTrain+.txt")
    if train_path is None:
        raise MissingInput(f"no training file: pass --train-file or set "
                           f"${DATA_ROOT_ENV}")
    if not train_path.exists():
        raise MissingInput(f"training file not found: {train_path}")
    test_path = _resolve_dataset_path(cfg, "test_file", "KDDTest+.txt")
    if test_path is not None and not test_path.exists():
        raise MissingInput(f"test file not found: {test_path}")

    mapping = load_attack_mapping(cfg["attack_map"])
    with open(train_path) as f:
        train_records = parse_records(f)
    test_records = []
    if test_path is not None:
        with open(test_path) as f:
            test_records = parse_records(f)

    if cfg["official_split"]:
        if not test_records:
            raise MissingInput("--official-split requires --test-file")
    else:
        corpus = train_records + test_records
        tr_idx, te_idx = split_indices(len(corpus), cfg["test_fraction"],
                                       cfg["seed"])
        train_records = [corpus[i] for i in tr_idx]
        test_records = [corpus[i] for i in te_idx]

    pipeline = fit_pipeline(train_records)
    train_X = apply_pipeline(pipeline, train_records)
    test_X = apply_pipeline(pipeline, test_records)
    train_y = map_labels(train_records, mapping)
    test_y = map_labels(test_records, mapping)

    np.save(out_dir / "train_X.npy", train_X)
    np.save(out_dir / "train_y.npy", train_y)
    np.save(out_dir / "test_X.npy", test_X)
    np.save(out_dir / "test_y.npy", test_y)
    (out_dir / "pipeline.json").write_text(pipeline.to_json())

    observed = class_counts(np.concatenate([train_y, test_y]))
    manifest = {
        "n_train": len(train_records),
        "n_test": len(test_records),
        "expanded_dim": pipeline.expanded_dim,
        "train_class_counts": class_counts(train_y),
        "test_class_counts": class_counts(test_y),
        "corpus_class_counts": observed,
        "matches_official_kddtrain": observed == D.OFFICIAL_TRAIN_COUNTS,
        "reference_split_train_counts": D.REFERENCE_SPLIT_TRAIN_COUNTS,
        "reference_split_test_counts": D.REFERENCE_SPLIT_TEST_COUNTS,
        "reference_count_discrepancy": {
            "reference_train_sum": sum(D.REFERENCE_SPLIT_TRAIN_COUNTS.values()),
            "reference_reported_train_total": D.REFERENCE_REPORTED_TRAIN_TOTAL,
            "reference_test_sum": sum(D.REFERENCE_SPLIT_TEST_COUNTS.values()),
            "reference_reported_test_total": D.REFERENCE_REPORTED_TEST_TOTAL,
            "note": "reference per-class sums disagree with the reported "
                    "totals; observed counts above come from the files",
        },
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1,
                                                      sort_keys=True))
    print(f"prep: {len(train_records)} train / {len(test_records)} test, "
          f"{pipeline.expanded_dim} expanded features")
    for name, count in class_counts(train_y).items():
        print(f"  train {name}: {count}")
    write_runmeta(out_dir, cfg, [out_dir / n for n in
                                 ("pipeline.json", "manifest.json",
                                  "train_X.npy", "train_y.npy",
                                  "test_X.npy", "test_y.npy")])
    return EXIT_OK


def load_prep(out_dir: Path, selected: bool = True):
    needed = ["pipeline.json", "train_X.npy", "train_y.npy", "test_X.npy",
              "test_y.npy"]
    missing = [n for n in needed if not (out_dir / n).exists()]
    if missing:
        raise MissingPrep(f"prep artifacts missing from {out_dir}: {missing} "
                          f"(run --mode prep first)")
    pipeline = PreprocessPipeline.from_json((out_dir / "pipeline.json").read_text())
    train = Dataset(np.load(out_dir / "train_X.npy"),
                    np.load(out_dir / "train_y.npy"))
    test = Dataset(np.load(out_dir / "test_X.npy"),
                   np.load(out_dir / "test_y.npy"))
    if selected and pipeline.feature_mask:
        train = Dataset(select_columns(train.X, pipeline.feature_mask), train.y)
        test = Dataset(select_columns(test.X, pipeline.feature_mask), test.y)
    return pipeline, train, test


def cmd_select(cfg: dict) -> int:
    out_dir = Path(cfg["out_dir"])
    pipeline, train, _ = load_prep(out_dir, selected=False)
    ranking = select_union(train.X, train.y, k=cfg["k_features"],
                           step=cfg["rfe_step"], seed=cfg["seed"])
    pipeline.feature_mask = ranking.union_mask
    pipeline.per_class_features = ranking.per_class
    (out_dir / "pipeline.json").write_text(pipeline.to_json())
    print(f"select: union mask has {len(ranking.union_mask)} of "
          f"{pipeline.expanded_dim} features")
    write_runmeta(out_dir, cfg, [out_dir / "pipeline.json"])
    return EXIT_OK


def build_mimic_clients(train: Dataset, cfg: dict) -> list[MimicClient]:
    seed = cfg["seed"]
    n_clients = cfg["clients"]
    if cfg["mimic_full_data"]:
        pool = train
    else:
        need = n_clients * cfg["samples_per_client"]
        if need > len(train):
            raise ValueError(f"mimic pool needs {need} samples, have {len(train)}")
        idx = np.random.default_rng(derive_seed(seed, 10)).permutation(len(train))[:need]
        pool = Dataset(train.X[idx], train.y[idx])
    private, public = split_private_public(pool, cfg["private_fraction"],
                                           derive_seed(seed, 11))
    per_client = len(private) // n_clients
    if per_client < 1:
        raise ValueError(f"private pool too small for {n_clients} clients")
    shards = shard_clients(private, n_clients, per_client, derive_seed(seed, 12))
    clients = []
    if cfg["per_user_public"]:
        chunk = len(public) // n_clients
        if chunk < 1:
            raise ValueError(f"public pool too small for {n_clients} clients")
        for cid, shard in enumerate(shards):
            sl = slice(cid * chunk, (cid + 1) * chunk)
            clients.append(MimicClient(cid, shard,
                                       PublicSet(public.X[sl],
                                                 public._truth[sl])))
    else:
        clients = [MimicClient(cid, shard, public)
                   for cid, shard in enumerate(shards)]
    return clients


def cmd_train(cfg: dict) -> int:
    out_dir = Path(cfg["out_dir"])
    pipeline, train, test = load_prep(out_dir)
    tc = train_config(cfg)
    mode, seed = cfg["mode"], cfg["seed"]
    input_dim = train.X.shape[1]
    if input_dim < 1:
        raise ValueError("no features selected; check the feature mask")
    teacher_fits = 0

    if mode == "central":
        model = init_model(input_dim, cfg["hidden"], 5,
                           seed=derive_seed(seed, TAG_INIT))
        model, losses = train_local(model, train.X, train.y, tc)
        history_csv = "epoch,mean_loss\n" + "".join(
            f"{i},{l:.6f}\n" for i, l in enumerate(losses))
    elif mode == "fl":
        shards = [ClientShard(cid, d) for cid, d in enumerate(
            shard_clients(train, cfg["clients"], cfg["samples_per_client"],
                          seed))]
        model, history = run_fl(shards, test, cfg["rounds"], tc, seed,
                                hidden=cfg["hidden"], threads=cfg["threads"])
        history_csv = history.to_csv()
    elif mode in ("ftml", "fsml"):
        clients = build_mimic_clients(train, cfg)
        if mode == "ftml":
            model, history = run_ftml(clients, test, cfg["rounds"], tc, seed,
                                      hidden=cfg["hidden"],
                                      student_init=cfg["student_init"],
                                      threads=cfg["threads"])
        else:
            model, history, teacher_fits = run_fsml(
                clients, test, cfg["rounds"], tc, seed,
                hidden=cfg["hidden"], threads=cfg["threads"])
        history_csv = history.to_csv()
    else:
        raise ValueError(f"unknown training mode {mode!r}")

    save_model(model, out_dir / "model.fmim", tc.loss)
    (out_dir / "history.csv").write_text(history_csv)
    report = per_class_metrics(confusion(predict(model, test.X), test.y))
    (out_dir / "report.txt").write_text(report.to_text())
    (out_dir / "report.csv").write_text(report.to_csv())
    (out_dir / "report.json").write_text(report.to_json())
    print(f"{mode}: overall test accuracy {report.overall_accuracy:.2f}%")
    if teacher_fits:
        print(f"  one-time teacher fits: {teacher_fits}")
    write_runmeta(out_dir, cfg, [out_dir / n for n in
                                 ("model.fmim", "history.csv", "report.txt",
                                  "report.csv", "report.json",
                                  "pipeline.json")])
    return EXIT_OK


def cmd_eval(cfg: dict) -> int:
    out_dir = Path(cfg["out_dir"])
    model_path = Path(cfg["model_file"] or out_dir / "model.fmim")
    if not model_path.exists():
        raise MissingInput(f"model file not found: {model_path}")
    model, _ = load_model(model_path)
    _, _, test = load_prep(out_dir)
    if model.input_dim != test.X.shape[1]:
        raise ModelFormatError(f"model expects {model.input_dim} features, "
                               f"test matrix has {test.X.shape[1]}")
    report = per_class_metrics(confusion(predict(model, test.X), test.y))
    (out_dir / "eval_report.txt").write_text(report.to_text())
    (out_dir / "eval_report.csv").write_text(report.to_csv())
    (out_dir / "eval_report.json").write_text(report.to_json())
    artifacts = [out_dir / n for n in ("eval_report.txt", "eval_report.csv",
                                       "eval_report.json")]
    if cfg["history_file"]:
        hist_path = Path(cfg["history_file"])
        if not hist_path.exists():
            raise MissingInput(f"history file not found: {hist_path}")
        lines = hist_path.read_text().splitlines()
        cols = lines[0].split(",")
        if "round" in cols and "test_accuracy" in cols:
            ri, ai = cols.index("round"), cols.index("test_accuracy")
            series = ["round,test_accuracy"]
            series += [f"{r.split(',')[ri]},{r.split(',')[ai]}" for r in lines[1:]]
            (out_dir / "accuracy_series.csv").write_text("\n".join(series) + "\n")
            artifacts.append(out_dir / "accuracy_series.csv")
    print(f"eval: overall test accuracy {report.overall_accuracy:.2f}%")
    write_runmeta(out_dir, cfg, artifacts)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if cfg["mode"] == "prep":
            return cmd_prep(cfg)
        if cfg["mode"] == "select":
            return cmd_select(cfg)
        if cfg["mode"] == "eval":
            return cmd_eval(cfg)
        return cmd_train(cfg)
    except (MissingInput, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except MissingPrep as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MISSING_PREP
    except (ParseError, ModelFormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FORMAT
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
