"""Command-line front end: synth, consistency, train, cv, ablate, report."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from . import experiment
from .consistency import compute_pseudo_truth
from .dataset import (
    FeatureManifest,
    SynthConfig,
    generate_synthetic,
    load_dataset,
    save_dataset,
)
from .errors import MultiMdError
from .experiment import (
    ExperimentReport,
    TrainConfig,
    ablation_suite,
    cross_validate,
    dataset_digest,
    emit_report,
    train,
)
from .model import ABLATABLE, ModelConfig, MultiMdModel, save_model

# flag name -> (config-file key, type)
_OVERRIDABLE = {
    "seed": int,
    "k": int,
    "epochs": int,
    "lr": float,
    "lambda_aux": float,
    "batch_size": int,
    "d1": int,
    "dc": int,
    "mlp_hidden": int,
    "activation": str,
    "dropout": float,
    "n": int,
    "noise": float,
}

_DEFAULTS = {
    "seed": 0,
    "k": 10,
    "epochs": 200,
    "lr": 0.01,
    "lambda_aux": 1.0,
    "batch_size": 64,
    "d1": 1024,
    "dc": 1024,
    "mlp_hidden": 1024,
    "activation": "relu",
    "dropout": 0.2,
    "n": 400,
    "noise": 1.0,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multimd",
        description="Dual-learning misinformation detection over multimodal features",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, data_required=True):
        if data_required:
            p.add_argument("--data", required=True, help="feature file (JSON lines)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--config", help="JSON config file (defaults < file < flags)")
        p.add_argument("--seed", type=int)

    p = sub.add_parser("synth", help="generate a synthetic feature file")
    p.add_argument("--out", required=True, help="output feature file path")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--noise", type=float)

    p = sub.add_parser("consistency", help="emit per-record consistency scores as CSV")
    add_common(p)

    for name, helptext in (
        ("train", "train one model on the full dataset"),
        ("cv", "k-fold cross-validation"),
        ("ablate", "full-vs-ablated CV suite on shared folds"),
    ):
        p = sub.add_parser(name, help=helptext)
        add_common(p)
        p.add_argument("--k", type=int)
        p.add_argument("--epochs", type=int)
        p.add_argument("--lr", type=float)
        p.add_argument("--lambda-aux", dest="lambda_aux", type=float)
        p.add_argument("--batch-size", dest="batch_size", type=int)
        p.add_argument("--d1", type=int)
        p.add_argument("--dc", type=int)
        p.add_argument("--mlp-hidden", dest="mlp_hidden", type=int)
        p.add_argument("--activation", choices=("relu", "sigmoid", "tanh"))
        p.add_argument("--dropout", type=float)
        p.add_argument("--ablate", choices=ABLATABLE, action="append", default=None,
                       help="ablate a component (repeatable)")

    p = sub.add_parser("report", help="re-render tables from a run directory")
    p.add_argument("--run", required=True, help="directory written by cv/ablate")
    return parser


def resolve_options(args: argparse.Namespace) -> dict:
    """Layer defaults < config file < explicit flags; MULTIMD_SEED fallback."""
    opts = dict(_DEFAULTS)
    seed_set = False
    config_path = getattr(args, "config", None)
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - set(_OVERRIDABLE)
        if unknown:
            raise MultiMdError(f"config file: unknown keys {sorted(unknown)}")
        for key, value in file_cfg.items():
            opts[key] = _OVERRIDABLE[key](value)
            seed_set = seed_set or key == "seed"
    for key in _OVERRIDABLE:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
            seed_set = seed_set or key == "seed"
    if not seed_set:
        env_seed = os.environ.get("MULTIMD_SEED")
        if env_seed is not None:
            opts["seed"] = int(env_seed)
    return opts


def _model_cfg(manifest: FeatureManifest, opts: dict, ablate=None) -> ModelConfig:
    return ModelConfig(
        d_T=manifest.d_T,
        d_I=manifest.d_I,
        d_A=manifest.d_A,
        d_1=opts["d1"],
        d_c=opts["dc"],
        mlp_hidden=opts["mlp_hidden"],
        activation=opts["activation"],
        dropout=opts["dropout"],
        lambda_aux=opts["lambda_aux"],
        seed=opts["seed"],
        ablate=frozenset(ablate or ()),
    )


def _train_cfg(opts: dict) -> TrainConfig:
    return TrainConfig(
        lr=opts["lr"],
        epochs=opts["epochs"],
        batch_size=opts["batch_size"],
        seed=opts["seed"],
    )


def _write_run_manifest(outdir: str, command: str, opts: dict, digest: str = "") -> None:
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "run_manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(
            {"command": command, "options": opts, "dataset_digest": digest},
            fh, indent=2, sort_keys=True,
        )


def cmd_synth(args) -> int:
    opts = resolve_options(args)
    cfg = SynthConfig(n=opts["n"], noise_scale=opts["noise"], seed=opts["seed"])
    save_dataset(generate_synthetic(cfg), args.out)
    print(f"wrote {opts['n']} records to {args.out}")
    return 0


def cmd_consistency(args) -> int:
    opts = resolve_options(args)
    ds = load_dataset(args.data)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "consistency.csv")
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "text_image", "text_audio", "image_audio",
                    "smc_level", "defined_pairs"])
        for r in ds.records:
            s = compute_pseudo_truth(r)
            w.writerow([r.id, repr(s.text_image), repr(s.text_audio),
                        repr(s.image_audio), repr(s.smc_level), s.defined_pairs])
    _write_run_manifest(args.out, "consistency", opts, dataset_digest(ds))
    print(f"wrote {out_path}")
    return 0


def cmd_train(args) -> int:
    opts = resolve_options(args)
    ds = load_dataset(args.data)
    model_cfg = _model_cfg(ds.manifest, opts, args.ablate)
    model = MultiMdModel(model_cfg)
    history = train(model, ds.records, _train_cfg(opts))
    os.makedirs(args.out, exist_ok=True)
    save_model(model, os.path.join(args.out, "model.json"))
    with open(os.path.join(args.out, "history.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "loss"])
        for i, loss in enumerate(history):
            w.writerow([i, repr(loss)])
    _write_run_manifest(args.out, "train", opts, dataset_digest(ds))
    print(f"final training loss {history[-1]:.6f}; model saved under {args.out}")
    return 0


def cmd_cv(args) -> int:
    opts = resolve_options(args)
    if opts["k"] < 2:
        print("error: --k must be >= 2", file=sys.stderr)
        return 2
    ds = load_dataset(args.data)
    model_cfg = _model_cfg(ds.manifest, opts, args.ablate)
    result = cross_validate(ds, model_cfg, _train_cfg(opts), k=opts["k"])
    report = ExperimentReport(
        cv=result, config=opts, dataset_digest=dataset_digest(ds)
    )
    emit_report(report, args.out)
    _write_run_manifest(args.out, "cv", opts, report.dataset_digest)
    print(experiment.render_tables(report), end="")
    return 0


def cmd_ablate(args) -> int:
    opts = resolve_options(args)
    if opts["k"] < 2:
        print("error: --k must be >= 2", file=sys.stderr)
        return 2
    ds = load_dataset(args.data)
    model_cfg = _model_cfg(ds.manifest, opts)
    targets = tuple(args.ablate) if args.ablate else ABLATABLE
    full, rows = ablation_suite(ds, model_cfg, _train_cfg(opts),
                                k=opts["k"], targets=targets)
    report = ExperimentReport(
        cv=full, ablation=rows, config=opts, dataset_digest=dataset_digest(ds)
    )
    emit_report(report, args.out)
    _write_run_manifest(args.out, "ablate", opts, report.dataset_digest)
    print(experiment.render_tables(report), end="")
    return 0


def cmd_report(args) -> int:
    tables = os.path.join(args.run, "tables.txt")
    if not os.path.exists(tables):
        print(f"error: no tables.txt under {args.run}", file=sys.stderr)
        return 1
    with open(tables, encoding="utf-8") as fh:
        print(fh.read(), end="")
    return 0


_COMMANDS = {
    "synth": cmd_synth,
    "consistency": cmd_consistency,
    "train": cmd_train,
    "cv": cmd_cv,
    "ablate": cmd_ablate,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except MultiMdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
