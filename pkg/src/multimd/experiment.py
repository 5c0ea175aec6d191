"""Training loop, metrics, 10-fold cross-validation, t-tests, ablations, reports."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .consistency import compute_pseudo_truth
from .dataset import Dataset, FoldPlan, SmcRecord, make_folds
from .errors import ConfigError, DatasetError
from .model import ABLATABLE, ModelConfig, MultiMdModel
from .numeric import adam_step

METRIC_NAMES = ("accuracy", "precision", "recall", "f1")


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.01
    epochs: int = 200
    batch_size: int = 64
    seed: int = 0
    shuffle_per_epoch: bool = True

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigError("lr must be > 0")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    tn: int
    degenerate_precision: bool = False
    degenerate_recall: bool = False

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int, tn: int) -> "Metrics":
        total = tp + fp + fn + tn
        accuracy = (tp + tn) / total if total else 0.0
        deg_p = (tp + fp) == 0
        deg_r = (tp + fn) == 0
        precision = 0.0 if deg_p else tp / (tp + fp)
        recall = 0.0 if deg_r else tp / (tp + fn)
        f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
        return cls(accuracy, precision, recall, f1, tp, fp, fn, tn, deg_p, deg_r)

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}


@dataclass(frozen=True)
class FoldResult:
    fold: int
    metrics: Metrics
    final_loss: float


@dataclass
class CvResult:
    folds: list[FoldResult]
    means: dict[str, float]
    plan: FoldPlan


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: int
    mean_diff: float
    degenerate: bool = False


@dataclass
class AblationRow:
    target: str
    mean_diff: dict[str, float]  # full minus ablated, per metric
    tstats: dict[str, TTestResult]


@dataclass
class ExperimentReport:
    cv: CvResult
    ablation: list[AblationRow] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    dataset_digest: str = ""


def precompute_truths(records: list[SmcRecord]) -> dict[str, float]:
    """SMC-level consistency pseudo ground truth per record id."""
    return {r.id: compute_pseudo_truth(r).smc_level for r in records}


def records_to_arrays(records, cfg: ModelConfig, truths: dict[str, float]):
    """Stack fused inputs, labels and consistency targets into arrays."""
    embs = {"text": "text_emb", "image": "image_emb", "audio": "audio_emb"}
    rows = [
        np.concatenate([getattr(r, embs[m]) for m in cfg.modalities]) for r in records
    ]
    X = np.stack(rows)
    y = np.array([r.label for r in records], dtype=float)
    y_cons = np.array([truths[r.id] for r in records])
    return X, y, y_cons


def train(
    model: MultiMdModel,
    records: list[SmcRecord],
    cfg: TrainConfig,
    truths: dict[str, float] | None = None,
) -> list[float]:
    """Mini-batch Adam on the dual-learning loss; returns per-epoch mean loss."""
    if not records:
        raise DatasetError("train: empty training set")
    if truths is None:
        truths = precompute_truths(records)
    X, y, y_cons = records_to_arrays(records, model.cfg, truths)
    rng = np.random.default_rng(cfg.seed)
    state = model.new_adam_state()
    n = X.shape[0]
    history = []
    for _ in range(cfg.epochs):
        order = rng.permutation(n) if cfg.shuffle_per_epoch else np.arange(n)
        losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, grads = model.loss_and_grads(X[idx], y[idx], y_cons[idx], training=True)
            adam_step(model.params, grads, state, cfg.lr)
            losses.append(loss)
        history.append(float(np.mean(losses)))
    return history


def evaluate_metrics(model: MultiMdModel, records: list[SmcRecord]) -> Metrics:
    """Argmax predictions against labels; positive class = fake (1)."""
    if not records:
        raise DatasetError("evaluate_metrics: empty test set")
    embs = {"text": "text_emb", "image": "image_emb", "audio": "audio_emb"}
    X = np.stack(
        [np.concatenate([getattr(r, embs[m]) for m in model.cfg.modalities]) for r in records]
    )
    preds = model.predict_batch(X)
    labels = np.array([r.label for r in records])
    tp = int(np.sum((preds == 1) & (labels == 1)))
    fp = int(np.sum((preds == 1) & (labels == 0)))
    fn = int(np.sum((preds == 0) & (labels == 1)))
    tn = int(np.sum((preds == 0) & (labels == 0)))
    return Metrics.from_counts(tp, fp, fn, tn)


def cross_validate(
    dataset: Dataset,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    k: int = 10,
    plan: FoldPlan | None = None,
    truths: dict[str, float] | None = None,
) -> CvResult:
    """Train on k-1 folds, test on the held-out fold, with a fresh seeded
    model per fold (seed = base seed + fold index)."""
    if plan is None:
        plan = make_folds(dataset, k=k, seed=train_cfg.seed)
    if truths is None:
        truths = precompute_truths(dataset.records)
    by_id = {r.id: r for r in dataset.records}
    folds = []
    for fold in range(plan.k):
        test = [by_id[rid] for rid in plan.fold_ids(fold)]
        train_set = [r for r in dataset.records if plan.assignments[r.id] != fold]
        fold_model_cfg = ModelConfig(
            **{**_cfg_dict(model_cfg), "seed": model_cfg.seed + fold}
        )
        model = MultiMdModel(fold_model_cfg)
        history = train(model, train_set, train_cfg, truths=truths)
        metrics = evaluate_metrics(model, test)
        folds.append(FoldResult(fold=fold, metrics=metrics, final_loss=history[-1]))
    means = {
        name: float(np.mean([f.metrics.as_dict()[name] for f in folds]))
        for name in METRIC_NAMES
    }
    return CvResult(folds=folds, means=means, plan=plan)


def paired_ttest(a, b) -> TTestResult:
    """Paired-sample t on per-fold values; sample sd (k-1 denominator)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DatasetError(f"paired_ttest: lengths {a.shape[0]} vs {b.shape[0]}")
    k = a.shape[0]
    if k < 2:
        raise DatasetError("paired_ttest: need at least 2 pairs")
    d = a - b
    mean = float(np.mean(d))
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        t = 0.0 if mean == 0.0 else math.copysign(math.inf, mean)
        return TTestResult(t=t, df=k - 1, mean_diff=mean, degenerate=True)
    return TTestResult(t=mean / (sd / math.sqrt(k)), df=k - 1, mean_diff=mean)


def ablation_suite(
    dataset: Dataset,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    k: int = 10,
    targets: tuple[str, ...] = ABLATABLE,
) -> tuple[CvResult, list[AblationRow]]:
    """CV for the full model and each single-target ablation on shared folds."""
    plan = make_folds(dataset, k=k, seed=train_cfg.seed)
    truths = precompute_truths(dataset.records)
    full = cross_validate(dataset, model_cfg, train_cfg, k=k, plan=plan, truths=truths)
    rows = []
    for target in targets:
        ablated_cfg = ModelConfig(
            **{**_cfg_dict(model_cfg), "ablate": model_cfg.ablate | {target}}
        )
        ablated = cross_validate(
            dataset, ablated_cfg, train_cfg, k=k, plan=plan, truths=truths
        )
        diffs = {}
        tstats = {}
        for name in METRIC_NAMES:
            full_vals = [f.metrics.as_dict()[name] for f in full.folds]
            abl_vals = [f.metrics.as_dict()[name] for f in ablated.folds]
            diffs[name] = float(np.mean(full_vals) - np.mean(abl_vals))
            tstats[name] = paired_ttest(full_vals, abl_vals)
        rows.append(AblationRow(target=target, mean_diff=diffs, tstats=tstats))
    return full, rows


def _cfg_dict(cfg: ModelConfig) -> dict:
    return {
        "d_T": cfg.d_T, "d_I": cfg.d_I, "d_A": cfg.d_A,
        "d_1": cfg.d_1, "d_c": cfg.d_c, "mlp_hidden": cfg.mlp_hidden,
        "activation": cfg.activation, "dropout": cfg.dropout,
        "lambda_aux": cfg.lambda_aux, "seed": cfg.seed, "ablate": cfg.ablate,
    }


def dataset_digest(dataset: Dataset) -> str:
    """SHA-256 over the canonical serialization of all records."""
    h = hashlib.sha256()
    h.update(json.dumps(
        [dataset.manifest.d_T, dataset.manifest.d_I, dataset.manifest.d_A,
         dataset.manifest.d_E, dataset.manifest.schema_version]
    ).encode())
    for r in dataset.records:
        h.update(r.id.encode())
        h.update(bytes([r.label]))
        for arr in (r.text_emb, r.image_emb, r.audio_emb):
            h.update(np.ascontiguousarray(arr).tobytes())
        for mod in ("text", "image", "audio"):
            for v in r.entities[mod]:
                h.update(np.ascontiguousarray(v).tobytes())
    return h.hexdigest()


def format_percent(value: float) -> str:
    return f"{value * 100:.2f}%"


def emit_report(report: ExperimentReport, outdir) -> dict[str, str]:
    """Write cv.csv, ablation.csv, ttests.csv, manifest.json and tables.txt.

    Returns the mapping of artifact name to path."""
    os.makedirs(outdir, exist_ok=True)
    paths = {}

    cv_path = os.path.join(outdir, "cv.csv")
    with open(cv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["fold", *METRIC_NAMES, "tp", "fp", "fn", "tn", "final_loss"])
        for f in report.cv.folds:
            m = f.metrics
            w.writerow([
                f.fold, repr(m.accuracy), repr(m.precision), repr(m.recall),
                repr(m.f1), m.tp, m.fp, m.fn, m.tn, repr(f.final_loss),
            ])
        w.writerow(["mean", *[repr(report.cv.means[n]) for n in METRIC_NAMES],
                    "", "", "", "", ""])
    paths["cv"] = cv_path

    abl_path = os.path.join(outdir, "ablation.csv")
    with open(abl_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["ablated", *[f"diff_{n}" for n in METRIC_NAMES]])
        for row in report.ablation:
            w.writerow([row.target, *[repr(row.mean_diff[n]) for n in METRIC_NAMES]])
    paths["ablation"] = abl_path

    tt_path = os.path.join(outdir, "ttests.csv")
    with open(tt_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["ablated", "metric", "t", "df", "mean_diff", "degenerate"])
        for row in report.ablation:
            for name in METRIC_NAMES:
                tt = row.tstats[name]
                w.writerow([row.target, name, repr(tt.t), tt.df,
                            repr(tt.mean_diff), tt.degenerate])
    paths["ttests"] = tt_path

    manifest_path = os.path.join(outdir, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "config": report.config,
                "dataset_digest": report.dataset_digest,
                "fold_seed": report.cv.plan.seed,
                "k": report.cv.plan.k,
            },
            fh, indent=2, sort_keys=True,
        )
    paths["manifest"] = manifest_path

    text_path = os.path.join(outdir, "tables.txt")
    with open(text_path, "w", encoding="utf-8") as fh:
        fh.write(render_tables(report))
    paths["tables"] = text_path
    return paths


def render_tables(report: ExperimentReport) -> str:
    """Aligned-text tables with percentages to two decimals."""
    lines = []
    header = f"{'Fold':<6}" + "".join(f"{n.capitalize():>12}" for n in METRIC_NAMES)
    lines.append("Cross-validation results")
    lines.append(header)
    for f in report.cv.folds:
        m = f.metrics.as_dict()
        lines.append(
            f"{f.fold:<6}" + "".join(f"{format_percent(m[n]):>12}" for n in METRIC_NAMES)
        )
    lines.append(
        f"{'mean':<6}"
        + "".join(f"{format_percent(report.cv.means[n]):>12}" for n in METRIC_NAMES)
    )
    if report.ablation:
        lines.append("")
        lines.append("Ablation: mean difference (full - ablated), t-statistic over folds")
        lines.append(
            f"{'Ablated':<14}" + "".join(f"{n.capitalize():>16}" for n in METRIC_NAMES)
        )
        for row in report.ablation:
            cells = []
            for n in METRIC_NAMES:
                tt = row.tstats[n]
                cells.append(f"{row.mean_diff[n]:+.3f} (t={tt.t:.2f})")
            lines.append(f"{row.target:<14}" + "".join(f"{c:>16}" for c in cells))
    return "\n".join(lines) + "\n"
