"""Acceptance suite: one test per criterion, one printed PASS/FAIL line each.

Tolerances are pinned in the assertions below and must not be loosened.
Every criterion is deterministic (fixed seeds throughout).
"""

import time

import numpy as np
import pytest

from multimd import experiment
from multimd.consistency import compute_pseudo_truth, pair_consistency
from multimd.dataset import (
    Dataset,
    FeatureManifest,
    SmcRecord,
    SynthConfig,
    balance_undersample,
    generate_synthetic,
    make_folds,
)
from multimd.experiment import (
    ExperimentReport,
    Metrics,
    TrainConfig,
    ablation_suite,
    cross_validate,
    dataset_digest,
    emit_report,
    paired_ttest,
)
from multimd.model import ModelConfig, MultiMdModel, enhance, fuse


# Pinned desk-scale experiment configuration for criteria 4 and 5. The
# synthetic dataset and every seed are fixed, so the numbers are exact
# reruns, not samples from a distribution.
ACCEPT_SYNTH = SynthConfig(n=400, seed=5)
ACCEPT_MODEL = dict(
    d_T=16, d_I=16, d_A=8, d_1=32, d_c=32, mlp_hidden=32,
    dropout=0.2, lambda_aux=2.0, seed=0,
)
ACCEPT_TRAIN = TrainConfig(lr=0.01, epochs=200, batch_size=64, seed=0)


def announce(capsys, name, ok, detail):
    with capsys.disabled():
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")


@pytest.fixture(scope="module")
def ablation_results():
    """Shared full-vs-ablated CV used by criteria 4 and 5."""
    ds = generate_synthetic(ACCEPT_SYNTH)
    start = time.monotonic()
    full, rows = ablation_suite(ds, ModelConfig(**ACCEPT_MODEL), ACCEPT_TRAIN, k=10)
    elapsed = time.monotonic() - start
    return full, rows, elapsed


def test_gradient_correctness(capsys):
    """Analytic gradients match central finite differences on a toy config."""
    start = time.monotonic()
    cfg = ModelConfig(d_T=8, d_I=8, d_A=4, d_1=6, d_c=6, mlp_hidden=6, dropout=0.0)
    rng = np.random.default_rng(0)
    m = MultiMdModel(cfg)
    # biases start at zero, which parks relu pre-activations exactly on the
    # kink; randomize all parameters so the loss is differentiable at the
    # checked point
    for k in m.params:
        m.params[k] = 0.5 * rng.standard_normal(m.params[k].shape)
    X = rng.standard_normal((6, cfg.d))
    y = rng.integers(0, 2, size=6).astype(float)
    y_cons = rng.uniform(-1, 1, size=6)
    h = 1e-5
    checked = 0
    worst = 0.0
    _, grads = m.loss_and_grads(X, y, y_cons, training=False)
    ok = True
    for name, grad in grads.items():
        flat = m.params[name].ravel()
        gflat = grad.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up, _ = m.loss_and_grads(X, y, y_cons, training=False)
            flat[i] = orig - h
            dn, _ = m.loss_and_grads(X, y, y_cons, training=False)
            flat[i] = orig
            fd = (up - dn) / (2 * h)
            checked += 1
            if abs(gflat[i]) < 1e-6:
                ok = ok and abs(fd - gflat[i]) < 1e-8
            else:
                rel = abs(fd - gflat[i]) / abs(gflat[i])
                worst = max(worst, rel)
                ok = ok and rel < 1e-4
    elapsed = time.monotonic() - start
    ok = ok and elapsed < 10.0
    announce(capsys, "gradient correctness",
             ok, f"{checked} params, worst rel err {worst:.2e}, {elapsed:.1f}s")
    assert ok


def test_consistency_oracle(capsys):
    """pair_consistency equals brute force exactly; smc_level to 1e-12."""
    rng = np.random.default_rng(7)
    pair_exact = True
    worst_smc = 0.0
    for i in range(1000):
        sets = {}
        for mod in ("text", "image", "audio"):
            count = int(rng.integers(0, 21))
            sets[mod] = [rng.standard_normal(8) for _ in range(count)]
        record = SmcRecord(
            id=f"r{i}", label=0,
            text_emb=np.zeros(2), image_emb=np.zeros(2), audio_emb=np.zeros(2),
            entities=sets,
        )
        resolved = []
        for m1, m2 in (("text", "image"), ("text", "audio"), ("image", "audio")):
            got = pair_consistency(sets[m1], sets[m2])
            best = None
            for a in sets[m1]:
                for b in sets[m2]:
                    na, nb = np.linalg.norm(a), np.linalg.norm(b)
                    if na == 0.0 or nb == 0.0:
                        continue
                    c = float(np.dot(a, b)) / float(na * nb)
                    best = c if best is None else max(best, c)
            if best is None:
                pair_exact = pair_exact and got is None
                resolved.append(0.0)
            else:
                best = min(1.0, max(-1.0, best))
                pair_exact = pair_exact and got == best
                resolved.append(best)
        smc = compute_pseudo_truth(record).smc_level
        worst_smc = max(worst_smc, abs(smc - float(np.mean(resolved))))
    ok = pair_exact and worst_smc <= 1e-12
    announce(capsys, "consistency oracle",
             ok, f"1000 records, pair exact={pair_exact}, smc err {worst_smc:.1e}")
    assert ok


def test_dimension_law(capsys):
    """fuse gives 1920, enhance gives 2944; ablations remove exact blocks."""
    cfg = ModelConfig()
    fused = fuse(np.zeros(768), np.zeros(1024), np.zeros(128), cfg)
    enhanced = enhance(fused, np.zeros(cfg.d_c))
    ok = fused.shape == (1920,) and enhanced.shape == (2944,)
    removed = {"text": 768, "image": 1024, "audio": 128, "consistency": 1024}
    for target, width in removed.items():
        ablated = ModelConfig(ablate=frozenset({target}))
        ok = ok and ablated.classifier_input_dim == cfg.classifier_input_dim - width
    announce(capsys, "dimension law",
             ok, f"fuse {fused.shape[0]}, enhance {enhanced.shape[0]}, "
                 "each ablation removes its exact block")
    assert ok


def test_synthetic_separability(capsys, ablation_results):
    """10-fold CV mean accuracy >= 0.95 on the pinned synthetic dataset."""
    full, _, elapsed = ablation_results
    acc = full.means["accuracy"]
    ok = acc >= 0.95 and ACCEPT_TRAIN.epochs <= 200 and elapsed < 300.0
    announce(capsys, "synthetic separability",
             ok, f"mean accuracy {acc:.4f} (>= 0.95), "
                 f"{ACCEPT_TRAIN.epochs} epochs, suite ran in {elapsed:.0f}s")
    assert ok


def test_directional_ablation(capsys, ablation_results):
    """Every ablation hurts (or ties); consistency ablation strictly hurts."""
    _, rows, _ = ablation_results
    by_target = {r.target: r for r in rows}
    ok = all(r.mean_diff["accuracy"] >= 0.0 for r in rows)
    cons = by_target["consistency"]
    cons_diff = cons.mean_diff["accuracy"]
    cons_t = cons.tstats["accuracy"].t
    ok = ok and cons_diff > 0.0 and cons_t > 0.0
    detail = ", ".join(
        f"{r.target} {r.mean_diff['accuracy']:+.4f}" for r in rows
    )
    announce(capsys, "directional ablation",
             ok, f"{detail}; consistency t={cons_t:.2f}")
    assert ok


def test_metrics_oracle(capsys):
    """Counts-based metrics match a pairwise recount; fixed example holds."""
    fixed = Metrics.from_counts(tp=3, fp=1, fn=1, tn=5)
    ok = (fixed.accuracy, fixed.precision, fixed.recall, fixed.f1) == (
        0.8, 0.75, 0.75, 0.75
    )
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = int(rng.integers(1, 80))
        preds = rng.integers(0, 2, size=n)
        labels = rng.integers(0, 2, size=n)
        tp = fp = fn = tn = 0
        for p, y in zip(preds, labels):
            if p == 1 and y == 1:
                tp += 1
            elif p == 1 and y == 0:
                fp += 1
            elif p == 0 and y == 1:
                fn += 1
            else:
                tn += 1
        m = Metrics.from_counts(tp, fp, fn, tn)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        ok = ok and (m.accuracy, m.precision, m.recall, m.f1) == (
            (tp + tn) / n, prec, rec, f1
        )
    announce(capsys, "metrics oracle",
             ok, "fixed example (0.8, 0.75, 0.75, 0.75) + 50 random sets exact")
    assert ok


def test_ttest_oracle(capsys):
    """t on d=[1..10] is 5.745 +- 1e-3; antisymmetry and degeneracy hold."""
    res = paired_ttest(list(range(1, 11)), [0.0] * 10)
    ok = abs(res.t - 5.745) <= 1e-3 and res.df == 9
    rng = np.random.default_rng(4)
    a = rng.standard_normal(10)
    b = rng.standard_normal(10)
    ok = ok and abs(paired_ttest(a, b).t + paired_ttest(b, a).t) < 1e-12
    same = paired_ttest([0.1, 0.2, 0.3], [0.1, 0.2, 0.3])
    ok = ok and same.degenerate and same.t == 0.0
    announce(capsys, "t-test oracle",
             ok, f"t={res.t:.4f} (target 5.745 +- 1e-3), "
                 "antisymmetric, degenerate-on-identical")
    assert ok


def test_determinism(capsys, tmp_path):
    """Same-seed CV reports are byte-identical; folds partition n=1288."""
    ds = generate_synthetic(
        SynthConfig(n=40, seed=2, manifest=FeatureManifest(d_T=6, d_I=6, d_A=4, d_E=4))
    )
    cfg = ModelConfig(d_T=6, d_I=6, d_A=4, d_1=8, d_c=8, mlp_hidden=8)
    tcfg = TrainConfig(epochs=5, seed=0)
    outputs = []
    for run in ("a", "b"):
        cv = cross_validate(ds, cfg, tcfg, k=4)
        report = ExperimentReport(cv=cv, config={}, dataset_digest=dataset_digest(ds))
        paths = emit_report(report, tmp_path / run)
        outputs.append({k: open(p, "rb").read() for k, p in paths.items()})
    identical = outputs[0] == outputs[1]

    big = Dataset(
        manifest=FeatureManifest(d_T=1, d_I=1, d_A=1, d_E=1),
        records=[
            SmcRecord(id=f"r{i}", label=i % 2, text_emb=np.zeros(1),
                      image_emb=np.zeros(1), audio_emb=np.zeros(1))
            for i in range(1288)
        ],
    )
    plan = make_folds(big, k=10, seed=0)
    sizes = sorted(len(plan.fold_ids(f)) for f in range(10))
    union = [rid for f in range(10) for rid in plan.fold_ids(f)]
    partition = sizes == [128, 128] + [129] * 8 and sorted(union) == sorted(
        r.id for r in big.records
    )
    ok = identical and partition
    announce(capsys, "determinism",
             ok, f"reports byte-identical={identical}, "
                 f"fold sizes {sizes[:2]}x128 + {sizes[2:].count(129)}x129")
    assert ok


def test_balance(capsys):
    """Undersampling equalizes classes, stays a subset, and is idempotent."""
    rng = np.random.default_rng(5)
    ok = True
    for _ in range(20):
        n_fake = int(rng.integers(1, 50))
        n_real = int(rng.integers(1, 50))
        ds = Dataset(
            manifest=FeatureManifest(d_T=1, d_I=1, d_A=1, d_E=1),
            records=[
                SmcRecord(id=f"r{i}", label=1 if i < n_fake else 0,
                          text_emb=np.zeros(1), image_emb=np.zeros(1),
                          audio_emb=np.zeros(1))
                for i in range(n_fake + n_real)
            ],
        )
        out = balance_undersample(ds, seed=0)
        fake, real = out.class_counts()
        ok = ok and fake == real == min(n_fake, n_real)
        ok = ok and {r.id for r in out.records} <= {r.id for r in ds.records}
        again = balance_undersample(out, seed=1)
        ok = ok and [r.id for r in again.records] == [r.id for r in out.records]
    announce(capsys, "balance",
             ok, "equal counts = min(class sizes), subset, idempotent (20 cases)")
    assert ok
