"""The MultiMD network: fusion, consistency extractor, dual-learning loss.

The computation graph is fixed: the fused modality vector feeds both a
two-layer consistency feature extractor (whose scalar head regresses onto
the pseudo ground truth) and, concatenated with the extracted feature, a
two-layer softmax classifier. Gradients are hand-derived for this graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dataset import SmcRecord
from .errors import ConfigError, ShapeError
from .numeric import (
    AdamState,
    DropoutSpec,
    affine_backward,
    affine_forward,
    bce_loss,
    dropout_apply,
    glorot_uniform,
    softmax,
    squared_error,
)

ABLATABLE = ("text", "image", "audio", "consistency")


@dataclass(frozen=True)
class ModelConfig:
    d_T: int = 768
    d_I: int = 1024
    d_A: int = 128
    d_1: int = 1024
    d_c: int = 1024
    mlp_hidden: int = 1024
    activation: str = "relu"
    dropout: float = 0.2
    lambda_aux: float = 1.0
    seed: int = 0
    ablate: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        for name in ("d_T", "d_I", "d_A", "d_1", "d_c", "mlp_hidden"):
            if getattr(self, name) < 1:
                raise ConfigError(f"model dim {name} must be >= 1")
        if self.lambda_aux < 0:
            raise ConfigError("lambda_aux must be >= 0")
        unknown = set(self.ablate) - set(ABLATABLE)
        if unknown:
            raise ConfigError(f"unknown ablation targets {sorted(unknown)}")
        if not self.modalities:
            raise ConfigError("ablation must retain at least one modality")

    @property
    def modalities(self) -> tuple[str, ...]:
        return tuple(m for m in ("text", "image", "audio") if m not in self.ablate)

    @property
    def use_consistency(self) -> bool:
        return "consistency" not in self.ablate

    @property
    def d(self) -> int:
        dims = {"text": self.d_T, "image": self.d_I, "audio": self.d_A}
        return sum(dims[m] for m in self.modalities)

    @property
    def classifier_input_dim(self) -> int:
        return self.d + (self.d_c if self.use_consistency else 0)


@dataclass
class ForwardOutput:
    y_hat: np.ndarray  # [p_real, p_fake]
    consistency_pred: float | None
    h_smc: np.ndarray
    h_consistency: np.ndarray | None
    h_smc_enhanced: np.ndarray


def fuse(h_T: np.ndarray, h_I: np.ndarray, h_A: np.ndarray,
         cfg: ModelConfig | None = None) -> np.ndarray:
    """Concatenate the three modality vectors in text/image/audio order."""
    if cfg is not None:
        expected = (cfg.d_T, cfg.d_I, cfg.d_A)
        got = (h_T.shape[0], h_I.shape[0], h_A.shape[0])
        if got != expected:
            raise ShapeError(f"fuse: dims {got} != configured {expected}")
    return np.concatenate([h_T, h_I, h_A])


def enhance(h_smc: np.ndarray, h_consistency: np.ndarray) -> np.ndarray:
    """Concatenate the fused vector with the consistency feature vector."""
    return np.concatenate([h_smc, h_consistency])


class MultiMdModel:
    """Parameter container plus forward / loss-and-gradients for one graph."""

    def __init__(self, cfg: ModelConfig):
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        d, d_1, d_c, hid = cfg.d, cfg.d_1, cfg.d_c, cfg.mlp_hidden
        params: dict[str, np.ndarray] = {}
        if cfg.use_consistency:
            params["mlp1_W"] = glorot_uniform(hid, d, rng)
            params["mlp1_b"] = np.zeros(hid)
            params["mlp2_W"] = glorot_uniform(d_c, hid, rng)
            params["mlp2_b"] = np.zeros(d_c)
            params["cons_W"] = glorot_uniform(1, d_c, rng)
            params["cons_b"] = np.zeros(1)
        params["cls1_W"] = glorot_uniform(d_1, cfg.classifier_input_dim, rng)
        params["cls1_b"] = np.zeros(d_1)
        params["cls2_W"] = glorot_uniform(2, d_1, rng)
        params["cls2_b"] = np.zeros(2)
        self.params = params
        self.dropout = DropoutSpec(p=cfg.dropout, seed=cfg.seed + 1)

    # -- record-level API ---------------------------------------------------

    def fuse_record(self, r: SmcRecord) -> np.ndarray:
        embs = {"text": r.text_emb, "image": r.image_emb, "audio": r.audio_emb}
        return np.concatenate([embs[m] for m in self.cfg.modalities])

    def extract_consistency(self, h_smc: np.ndarray) -> np.ndarray:
        if not self.cfg.use_consistency:
            raise ConfigError("consistency extractor is ablated in this model")
        act = self.cfg.activation
        a1, _ = affine_forward(self.params["mlp1_W"], self.params["mlp1_b"], h_smc, act)
        h_c, _ = affine_forward(self.params["mlp2_W"], self.params["mlp2_b"], a1, act)
        return h_c

    def forward(self, r: SmcRecord, training: bool = False) -> ForwardOutput:
        h_smc = self.fuse_record(r)
        out = self._forward_batch(h_smc[None, :], training=training)
        h_c = out["h_c"][0] if self.cfg.use_consistency else None
        pred = float(out["pred"][0]) if self.cfg.use_consistency else None
        return ForwardOutput(
            y_hat=out["y_hat"][0],
            consistency_pred=pred,
            h_smc=h_smc,
            h_consistency=h_c,
            h_smc_enhanced=out["H"][0],
        )

    def total_loss(self, out: ForwardOutput, y: int, y_consistency: float,
                   lambda_aux: float | None = None) -> float:
        lam = self.cfg.lambda_aux if lambda_aux is None else lambda_aux
        loss = bce_loss(out.y_hat[1], y)
        if self.cfg.use_consistency:
            loss += lam * squared_error(out.consistency_pred, y_consistency)
        return loss

    # -- batched internals --------------------------------------------------

    def _forward_batch(self, X: np.ndarray, training: bool) -> dict:
        cfg = self.cfg
        if X.shape[1] != cfg.d:
            raise ShapeError(f"forward: fused dim {X.shape[1]} != configured {cfg.d}")
        act = cfg.activation
        out: dict = {"X": X}
        if cfg.use_consistency:
            a1, c1 = affine_forward(self.params["mlp1_W"], self.params["mlp1_b"], X, act)
            h_c, c2 = affine_forward(self.params["mlp2_W"], self.params["mlp2_b"], a1, act)
            pred = h_c @ self.params["cons_W"].T + self.params["cons_b"]  # (n, 1)
            H = np.concatenate([X, h_c], axis=1)
            out.update(a1=a1, c1=c1, h_c=h_c, c2=c2, pred=pred[:, 0])
        else:
            H = X
        z1, c3 = affine_forward(self.params["cls1_W"], self.params["cls1_b"], H, act)
        z1d, mask = dropout_apply(z1, self.dropout, training)
        logits = z1d @ self.params["cls2_W"].T + self.params["cls2_b"]
        y_hat = softmax(logits)
        out.update(H=H, c3=c3, z1d=z1d, mask=mask, y_hat=y_hat)
        return out

    def loss_and_grads(
        self,
        X: np.ndarray,
        y: np.ndarray,
        y_cons: np.ndarray,
        training: bool = True,
    ) -> tuple[float, dict[str, np.ndarray]]:
        """Batch-mean total loss and analytic gradients for every parameter."""
        cfg = self.cfg
        n = X.shape[0]
        fw = self._forward_batch(X, training=training)
        y_hat = fw["y_hat"]
        loss = bce_loss(y_hat[:, 1], y)
        if cfg.use_consistency:
            loss += cfg.lambda_aux * squared_error(fw["pred"], y_cons)

        grads: dict[str, np.ndarray] = {}
        onehot = np.zeros_like(y_hat)
        onehot[np.arange(n), y.astype(int)] = 1.0
        dlogits = (y_hat - onehot) / n
        grads["cls2_W"] = dlogits.T @ fw["z1d"]
        grads["cls2_b"] = dlogits.sum(axis=0)
        dz1d = dlogits @ self.params["cls2_W"]
        if fw["mask"] is not None:
            dz1d = dz1d * fw["mask"] / (1.0 - self.dropout.p)
        dW1, db1, dH = affine_backward(dz1d, self.params["cls1_W"], fw["c3"])
        grads["cls1_W"] = dW1
        grads["cls1_b"] = db1

        if cfg.use_consistency:
            dh_c = dH[:, cfg.d:]
            dpred = (2.0 * cfg.lambda_aux / n) * (fw["pred"] - y_cons)  # (n,)
            grads["cons_W"] = dpred[None, :] @ fw["h_c"]
            grads["cons_b"] = np.array([dpred.sum()])
            dh_c = dh_c + dpred[:, None] @ self.params["cons_W"]
            dW2, db2, da1 = affine_backward(dh_c, self.params["mlp2_W"], fw["c2"])
            grads["mlp2_W"] = dW2
            grads["mlp2_b"] = db2
            dW1m, db1m, _ = affine_backward(da1, self.params["mlp1_W"], fw["c1"])
            grads["mlp1_W"] = dW1m
            grads["mlp1_b"] = db1m
        return loss, grads

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        """Argmax class per row (fake = 1)."""
        fw = self._forward_batch(X, training=False)
        return np.argmax(fw["y_hat"], axis=1)

    def new_adam_state(self) -> AdamState:
        return AdamState.init(self.params)


def save_model(model: MultiMdModel, path) -> None:
    """Versioned JSON checkpoint; round-trips bit-exactly."""
    cfg = model.cfg
    payload = {
        "format_version": 1,
        "config": {
            "d_T": cfg.d_T, "d_I": cfg.d_I, "d_A": cfg.d_A,
            "d_1": cfg.d_1, "d_c": cfg.d_c, "mlp_hidden": cfg.mlp_hidden,
            "activation": cfg.activation, "dropout": cfg.dropout,
            "lambda_aux": cfg.lambda_aux, "seed": cfg.seed,
            "ablate": sorted(cfg.ablate),
        },
        "params": {k: v.tolist() for k, v in model.params.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_model(path) -> MultiMdModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format_version") != 1:
        raise ConfigError(f"unsupported checkpoint version {payload.get('format_version')!r}")
    raw_cfg = dict(payload["config"])
    raw_cfg["ablate"] = frozenset(raw_cfg.get("ablate", []))
    cfg = ModelConfig(**raw_cfg)
    model = MultiMdModel(cfg)
    for k, v in payload["params"].items():
        arr = np.asarray(v, dtype=float)
        if arr.shape != model.params[k].shape:
            raise ShapeError(f"checkpoint param {k!r} shape {arr.shape} != {model.params[k].shape}")
        model.params[k] = arr
    return model
