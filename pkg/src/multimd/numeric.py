"""Dense numeric kernel: affine layers, activations, losses, dropout, Adam.

Everything is double precision and deterministic given the seeds. The
backward passes here cover exactly the fixed computation graph used by the
model (affine + activation chains, softmax cross-entropy, squared error),
not a general autodiff.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LabelError, NumericError, ShapeError, StateError

BCE_CLAMP = 1e-7  # probability clamp before logs

ACTIVATIONS = ("relu", "sigmoid", "tanh")


def _check_activation(act: str) -> None:
    if act not in ACTIVATIONS:
        raise ShapeError(f"unknown activation {act!r}; expected one of {ACTIVATIONS}")


def apply_activation(act: str, z: np.ndarray) -> np.ndarray:
    _check_activation(act)
    if act == "relu":
        return np.maximum(z, 0.0)
    if act == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    return np.tanh(z)


def activation_grad(act: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """d(act)/dz evaluated at pre-activation z (a = act(z), reused where cheap)."""
    _check_activation(act)
    if act == "relu":
        return (z > 0.0).astype(float)
    if act == "sigmoid":
        return a * (1.0 - a)
    return 1.0 - a * a


@dataclass
class AffineCache:
    """Intermediates cached by affine_forward for the backward pass."""

    x: np.ndarray
    z: np.ndarray
    a: np.ndarray
    act: str


def affine_forward(
    weights: np.ndarray, bias: np.ndarray, x: np.ndarray, act: str
) -> tuple[np.ndarray, AffineCache]:
    """act(W @ x + b). x may be a vector (d,) or a batch (n, d)."""
    if weights.shape[1] != x.shape[-1]:
        raise ShapeError(
            f"affine: weights expect input dim {weights.shape[1]}, got {x.shape[-1]}"
        )
    if bias.shape[0] != weights.shape[0]:
        raise ShapeError(
            f"affine: bias dim {bias.shape[0]} != output dim {weights.shape[0]}"
        )
    z = x @ weights.T + bias
    a = apply_activation(act, z)
    return a, AffineCache(x=x, z=z, a=a, act=act)


def affine_backward(
    grad_out: np.ndarray, weights: np.ndarray, cache: AffineCache | None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (dW, db, dx) for grad_out = dL/d(act output)."""
    if cache is None:
        raise StateError("affine_backward called before a forward pass")
    dz = grad_out * activation_grad(cache.act, cache.z, cache.a)
    if dz.ndim == 1:
        dw = np.outer(dz, cache.x)
        db = dz.copy()
    else:
        dw = dz.T @ cache.x
        db = dz.sum(axis=0)
    dx = dz @ weights
    return dw, db, dx


def softmax(z: np.ndarray) -> np.ndarray:
    """Stable softmax along the last axis."""
    if not np.all(np.isfinite(z)):
        raise NumericError("softmax: non-finite logits")
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _check_label(y) -> None:
    arr = np.asarray(y)
    if not np.all((arr == 0) | (arr == 1)):
        raise LabelError(f"labels must be 0 or 1, got {y!r}")


def bce_loss(y_hat, y, clamp: float = BCE_CLAMP) -> float:
    """Binary cross-entropy, mean over a batch; y_hat is the positive-class prob."""
    _check_label(y)
    p = np.clip(np.asarray(y_hat, dtype=float), clamp, 1.0 - clamp)
    t = np.asarray(y, dtype=float)
    return float(np.mean(-(t * np.log(p) + (1.0 - t) * np.log(1.0 - p))))


def squared_error(pred, target) -> float:
    """(pred - target)^2, mean over a batch."""
    p = np.asarray(pred, dtype=float)
    t = np.asarray(target, dtype=float)
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(t))):
        raise NumericError("squared_error: non-finite input")
    return float(np.mean((p - t) ** 2))


def glorot_uniform(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    bound = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-bound, bound, size=(rows, cols))


@dataclass
class DropoutSpec:
    """Inverted dropout: zero with prob p at train time, scale survivors."""

    p: float = 0.2
    seed: int = 0
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.p < 1.0:
            raise NumericError(f"dropout rate must be in [0, 1), got {self.p}")
        self.rng = np.random.default_rng(self.seed)


def dropout_apply(
    x: np.ndarray, spec: DropoutSpec, training: bool
) -> tuple[np.ndarray, np.ndarray | None]:
    """Returns (output, keep-mask). Eval mode and p=0 are the exact identity."""
    if not training or spec.p == 0.0:
        return x, None
    keep = spec.rng.random(size=x.shape) >= spec.p
    scale = 1.0 / (1.0 - spec.p)
    return x * keep * scale, keep


@dataclass
class AdamState:
    """Bias-corrected Adam moments, one slot per named parameter."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init(cls, params: dict[str, np.ndarray], beta1=0.9, beta2=0.999, eps=1e-8):
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
            beta1=beta1,
            beta2=beta2,
            eps=eps,
        )


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
) -> None:
    """In-place Adam update of params; increments state.t."""
    state.t += 1
    t = state.t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeError(
                f"adam: grad shape {g.shape} != param shape {p.shape} for {name!r}"
            )
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        m_hat = m / (1.0 - state.beta1**t)
        v_hat = v / (1.0 - state.beta2**t)
        p -= lr * m_hat / (np.sqrt(v_hat) + state.eps)
