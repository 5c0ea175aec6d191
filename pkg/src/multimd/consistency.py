"""Hierarchical cross-modal entity consistency (pseudo ground truth).

Modality-level consistency between two entity sets is the maximum cosine
similarity over all cross pairs; the SMC-level value is the mean of the
three pairwise scores and serves as the auxiliary regression target.

Undefined-pair policy: a pair where either set is empty (or every vector is
zero-norm) resolves to 0.0; `defined_pairs` counts how many of the three
pairs were actually measured so either convention can be audited.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import SmcRecord
from .errors import ShapeError

UNDEFINED_PAIR = None


@dataclass(frozen=True)
class EntitySet:
    modality: str
    vectors: tuple

    def __post_init__(self):
        dims = {v.shape[0] for v in self.vectors}
        if len(dims) > 1:
            raise ShapeError(f"entity set {self.modality!r}: mixed dims {sorted(dims)}")


@dataclass(frozen=True)
class ConsistencyScores:
    text_image: float
    text_audio: float
    image_audio: float
    smc_level: float
    defined_pairs: int


class DegenerateVector(ValueError):
    """Zero-norm vector; the caller skips the pair."""


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """dot(a, b) / (|a| |b|), clamped to [-1, 1] against rounding."""
    if a.shape != b.shape:
        raise ShapeError(f"cosine: dims {a.shape[0]} vs {b.shape[0]}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateVector("cosine: zero-norm vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def pair_consistency(m1, m2):
    """Max cosine over the cross product of two entity sets.

    Zero-norm vectors are skipped. Returns None (undefined pair) when either
    side has no usable vector.
    """
    v1 = [v for v in _vectors(m1) if np.linalg.norm(v) > 0.0]
    v2 = [v for v in _vectors(m2) if np.linalg.norm(v) > 0.0]
    if not v1 or not v2:
        return UNDEFINED_PAIR
    if v1[0].shape != v2[0].shape:
        raise ShapeError(
            f"pair_consistency: entity dims {v1[0].shape[0]} vs {v2[0].shape[0]}"
        )
    n2 = [np.linalg.norm(b) for b in v2]
    best = -np.inf
    for a in v1:
        na = np.linalg.norm(a)
        for b, nb in zip(v2, n2):
            best = max(best, float(np.dot(a, b) / (na * nb)))
    return min(1.0, max(-1.0, best))


def _vectors(m):
    return m.vectors if isinstance(m, EntitySet) else m


def smc_consistency(pairwise) -> tuple[float, int]:
    """Mean of the three pairwise scores after resolving undefined pairs to 0.

    Returns (smc_level, defined_pairs)."""
    if len(pairwise) != 3:
        raise ShapeError(f"smc_consistency: expected 3 pair scores, got {len(pairwise)}")
    resolved = [0.0 if s is UNDEFINED_PAIR else float(s) for s in pairwise]
    defined = sum(1 for s in pairwise if s is not UNDEFINED_PAIR)
    return float(np.mean(resolved)), defined


def compute_pseudo_truth(r: SmcRecord) -> ConsistencyScores:
    """Pairwise (text,image), (text,audio), (image,audio) scores + SMC mean."""
    pairs = [("text", "image"), ("text", "audio"), ("image", "audio")]
    raw = [pair_consistency(r.entities[m1], r.entities[m2]) for m1, m2 in pairs]
    smc, defined = smc_consistency(raw)
    resolved = [0.0 if s is UNDEFINED_PAIR else s for s in raw]
    return ConsistencyScores(
        text_image=resolved[0],
        text_audio=resolved[1],
        image_audio=resolved[2],
        smc_level=smc,
        defined_pairs=defined,
    )
