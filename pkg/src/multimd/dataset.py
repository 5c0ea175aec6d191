"""Feature-file schema, validation, pooling, balancing, folds, synthetic data.

Canonical on-disk format: UTF-8 JSON lines. Line 1 is the manifest object,
every following line is one record. Records may store raw per-second frame
and audio-chunk vectors or pre-pooled vectors; pooling happens at load so
downstream code always sees one vector per modality.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DatasetError, ShapeError

MODALITIES = ("text", "image", "audio")

_RECORD_FIELDS = {
    "id",
    "label",
    "text_emb",
    "image_frames",
    "image_emb",
    "audio_chunks",
    "audio_emb",
    "entities",
}


@dataclass(frozen=True)
class FeatureManifest:
    d_T: int = 768
    d_I: int = 1024
    d_A: int = 128
    d_E: int = 300
    schema_version: int = 1

    def __post_init__(self):
        for name in ("d_T", "d_I", "d_A", "d_E"):
            if getattr(self, name) < 1:
                raise ConfigError(f"manifest dim {name} must be >= 1")


@dataclass
class SmcRecord:
    """One content item with pooled modality embeddings and entity sets."""

    id: str
    label: int  # fake=1, real=0
    text_emb: np.ndarray
    image_emb: np.ndarray
    audio_emb: np.ndarray
    entities: dict[str, list[np.ndarray]] = field(
        default_factory=lambda: {m: [] for m in MODALITIES}
    )


@dataclass
class Dataset:
    manifest: FeatureManifest
    records: list[SmcRecord]

    def __len__(self) -> int:
        return len(self.records)

    def class_counts(self) -> tuple[int, int]:
        fake = sum(1 for r in self.records if r.label == 1)
        return fake, len(self.records) - fake


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: dict[str, int]
    seed: int

    def fold_ids(self, fold: int) -> list[str]:
        return [rid for rid, f in self.assignments.items() if f == fold]


def mean_pool(vectors: list[np.ndarray]) -> np.ndarray:
    """Elementwise arithmetic mean of equal-dimension vectors."""
    if len(vectors) == 0:
        raise DatasetError("mean_pool: empty sequence")
    dim = vectors[0].shape[0]
    for v in vectors[1:]:
        if v.shape[0] != dim:
            raise ShapeError(f"mean_pool: mixed dims {dim} and {v.shape[0]}")
    return np.mean(np.stack(vectors), axis=0)


def _as_vector(value, dim: int, rec_id: str, fname: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != dim:
        raise DatasetError(
            f"record {rec_id!r}: field {fname!r} has dim "
            f"{arr.shape[0] if arr.ndim == 1 else arr.shape}, expected {dim}"
        )
    if not np.all(np.isfinite(arr)):
        raise DatasetError(f"record {rec_id!r}: field {fname!r} has non-finite values")
    return arr


def _pooled_modality(obj: dict, rec_id: str, raw_key: str, pooled_key: str, dim: int):
    """Resolve a (frames|chunks) list or a pre-pooled vector to one vector.

    Returns (vector, raw_count); raw_count is None for pre-pooled storage.
    """
    has_raw = raw_key in obj
    has_pooled = pooled_key in obj
    if has_raw == has_pooled:
        raise DatasetError(
            f"record {rec_id!r}: exactly one of {raw_key!r} or {pooled_key!r} required"
        )
    if has_pooled:
        return _as_vector(obj[pooled_key], dim, rec_id, pooled_key), None
    raw = obj[raw_key]
    if not isinstance(raw, list) or len(raw) == 0:
        raise DatasetError(f"record {rec_id!r}: field {raw_key!r} empty")
    vecs = [_as_vector(v, dim, rec_id, raw_key) for v in raw]
    return mean_pool(vecs), len(vecs)


def _parse_record(obj: dict, manifest: FeatureManifest, line_no: int) -> SmcRecord:
    if not isinstance(obj, dict):
        raise DatasetError(f"line {line_no}: record must be a JSON object")
    unknown = set(obj) - _RECORD_FIELDS
    if unknown:
        raise DatasetError(f"line {line_no}: unknown fields {sorted(unknown)}")
    for required in ("id", "label", "text_emb"):
        if required not in obj:
            raise DatasetError(f"line {line_no}: missing field {required!r}")
    rec_id = str(obj["id"])
    label = obj["label"]
    if label not in (0, 1):
        raise DatasetError(f"record {rec_id!r}: label must be 0 or 1, got {label!r}")

    text = obj["text_emb"]
    if not isinstance(text, list) or len(text) == 0:
        raise DatasetError(f"record {rec_id!r}: field 'text_emb' empty")
    text_emb = _as_vector(text, manifest.d_T, rec_id, "text_emb")
    image_emb, n_frames = _pooled_modality(
        obj, rec_id, "image_frames", "image_emb", manifest.d_I
    )
    audio_emb, n_chunks = _pooled_modality(
        obj, rec_id, "audio_chunks", "audio_emb", manifest.d_A
    )
    if n_frames is not None and n_chunks is not None and abs(n_frames - n_chunks) > 1:
        raise DatasetError(
            f"record {rec_id!r}: frame count {n_frames} and chunk count "
            f"{n_chunks} differ by more than 1"
        )

    entities = {m: [] for m in MODALITIES}
    raw_ents = obj.get("entities", {})
    if not isinstance(raw_ents, dict):
        raise DatasetError(f"record {rec_id!r}: 'entities' must be an object")
    unknown = set(raw_ents) - set(MODALITIES)
    if unknown:
        raise DatasetError(f"record {rec_id!r}: unknown entity modalities {sorted(unknown)}")
    for mod in MODALITIES:
        for i, v in enumerate(raw_ents.get(mod, [])):
            entities[mod].append(
                _as_vector(v, manifest.d_E, rec_id, f"entities.{mod}[{i}]")
            )
    return SmcRecord(
        id=rec_id,
        label=int(label),
        text_emb=text_emb,
        image_emb=image_emb,
        audio_emb=audio_emb,
        entities=entities,
    )


def load_dataset(path) -> Dataset:
    """Load and fully validate a feature file."""
    records: list[SmcRecord] = []
    manifest = None
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"line {line_no}: invalid JSON: {exc}") from exc
            if manifest is None:
                if not isinstance(obj, dict) or "manifest" not in obj:
                    raise DatasetError("line 1: manifest header missing")
                try:
                    manifest = FeatureManifest(**obj["manifest"])
                except TypeError as exc:
                    raise DatasetError(f"line 1: bad manifest: {exc}") from exc
                continue
            rec = _parse_record(obj, manifest, line_no)
            if rec.id in seen_ids:
                raise DatasetError(f"line {line_no}: duplicate record id {rec.id!r}")
            seen_ids.add(rec.id)
            records.append(rec)
    if manifest is None:
        raise DatasetError("empty file: manifest header missing")
    return Dataset(manifest=manifest, records=records)


def save_dataset(dataset: Dataset, path) -> None:
    """Write the canonical feature file (pooled storage)."""
    m = dataset.manifest
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "manifest": {
                "d_T": m.d_T,
                "d_I": m.d_I,
                "d_A": m.d_A,
                "d_E": m.d_E,
                "schema_version": m.schema_version,
            }
        }
        fh.write(json.dumps(header) + "\n")
        for r in dataset.records:
            obj = {
                "id": r.id,
                "label": r.label,
                "text_emb": r.text_emb.tolist(),
                "image_emb": r.image_emb.tolist(),
                "audio_emb": r.audio_emb.tolist(),
                "entities": {m_: [v.tolist() for v in r.entities[m_]] for m_ in MODALITIES},
            }
            fh.write(json.dumps(obj) + "\n")


def balance_undersample(d: Dataset, seed: int) -> Dataset:
    """Equalize class counts by uniformly subsampling the majority class."""
    fake = [r for r in d.records if r.label == 1]
    real = [r for r in d.records if r.label == 0]
    if not fake or not real:
        raise DatasetError("balance_undersample: both classes must be nonempty")
    rng = np.random.default_rng(seed)
    target = min(len(fake), len(real))
    if len(fake) > target:
        fake = [fake[i] for i in sorted(rng.choice(len(fake), size=target, replace=False))]
    if len(real) > target:
        real = [real[i] for i in sorted(rng.choice(len(real), size=target, replace=False))]
    kept = {r.id for r in fake} | {r.id for r in real}
    records = [r for r in d.records if r.id in kept]
    assert len(records) == 2 * target
    return Dataset(manifest=d.manifest, records=records)


def make_folds(d: Dataset, k: int = 10, seed: int = 0) -> FoldPlan:
    """Seeded shuffle then round-robin fold assignment; sizes differ by <= 1."""
    if k < 2:
        raise DatasetError(f"make_folds: k must be >= 2, got {k}")
    if len(d.records) < k:
        raise DatasetError(f"make_folds: {len(d.records)} records < k={k}")
    ids = [r.id for r in d.records]
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(ids))
    assignments = {ids[idx]: pos % k for pos, idx in enumerate(order)}
    return FoldPlan(k=k, assignments=assignments, seed=seed)


@dataclass(frozen=True)
class SynthConfig:
    """Desk-scale synthetic data with planted modality and consistency signals.

    Each record carries a latent trustworthiness z in [0, 1]. The label is a
    threshold of z (fake below 0.5, real above, with a margin band excluded),
    every modality embedding is shifted along a planted direction in
    proportion to z - 0.5, and entity sets are mixtures of a shared anchor
    (weight z) and noise (weight 1 - z), so cross-modal entity consistency
    grows with z. The auxiliary regression target therefore tracks the same
    latent that determines the label, but on a continuous scale.
    """

    n: int = 400
    manifest: FeatureManifest = field(
        default_factory=lambda: FeatureManifest(d_T=16, d_I=16, d_A=8, d_E=8)
    )
    entity_count_min: int = 1
    entity_count_max: int = 3
    signal_text: float = 5.0
    signal_image: float = 5.0
    signal_audio: float = 5.0
    label_margin: float = 0.15
    entity_noise: float = 0.7
    noise_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or self.n % 2 != 0:
            raise ConfigError("synthetic n must be an even count >= 2")
        if self.noise_scale < 0:
            raise ConfigError("noise scale must be >= 0")
        if not 0 <= self.label_margin < 0.5:
            raise ConfigError("label margin must lie in [0, 0.5)")
        if not 0 <= self.entity_count_min <= self.entity_count_max:
            raise ConfigError("bad entity count range")


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def generate_synthetic(cfg: SynthConfig) -> Dataset:
    """Balanced labels driven by a shared latent: each record draws z
    uniformly from [0, 0.5 - margin] (fake) or [0.5 + margin, 1] (real),
    shifts every modality embedding by signal * (z - 0.5) along a planted
    unit direction, and builds entity sets whose alignment with a shared
    anchor grows with z."""
    rng = np.random.default_rng(cfg.seed)
    m = cfg.manifest
    dims = {"text": m.d_T, "image": m.d_I, "audio": m.d_A}
    dirs = {mod: _unit(rng.standard_normal(dims[mod])) for mod in MODALITIES}
    strengths = {
        "text": cfg.signal_text,
        "image": cfg.signal_image,
        "audio": cfg.signal_audio,
    }

    labels = np.array([1, 0] * (cfg.n // 2))
    records = []
    for i, label in enumerate(labels):
        if label == 1:
            z = rng.uniform(0.0, 0.5 - cfg.label_margin)
        else:
            z = rng.uniform(0.5 + cfg.label_margin, 1.0)
        embs = {}
        for mod in MODALITIES:
            noise = cfg.noise_scale * rng.standard_normal(dims[mod])
            embs[mod] = noise + strengths[mod] * (z - 0.5) * dirs[mod]
        anchor = _unit(rng.standard_normal(m.d_E))
        entities = {}
        for mod in MODALITIES:
            count = int(rng.integers(cfg.entity_count_min, cfg.entity_count_max + 1))
            entities[mod] = [
                _unit(z * anchor + (1.0 - z) * cfg.entity_noise * rng.standard_normal(m.d_E))
                for _ in range(count)
            ]
        records.append(
            SmcRecord(
                id=f"synth-{i:05d}",
                label=int(label),
                text_emb=embs["text"],
                image_emb=embs["image"],
                audio_emb=embs["audio"],
                entities=entities,
            )
        )
    return Dataset(manifest=m, records=records)
