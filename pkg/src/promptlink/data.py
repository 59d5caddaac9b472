"""Dataset schema, manifest/blob ingestion, synthetic data, and batching.

The engine never touches images or tokenizers; it consumes precomputed
encoder features through a manifest file:

    manifest.json   {format_version, config{d_c,d_t}, blob_file,
                     mentions[...], entities[...]}
    features.bin    raw little-endian float32, row-major, 4-byte aligned

Each record names six tensors inside the blob: "img_cls_l3",
"img_cls_l10", "img_cls_l11", "img_cls_l12" (one per encoder layer,
shallow first), "img_local" ((n+1) x d_c final-layer hidden states, row 0
the CLS position), and "txt_hidden" ((l_t+1) x d_t, row 0 the CLS
position). Row counts may vary per record; masks are materialised at
batch-assembly time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BlobOffsetError,
    FeatureDimMismatch,
    SchemaViolation,
    UnresolvedCandidate,
    ValidationError,
)

FORMAT_VERSION = 1
CLS_TENSOR_NAMES = ("img_cls_l3", "img_cls_l10", "img_cls_l11", "img_cls_l12")
TENSOR_NAMES = CLS_TENSOR_NAMES + ("img_local", "txt_hidden")


@dataclass
class FeatureBundle:
    """Raw encoder outputs for one image-text item.

    ``img_cls`` stacks the four per-layer CLS vectors shallow-first into a
    (4, d_c) array. ``img_local`` is (n+1, d_c) with row 0 the CLS
    position; ``txt_hidden`` is (l_t+1, d_t) likewise. Masks flag valid
    rows and always contain at least one set bit.
    """

    img_cls: np.ndarray
    img_local: np.ndarray
    txt_hidden: np.ndarray
    img_mask: np.ndarray = None
    txt_mask: np.ndarray = None

    def __post_init__(self):
        if self.img_mask is None:
            self.img_mask = np.ones(self.img_local.shape[0], dtype=bool)
        if self.txt_mask is None:
            self.txt_mask = np.ones(self.txt_hidden.shape[0], dtype=bool)
        if self.img_cls.shape[0] != 4 or self.img_cls.ndim != 2:
            raise ValidationError(f"img_cls must be (4, d_c), got {self.img_cls.shape}")
        if not (self.img_mask.any() and self.txt_mask.any()):
            raise ValidationError("feature masks need at least one valid row")

    @property
    def d_c(self) -> int:
        return self.img_cls.shape[1]

    @property
    def d_t(self) -> int:
        return self.txt_hidden.shape[1]


@dataclass
class MentionRecord:
    id: str
    sentence: str
    aux_text: str
    gold_entity_id: str
    candidate_ids: list[str] | None
    features: FeatureBundle


@dataclass
class EntityRecord:
    id: str
    name: str
    attributes: str
    description: str
    features: FeatureBundle


class KnowledgeBase:
    """Immutable id -> EntityRecord index preserving insertion order."""

    def __init__(self, entities: list[EntityRecord]):
        self._by_id: dict[str, EntityRecord] = {}
        for e in entities:
            if e.id in self._by_id:
                raise SchemaViolation(f"duplicate entity id {e.id!r}")
            self._by_id[e.id] = e

    def __len__(self):
        return len(self._by_id)

    def __contains__(self, eid: str) -> bool:
        return eid in self._by_id

    def get(self, eid: str) -> EntityRecord:
        return self._by_id[eid]

    def ids(self) -> list[str]:
        return list(self._by_id)

    def records(self) -> list[EntityRecord]:
        return list(self._by_id.values())


@dataclass
class Dataset:
    split: str
    mentions: list[MentionRecord]
    kb: KnowledgeBase
    d_c: int
    d_t: int
    warnings: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# manifest / blob IO
# ---------------------------------------------------------------------------


def _require(cond: bool, msg: str):
    if not cond:
        raise SchemaViolation(msg)


def _read_tensor(blob: bytes, entry: dict, rec_id: str, name: str) -> np.ndarray:
    _require(isinstance(entry, dict) and "shape" in entry and "offset" in entry,
             f"record {rec_id!r}: tensor {name!r} needs shape and offset")
    shape = entry["shape"]
    offset = entry["offset"]
    _require(isinstance(shape, list) and all(isinstance(s, int) and s > 0 for s in shape),
             f"record {rec_id!r}: tensor {name!r} has invalid shape {shape!r}")
    _require(isinstance(offset, int) and offset >= 0,
             f"record {rec_id!r}: tensor {name!r} has invalid offset {offset!r}")
    if offset % 4 != 0:
        raise BlobOffsetError(f"record {rec_id!r}: tensor {name!r} offset {offset} not 4-aligned")
    count = int(np.prod(shape))
    end = offset + 4 * count
    if end > len(blob):
        raise BlobOffsetError(
            f"record {rec_id!r}: tensor {name!r} spans [{offset}, {end}) beyond blob "
            f"of {len(blob)} bytes"
        )
    arr = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
    return arr.reshape(shape).astype(np.float32, copy=True)


def _read_bundle(blob: bytes, tensors: dict, rec_id: str, d_c: int, d_t: int) -> FeatureBundle:
    _require(isinstance(tensors, dict), f"record {rec_id!r}: tensors must be an object")
    missing = [n for n in TENSOR_NAMES if n not in tensors]
    _require(not missing, f"record {rec_id!r}: missing tensors {missing}")
    arrays = {n: _read_tensor(blob, tensors[n], rec_id, n) for n in TENSOR_NAMES}
    for n in CLS_TENSOR_NAMES:
        if arrays[n].shape != (d_c,):
            raise FeatureDimMismatch(
                f"record {rec_id!r}: {n} shape {arrays[n].shape} != ({d_c},)"
            )
    if arrays["img_local"].ndim != 2 or arrays["img_local"].shape[1] != d_c:
        raise FeatureDimMismatch(
            f"record {rec_id!r}: img_local shape {arrays['img_local'].shape} "
            f"incompatible with d_c={d_c}"
        )
    if arrays["txt_hidden"].ndim != 2 or arrays["txt_hidden"].shape[1] != d_t:
        raise FeatureDimMismatch(
            f"record {rec_id!r}: txt_hidden shape {arrays['txt_hidden'].shape} "
            f"incompatible with d_t={d_t}"
        )
    return FeatureBundle(
        img_cls=np.stack([arrays[n] for n in CLS_TENSOR_NAMES]),
        img_local=arrays["img_local"],
        txt_hidden=arrays["txt_hidden"],
    )


def load_manifest(manifest_path) -> Dataset:
    """Load and fully validate a dataset manifest and its feature blob.

    Raises a distinct error naming the offending record for schema
    violations, dangling blob offsets, dim mismatches, and unresolvable
    candidate ids. A mention whose gold entity is absent from the KB or
    from its own candidate list is kept but produces a warning; the
    evaluator scores such mentions as misses.
    """
    manifest_path = Path(manifest_path)
    try:
        doc = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise SchemaViolation(f"cannot parse manifest {manifest_path}: {e}") from e
    _require(isinstance(doc, dict), "manifest must be a JSON object")
    for key in ("format_version", "config", "blob_file", "mentions", "entities"):
        _require(key in doc, f"manifest missing key {key!r}")
    if doc["format_version"] != FORMAT_VERSION:
        raise SchemaViolation(
            f"unsupported manifest format_version {doc['format_version']!r} "
            f"(supported: {FORMAT_VERSION})"
        )
    cfg = doc["config"]
    _require(isinstance(cfg, dict) and "d_c" in cfg and "d_t" in cfg,
             "manifest config must define d_c and d_t")
    d_c, d_t = int(cfg["d_c"]), int(cfg["d_t"])
    _require(d_c > 0 and d_t > 0, "manifest dims must be positive")

    blob_path = manifest_path.parent / doc["blob_file"]
    try:
        blob = blob_path.read_bytes()
    except OSError as e:
        raise SchemaViolation(f"cannot read blob {blob_path}: {e}") from e

    warnings: list[str] = []
    entities = []
    for ent in doc["entities"]:
        _require(isinstance(ent, dict) and "id" in ent, "entity record missing id")
        eid = str(ent["id"])
        entities.append(
            EntityRecord(
                id=eid,
                name=str(ent.get("name", "")),
                attributes=str(ent.get("attributes", "")),
                description=str(ent.get("description", "")),
                features=_read_bundle(blob, ent.get("tensors"), eid, d_c, d_t),
            )
        )
    kb = KnowledgeBase(entities)

    mentions = []
    seen_m: set[str] = set()
    for men in doc["mentions"]:
        _require(isinstance(men, dict) and "id" in men, "mention record missing id")
        mid = str(men["id"])
        _require(mid not in seen_m, f"duplicate mention id {mid!r}")
        seen_m.add(mid)
        _require("gold" in men, f"mention {mid!r} missing gold entity id")
        gold = str(men["gold"])
        cands = men.get("candidates")
        if cands is not None:
            _require(isinstance(cands, list) and cands,
                     f"mention {mid!r}: candidates must be a non-empty list or null")
            cands = [str(c) for c in cands]
            if len(set(cands)) != len(cands):
                raise SchemaViolation(f"mention {mid!r}: duplicate candidate ids")
            for c in cands:
                if c not in kb:
                    raise UnresolvedCandidate(
                        f"mention {mid!r}: candidate {c!r} not in knowledge base"
                    )
        if gold not in kb:
            warnings.append(f"mention {mid!r}: gold {gold!r} not in knowledge base")
        elif cands is not None and gold not in cands:
            warnings.append(f"mention {mid!r}: gold {gold!r} not in candidate list")
        mentions.append(
            MentionRecord(
                id=mid,
                sentence=str(men.get("sentence", "")),
                aux_text=str(men.get("aux_text", "")),
                gold_entity_id=gold,
                candidate_ids=cands,
                features=_read_bundle(blob, men.get("tensors"), mid, d_c, d_t),
            )
        )
    return Dataset(
        split=str(doc.get("split", "data")),
        mentions=mentions,
        kb=kb,
        d_c=d_c,
        d_t=d_t,
        warnings=warnings,
    )


class _BlobWriter:
    def __init__(self):
        self.chunks: list[bytes] = []
        self.offset = 0

    def append(self, arr: np.ndarray) -> dict:
        raw = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        entry = {"shape": list(arr.shape), "offset": self.offset}
        self.chunks.append(raw)
        self.offset += len(raw)
        return entry

    def bundle_entries(self, fb: FeatureBundle) -> dict:
        entries = {}
        for i, name in enumerate(CLS_TENSOR_NAMES):
            entries[name] = self.append(fb.img_cls[i])
        entries["img_local"] = self.append(fb.img_local)
        entries["txt_hidden"] = self.append(fb.txt_hidden)
        return entries


def save_manifest(dataset: Dataset, out_dir, manifest_name="manifest.json",
                  blob_name="features.bin") -> Path:
    """Serialize a dataset to the manifest/blob pair; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    writer = _BlobWriter()
    entities = []
    for e in dataset.kb.records():
        entities.append({
            "id": e.id,
            "name": e.name,
            "attributes": e.attributes,
            "description": e.description,
            "tensors": writer.bundle_entries(e.features),
        })
    mentions = []
    for m in dataset.mentions:
        mentions.append({
            "id": m.id,
            "sentence": m.sentence,
            "aux_text": m.aux_text,
            "gold": m.gold_entity_id,
            "candidates": m.candidate_ids,
            "tensors": writer.bundle_entries(m.features),
        })
    doc = {
        "format_version": FORMAT_VERSION,
        "split": dataset.split,
        "config": {"d_c": dataset.d_c, "d_t": dataset.d_t},
        "blob_file": blob_name,
        "mentions": mentions,
        "entities": entities,
    }
    (out_dir / blob_name).write_bytes(b"".join(writer.chunks))
    manifest_path = out_dir / manifest_name
    manifest_path.write_text(json.dumps(doc, indent=1, sort_keys=True), encoding="utf-8")
    return manifest_path


# ---------------------------------------------------------------------------
# synthetic data
# ---------------------------------------------------------------------------


def synth_dataset(
    seed: int,
    n_mentions: int,
    n_entities: int,
    d_c: int = 16,
    d_t: int = 16,
    noise_scale: float = 0.0,
    img_rows: tuple[int, int] = (3, 6),
    txt_rows: tuple[int, int] = (3, 8),
    split: str = "synth",
) -> Dataset:
    """Planted-signal generator for desk-scale experiments.

    Mention i and entity i share a latent vector per modality; every
    feature row of both is that latent plus independent gaussian noise of
    ``noise_scale``. Entities beyond ``n_mentions`` draw independent
    latents, so the gold match is recoverable by feature similarity.
    Fully deterministic for a fixed seed.
    """
    if n_entities < n_mentions:
        raise ValidationError("synth_dataset needs n_entities >= n_mentions")
    rng = np.random.default_rng(seed)

    def bundle(z_img: np.ndarray, z_txt: np.ndarray) -> FeatureBundle:
        n_loc = int(rng.integers(img_rows[0], img_rows[1] + 1))
        n_txt = int(rng.integers(txt_rows[0], txt_rows[1] + 1))
        cls = z_img + noise_scale * rng.standard_normal((4, d_c))
        local = z_img + noise_scale * rng.standard_normal((n_loc, d_c))
        txt = z_txt + noise_scale * rng.standard_normal((n_txt, d_t))
        return FeatureBundle(
            img_cls=cls.astype(np.float32),
            img_local=local.astype(np.float32),
            txt_hidden=txt.astype(np.float32),
        )

    mentions, entities = [], []
    for i in range(n_entities):
        z_img = rng.standard_normal(d_c)
        z_txt = rng.standard_normal(d_t)
        eid = f"e{i:05d}"
        entities.append(
            EntityRecord(
                id=eid,
                name=f"entity {i}",
                attributes=f"attr {i}",
                description="",
                features=bundle(z_img, z_txt),
            )
        )
        if i < n_mentions:
            mentions.append(
                MentionRecord(
                    id=f"m{i:05d}",
                    sentence=f"mention sentence {i}",
                    aux_text="",
                    gold_entity_id=eid,
                    candidate_ids=None,
                    features=bundle(z_img, z_txt),
                )
            )
    return Dataset(split=split, mentions=mentions, kb=KnowledgeBase(entities),
                   d_c=d_c, d_t=d_t)


def split_dataset(dataset: Dataset, holdout_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministically partition mentions into (train, held-out) views
    sharing the knowledge base."""
    if not 0.0 < holdout_fraction < 1.0:
        raise ValidationError("holdout_fraction must be in (0, 1)")
    order = np.random.default_rng(seed).permutation(len(dataset.mentions))
    n_hold = int(round(len(order) * holdout_fraction))
    hold_idx = set(order[:n_hold].tolist())
    train = [m for i, m in enumerate(dataset.mentions) if i not in hold_idx]
    hold = [m for i, m in enumerate(dataset.mentions) if i in hold_idx]
    mk = lambda name, ms: Dataset(name, ms, dataset.kb, dataset.d_c, dataset.d_t)
    return mk(dataset.split + "-train", train), mk(dataset.split + "-dev", hold)


# ---------------------------------------------------------------------------
# batching
# ---------------------------------------------------------------------------


@dataclass
class PackedFeatures:
    """Stacked, padded feature arrays for one side of a batch."""

    ids: list[str]
    img_cls: np.ndarray    # (B, 4, d_c)
    img_local: np.ndarray  # (B, R, d_c) zero-padded
    img_mask: np.ndarray   # (B, R) bool
    txt: np.ndarray        # (B, T, d_t) zero-padded
    txt_mask: np.ndarray   # (B, T) bool


def pack_features(ids: list[str], bundles: list[FeatureBundle],
                  dtype=np.float32) -> PackedFeatures:
    """Pad variable-length bundles to a rectangular batch plus masks."""
    r = max(b.img_local.shape[0] for b in bundles)
    t = max(b.txt_hidden.shape[0] for b in bundles)
    n = len(bundles)
    d_c, d_t = bundles[0].d_c, bundles[0].d_t
    img_cls = np.zeros((n, 4, d_c), dtype=dtype)
    img_local = np.zeros((n, r, d_c), dtype=dtype)
    img_mask = np.zeros((n, r), dtype=bool)
    txt = np.zeros((n, t, d_t), dtype=dtype)
    txt_mask = np.zeros((n, t), dtype=bool)
    for i, b in enumerate(bundles):
        img_cls[i] = b.img_cls
        ri, ti = b.img_local.shape[0], b.txt_hidden.shape[0]
        img_local[i, :ri] = b.img_local
        img_mask[i, :ri] = b.img_mask
        txt[i, :ti] = b.txt_hidden
        txt_mask[i, :ti] = b.txt_mask
    return PackedFeatures(ids, img_cls, img_local, img_mask, txt, txt_mask)


@dataclass
class Batch:
    mentions: PackedFeatures
    entities: PackedFeatures   # gold entity of each mention, same order
    positive_index: np.ndarray  # (B,) position of each mention's gold column


def batch_iter(dataset: Dataset, batch_size: int, epoch_seed: int, training: bool = True):
    """Yield batches pairing mentions with their gold entities.

    Order is a deterministic function of ``epoch_seed``. During training
    the final ragged batch is dropped; during evaluation it is kept, so
    one evaluation epoch visits every usable mention exactly once.
    Mentions whose gold id is absent from the KB cannot form a pair and
    are skipped.
    """
    usable = [m for m in dataset.mentions if m.gold_entity_id in dataset.kb]
    if batch_size > len(usable):
        raise ValidationError(
            f"batch_size {batch_size} exceeds usable mentions {len(usable)}"
        )
    order = np.random.default_rng(epoch_seed).permutation(len(usable))
    stop = (len(usable) // batch_size) * batch_size if training else len(usable)
    for start in range(0, stop, batch_size):
        idx = order[start:start + batch_size]
        ms = [usable[i] for i in idx]
        es = [dataset.kb.get(m.gold_entity_id) for m in ms]
        yield Batch(
            mentions=pack_features([m.id for m in ms], [m.features for m in ms]),
            entities=pack_features([e.id for e in es], [e.features for e in es]),
            positive_index=np.arange(len(ms)),
        )
