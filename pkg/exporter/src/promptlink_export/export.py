"""Export pipeline: raw prompted records to the engine's dataset format.

For each mention the prompt box is stroked onto a copy of the image
before encoding, so the visual prompt influences the features; entity
images are encoded as-is. Mention text is laid out as auxiliary text
then sentence; entity text as name then attributes. Per-record failures
are logged and skipped, and the summary reports them."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from PIL import Image, UnidentifiedImageError

from .manifest_io import BlobWriter, cls_tensor_names, write_manifest
from .prompt_draw import draw_visual_prompt
from .records import EntitySample, MentionSample, RecordError
from .vlm import detective_infer

logger = logging.getLogger(__name__)


@dataclass
class ExportSummary:
    manifest_path: Path | None
    n_mentions: int
    n_entities: int
    skipped: list[tuple[str, str]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def _load_image(images_dir: Path, rel: str) -> Image.Image:
    path = images_dir / rel
    try:
        with Image.open(path) as img:
            return img.convert("RGB")
    except (OSError, UnidentifiedImageError) as e:
        raise RecordError(f"cannot load image {path}: {e}") from e


def export_features(
    mentions: list[MentionSample],
    entities: list[EntitySample],
    images_dir,
    out_dir,
    vision_encoder,
    text_encoder,
    vlm=None,
    stroke_width: int = 3,
    split: str = "export",
) -> ExportSummary:
    """Encode every record and write the manifest/blob pair.

    Returns a summary whose ``skipped`` list names records that failed
    (missing/undecodable image, out-of-bounds box); the manifest contains
    only the surviving records.
    """
    images_dir = Path(images_dir)
    blob = BlobWriter()
    cls_names = cls_tensor_names()
    summary = ExportSummary(manifest_path=None, n_mentions=0, n_entities=0)

    entity_docs = []
    for ent in entities:
        try:
            image = _load_image(images_dir, ent.image)
            layer_cls, local = vision_encoder.encode(image)
            txt = text_encoder.encode(ent.name, ent.attributes)
        except RecordError as e:
            logger.warning("skipping entity %s: %s", ent.id, e)
            summary.skipped.append((ent.id, str(e)))
            continue
        entity_docs.append({
            "id": ent.id,
            "name": ent.name,
            "attributes": ent.attributes,
            "description": ent.description,
            "tensors": blob.feature_entries(layer_cls, local, txt, cls_names),
        })

    mention_docs = []
    for men in mentions:
        try:
            image = _load_image(images_dir, men.image)
            prompted = draw_visual_prompt(image, men.box, stroke_width)
            layer_cls, local = vision_encoder.encode(prompted)
            aux, warning = detective_infer(prompted, men.sentence, vlm)
            if warning:
                summary.warnings.append(f"mention {men.id}: {warning}")
            txt = text_encoder.encode(aux, men.sentence)
        except RecordError as e:
            logger.warning("skipping mention %s: %s", men.id, e)
            summary.skipped.append((men.id, str(e)))
            continue
        mention_docs.append({
            "id": men.id,
            "sentence": men.sentence,
            "aux_text": aux,
            "gold": men.gold,
            "candidates": men.candidates,
            "tensors": blob.feature_entries(layer_cls, local, txt, cls_names),
        })

    summary.manifest_path = write_manifest(
        out_dir, mention_docs, entity_docs,
        d_c=vision_encoder.d_c, d_t=text_encoder.d_t, blob=blob, split=split,
    )
    summary.n_mentions = len(mention_docs)
    summary.n_entities = len(entity_docs)
    return summary
