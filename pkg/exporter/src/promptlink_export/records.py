"""Raw input records: JSON-lines of mentions and knowledge-base entities."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class RecordError(ValueError):
    """A raw sample is malformed or references missing data."""


@dataclass(frozen=True)
class PromptBox:
    """Axis-aligned half-open pixel rectangle [x1, x2) x [y1, y2)."""

    x1: int
    y1: int
    x2: int
    y2: int

    def __post_init__(self):
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise RecordError(f"degenerate box {self}")

    def check_inside(self, width: int, height: int) -> None:
        if self.x1 < 0 or self.y1 < 0 or self.x2 > width or self.y2 > height:
            raise RecordError(
                f"box ({self.x1},{self.y1},{self.x2},{self.y2}) exceeds "
                f"image bounds {width}x{height}"
            )


@dataclass
class MentionSample:
    id: str
    image: str
    sentence: str
    box: PromptBox
    gold: str
    candidates: list[str] | None


@dataclass
class EntitySample:
    id: str
    image: str
    name: str
    attributes: str
    description: str


def _box_from(value) -> PromptBox:
    if not (isinstance(value, list) and len(value) == 4):
        raise RecordError(f"box must be [x1, y1, x2, y2], got {value!r}")
    return PromptBox(*(int(v) for v in value))


def parse_line(line: str, lineno: int):
    """Parse one JSONL line into a MentionSample or EntitySample."""
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as e:
        raise RecordError(f"line {lineno}: invalid JSON: {e}") from e
    if not isinstance(doc, dict) or "kind" not in doc or "id" not in doc:
        raise RecordError(f"line {lineno}: record needs 'kind' and 'id'")
    kind = doc["kind"]
    try:
        if kind == "mention":
            cands = doc.get("candidates")
            if cands is not None:
                cands = [str(c) for c in cands]
            return MentionSample(
                id=str(doc["id"]),
                image=str(doc["image"]),
                sentence=str(doc.get("sentence", "")),
                box=_box_from(doc["box"]),
                gold=str(doc["gold"]),
                candidates=cands,
            )
        if kind == "entity":
            return EntitySample(
                id=str(doc["id"]),
                image=str(doc["image"]),
                name=str(doc.get("name", "")),
                attributes=str(doc.get("attributes", "")),
                description=str(doc.get("description", "")),
            )
    except KeyError as e:
        raise RecordError(f"line {lineno}: missing field {e}") from e
    raise RecordError(f"line {lineno}: unknown kind {kind!r}")


def read_samples(path) -> tuple[list[MentionSample], list[EntitySample]]:
    mentions, entities = [], []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        sample = parse_line(line, lineno)
        if isinstance(sample, MentionSample):
            mentions.append(sample)
        else:
            entities.append(sample)
    return mentions, entities
