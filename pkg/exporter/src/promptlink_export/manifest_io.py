"""Writer for the engine's manifest/blob dataset format.

Implemented against the wire format, not against the engine package:
manifest JSON `{format_version, split, config{d_c,d_t}, blob_file,
mentions[], entities[]}`; blob of raw little-endian float32 with 4-byte
aligned offsets; six tensors per record ("img_cls_l<layer>" x4,
"img_local", "txt_hidden").
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1
CLS_PREFIX = "img_cls_l"


class BlobWriter:
    def __init__(self):
        self.chunks: list[bytes] = []
        self.offset = 0

    def append(self, arr: np.ndarray) -> dict:
        raw = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        entry = {"shape": list(arr.shape), "offset": self.offset}
        self.chunks.append(raw)
        self.offset += len(raw)
        return entry

    def feature_entries(self, layer_cls: dict[int, np.ndarray], local: np.ndarray,
                        txt: np.ndarray, cls_names: list[str]) -> dict:
        layers = sorted(layer_cls)
        entries = {}
        for name, layer in zip(cls_names, layers):
            entries[name] = self.append(layer_cls[layer])
        entries["img_local"] = self.append(local)
        entries["txt_hidden"] = self.append(txt)
        return entries


def cls_tensor_names() -> list[str]:
    # fixed manifest tensor names; the exporter maps its (configurable)
    # layer choice onto them shallow-first
    return [f"{CLS_PREFIX}{layer}" for layer in (3, 10, 11, 12)]


def write_manifest(out_dir, mentions: list[dict], entities: list[dict],
                   d_c: int, d_t: int, blob: BlobWriter, split: str = "export",
                   manifest_name: str = "manifest.json",
                   blob_name: str = "features.bin") -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = {
        "format_version": FORMAT_VERSION,
        "split": split,
        "config": {"d_c": d_c, "d_t": d_t},
        "blob_file": blob_name,
        "mentions": mentions,
        "entities": entities,
    }
    (out_dir / blob_name).write_bytes(b"".join(blob.chunks))
    manifest_path = out_dir / manifest_name
    manifest_path.write_text(json.dumps(doc, indent=1, sort_keys=True),
                             encoding="utf-8")
    return manifest_path
