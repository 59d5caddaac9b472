"""Hyperparameter configuration and its canonical digest."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ValidationError


@dataclass(frozen=True)
class HyperConfig:
    """Every knob of the model and its training run.

    Defaults follow the reference training recipe; desk-scale runs
    override dims, lr, and epochs. ``loss_weight`` is the multiplier on
    the three per-unit contrastive losses (JSON key "lambda" is accepted
    as an alias).
    """

    d_c: int = 96                # raw image feature width (also the cross-modal dim)
    d_v: int = 96                # projected visual feature width
    d_t: int = 512               # text feature width
    loss_weight: float = 1.0
    lr: float = 1e-5
    batch_size: int = 128
    epochs: int = 20
    seed: int = 0
    temperature: float = 1.0
    max_text_len: int = 40
    weight_decay: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    ln_eps: float = 1e-5
    vg_mlp_depth: int = 2        # affine layers in the global visual MLP
    tie_heads: bool = True       # mention/entity share projection heads
    normalize_unit_dots: bool = False  # l2-normalize operands of the VFI/CMFI dots
    grad_clip: float = 0.0       # global-norm clip; 0 disables

    def __post_init__(self):
        if min(self.d_c, self.d_v, self.d_t) < 1:
            raise ValidationError("feature dims must be positive")
        if self.loss_weight < 0:
            raise ValidationError("loss_weight must be >= 0")
        if self.batch_size < 2:
            raise ValidationError("batch_size must be >= 2 (in-batch negatives)")
        if self.lr <= 0 or self.temperature <= 0 or self.ln_eps <= 0:
            raise ValidationError("lr, temperature, and ln_eps must be positive")
        if self.epochs < 0 or self.vg_mlp_depth < 1 or self.max_text_len < 1:
            raise ValidationError("epochs, vg_mlp_depth, max_text_len out of range")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "HyperConfig":
        d = dict(d)
        if "lambda" in d:
            d["loss_weight"] = d.pop("lambda")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json_file(cls, path) -> "HyperConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ValidationError(f"cannot read config {path}: {e}") from e
        if not isinstance(raw, dict):
            raise ValidationError("config file must hold a JSON object")
        return cls.from_dict(raw)

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()
