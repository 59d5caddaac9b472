"""Trainable projections from raw encoder features to model features.

The global visual feature is an MLP over the layer-normalised
concatenation of the four per-layer CLS vectors (shallow first); local
visual features are a shared row-wise affine of the final-layer hidden
states. Text features need no parameters: the CLS row is the global
feature and the full hidden-state matrix the local one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .config import HyperConfig
from .errors import ShapeError
from .params import ParamStore, uniform_init


@dataclass
class HeadParams:
    ln_gain: Tensor
    ln_bias: Tensor
    mlp: list[tuple[Tensor, Tensor]]  # (weight, bias) per affine layer
    local_w: Tensor
    local_b: Tensor
    ln_eps: float


def create_head_params(
    store: ParamStore,
    cfg: HyperConfig,
    rng: np.random.Generator,
    prefix: str = "heads",
    dtype=np.float32,
) -> HeadParams:
    """Register head parameters under ``prefix`` and return live references."""
    wide = 4 * cfg.d_c
    ln_gain = store.add(f"{prefix}.vg.ln.gain", np.ones(wide, dtype=dtype))
    ln_bias = store.add(f"{prefix}.vg.ln.bias", np.zeros(wide, dtype=dtype))
    mlp = []
    for i in range(cfg.vg_mlp_depth):
        out_dim = cfg.d_v if i == cfg.vg_mlp_depth - 1 else wide
        w = store.add(f"{prefix}.vg.fc{i + 1}.w", uniform_init(rng, wide, (wide, out_dim), dtype))
        b = store.add(f"{prefix}.vg.fc{i + 1}.b", np.zeros(out_dim, dtype=dtype))
        mlp.append((w, b))
    local_w = store.add(f"{prefix}.vl.fc.w", uniform_init(rng, cfg.d_c, (cfg.d_c, cfg.d_v), dtype))
    local_b = store.add(f"{prefix}.vl.fc.b", np.zeros(cfg.d_v, dtype=dtype))
    return HeadParams(ln_gain, ln_bias, mlp, local_w, local_b, cfg.ln_eps)


def visual_global_head(f3, f10, f11, f12, p: HeadParams) -> Tensor:
    """Project the four layer CLS vectors to the global visual feature.

    Inputs may be single vectors ``(d_c,)`` or batches ``(B, d_c)``.
    The concatenation order is fixed shallow-first.
    """
    parts = [ad._as_tensor(f) for f in (f3, f10, f11, f12)]
    if len({t.shape for t in parts}) != 1:
        raise ShapeError(f"layer CLS vectors disagree: {[t.shape for t in parts]}")
    x = ad.concat(parts, axis=-1)
    x = ad.layer_norm(x, p.ln_gain, p.ln_bias, p.ln_eps)
    for i, (w, b) in enumerate(p.mlp):
        x = ad.linear(x, w, b)
        if i < len(p.mlp) - 1:
            x = ad.tanh_map(x)
    return x


def visual_local_head(img_local, p: HeadParams) -> Tensor:
    """Row-wise affine map of local image features, weights shared across rows."""
    return ad.linear(img_local, p.local_w, p.local_b)


def text_features(txt_hidden: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Select (T_G, T_L) from text hidden states: CLS row and full matrix."""
    txt_hidden = np.asarray(txt_hidden)
    if txt_hidden.ndim == 2:
        return txt_hidden[0], txt_hidden
    if txt_hidden.ndim == 3:
        return txt_hidden[:, 0, :], txt_hidden
    raise ShapeError(f"txt_hidden must be (T, d_t) or (B, T, d_t), got {txt_hidden.shape}")
