"""The three mention-entity interaction units.

Each unit turns projected features of a mention-entity pair into a
scalar similarity:

  * ``vfi_*``  -- visual interaction: pooled local features of one side
    gate a transformed copy of the other side's global feature; run in
    both directions with independent parameters and averaged.
  * ``tfi_*``  -- textual interaction: cosine of the global text
    features, averaged with an attention read of the mention's token
    features queried by the entity's tokens.
  * ``cmfi_*`` -- cross-modal interaction: a text-conditioned attention
    summary of the local visual features, compared by dot product; one
    parameter set shared by mention and entity sides.

Every function exists in a single-pair form (vectors/matrices, the
reference path) and, where training needs it, a ``_grid`` form producing
the full B_m x B_e score matrix via broadcasting. Masks follow the
convention of :mod:`promptlink.autodiff`: boolean arrays, masked rows
contribute exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .config import HyperConfig
from .params import ParamStore, uniform_init


@dataclass
class VfiParams:
    fc1_w: Tensor
    fc1_b: Tensor
    fc2_w: Tensor
    fc2_b: Tensor
    ln1_gain: Tensor
    ln1_bias: Tensor
    ln2_gain: Tensor
    ln2_bias: Tensor
    eps: float


@dataclass
class TfiParams:
    wq: Tensor
    wk: Tensor
    wv: Tensor
    ln_gain: Tensor
    ln_bias: Tensor
    fc_w: Tensor
    fc_b: Tensor
    eps: float


@dataclass
class CmfiParams:
    fc1_w: Tensor
    fc1_b: Tensor
    fc2_w: Tensor
    fc2_b: Tensor
    fc3_w: Tensor
    fc3_b: Tensor
    ln_gain: Tensor
    ln_bias: Tensor
    eps: float


@dataclass
class InteractionParams:
    vfi_m2e: VfiParams
    vfi_e2m: VfiParams
    tfi: TfiParams
    cmfi: CmfiParams


def _create_vfi(store, prefix, d_v, eps, rng, dtype) -> VfiParams:
    return VfiParams(
        fc1_w=store.add(f"{prefix}.fc1.w", uniform_init(rng, d_v, (d_v, d_v), dtype)),
        fc1_b=store.add(f"{prefix}.fc1.b", np.zeros(d_v, dtype=dtype)),
        fc2_w=store.add(f"{prefix}.fc2.w", uniform_init(rng, d_v, (d_v, d_v), dtype)),
        fc2_b=store.add(f"{prefix}.fc2.b", np.zeros(d_v, dtype=dtype)),
        ln1_gain=store.add(f"{prefix}.ln1.gain", np.ones(d_v, dtype=dtype)),
        ln1_bias=store.add(f"{prefix}.ln1.bias", np.zeros(d_v, dtype=dtype)),
        ln2_gain=store.add(f"{prefix}.ln2.gain", np.ones(d_v, dtype=dtype)),
        ln2_bias=store.add(f"{prefix}.ln2.bias", np.zeros(d_v, dtype=dtype)),
        eps=eps,
    )


def create_interaction_params(
    store: ParamStore,
    cfg: HyperConfig,
    rng: np.random.Generator,
    dtype=np.float32,
) -> InteractionParams:
    """Register all interaction-unit parameters; the cross-modal common
    width equals d_c."""
    d_v, d_t, d_x = cfg.d_v, cfg.d_t, cfg.d_c
    eps = cfg.ln_eps
    vfi_m2e = _create_vfi(store, "vfi.m2e", d_v, eps, rng, dtype)
    vfi_e2m = _create_vfi(store, "vfi.e2m", d_v, eps, rng, dtype)
    tfi = TfiParams(
        wq=store.add("tfi.wq", uniform_init(rng, d_t, (d_t, d_t), dtype)),
        wk=store.add("tfi.wk", uniform_init(rng, d_t, (d_t, d_t), dtype)),
        wv=store.add("tfi.wv", uniform_init(rng, d_t, (d_t, d_t), dtype)),
        ln_gain=store.add("tfi.ln.gain", np.ones(d_t, dtype=dtype)),
        ln_bias=store.add("tfi.ln.bias", np.zeros(d_t, dtype=dtype)),
        fc_w=store.add("tfi.fcg.w", uniform_init(rng, d_t, (d_t, d_t), dtype)),
        fc_b=store.add("tfi.fcg.b", np.zeros(d_t, dtype=dtype)),
        eps=eps,
    )
    cmfi = CmfiParams(
        fc1_w=store.add("cmfi.fc1.w", uniform_init(rng, d_t, (d_t, d_x), dtype)),
        fc1_b=store.add("cmfi.fc1.b", np.zeros(d_x, dtype=dtype)),
        fc2_w=store.add("cmfi.fc2.w", uniform_init(rng, d_v, (d_v, d_x), dtype)),
        fc2_b=store.add("cmfi.fc2.b", np.zeros(d_x, dtype=dtype)),
        fc3_w=store.add("cmfi.fc3.w", uniform_init(rng, d_x, (d_x, d_x), dtype)),
        fc3_b=store.add("cmfi.fc3.b", np.zeros(d_x, dtype=dtype)),
        ln_gain=store.add("cmfi.ln.gain", np.ones(d_x, dtype=dtype)),
        ln_bias=store.add("cmfi.ln.bias", np.zeros(d_x, dtype=dtype)),
        eps=eps,
    )
    return InteractionParams(vfi_m2e, vfi_e2m, tfi, cmfi)


# ---------------------------------------------------------------------------
# VFI: visual feature interaction
# ---------------------------------------------------------------------------


def vfi_directional(query_g, target_g, target_local, target_mask, p: VfiParams,
                    normalize: bool = False) -> Tensor:
    """One direction of the visual interaction for a single pair.

    query_g, target_g: (d_v,); target_local: (R, d_v) with boolean mask
    (R,). The pooled target rows are mixed with the query, gated through
    a tanh branch, re-anchored on the target global, and scored against
    the query by dot product.
    """
    query_g = ad._as_tensor(query_g)
    target_g = ad._as_tensor(target_g)
    target_local = ad._as_tensor(target_local)
    pooled = ad.masked_mean_pool(target_local, target_mask)
    hvc = ad.linear(ad.layer_norm(pooled + query_g, p.ln1_gain, p.ln1_bias, p.eps),
                    p.fc1_w, p.fc1_b)
    hvg = ad.tanh_map(ad.linear(hvc, p.fc2_w, p.fc2_b))
    hv = ad.layer_norm(ad.mul(hvg, hvc) + target_g, p.ln2_gain, p.ln2_bias, p.eps)
    if normalize:
        return ad.dot(ad.l2_normalize(hv), ad.l2_normalize(query_g))
    return ad.dot(hv, query_g)


def vfi_directional_grid(query_g, target_g, target_local, target_mask, p: VfiParams,
                         normalize: bool = False) -> Tensor:
    """Directional visual scores for all query x target pairs.

    query_g: (B_q, d_v); target_g: (B_t, d_v); target_local: (B_t, R, d_v)
    with mask (B_t, R). Returns (B_q, B_t).
    """
    query_g = ad._as_tensor(query_g)
    target_g = ad._as_tensor(target_g)
    bq, d = query_g.shape
    bt = target_g.shape[0]
    pooled = ad.masked_mean_pool(ad._as_tensor(target_local), target_mask)  # (B_t, d)
    mix = ad.reshape(pooled, (1, bt, d)) + ad.reshape(query_g, (bq, 1, d))
    hvc = ad.linear(ad.layer_norm(mix, p.ln1_gain, p.ln1_bias, p.eps), p.fc1_w, p.fc1_b)
    hvg = ad.tanh_map(ad.linear(hvc, p.fc2_w, p.fc2_b))
    hv = ad.layer_norm(ad.mul(hvg, hvc) + ad.reshape(target_g, (1, bt, d)),
                       p.ln2_gain, p.ln2_bias, p.eps)
    q = ad.reshape(query_g, (bq, 1, d))
    if normalize:
        hv, q = ad.l2_normalize(hv), ad.l2_normalize(q)
    return ad.reduce_sum(ad.mul(hv, q), axis=-1)


def vfi_score(m_g, m_local, m_mask, e_g, e_local, e_mask, params: InteractionParams,
              normalize: bool = False) -> Tensor:
    """Mean of the two directional visual scores for a single pair."""
    m2e = vfi_directional(m_g, e_g, e_local, e_mask, params.vfi_m2e, normalize)
    e2m = vfi_directional(e_g, m_g, m_local, m_mask, params.vfi_e2m, normalize)
    return (m2e + e2m) * 0.5


def vfi_score_grid(m_g, m_local, m_mask, e_g, e_local, e_mask, params: InteractionParams,
                   normalize: bool = False) -> Tensor:
    m2e = vfi_directional_grid(m_g, e_g, e_local, e_mask, params.vfi_m2e, normalize)
    e2m = vfi_directional_grid(e_g, m_g, m_local, m_mask, params.vfi_e2m, normalize)
    return (m2e + ad.swapaxes(e2m, 0, 1)) * 0.5


# ---------------------------------------------------------------------------
# TFI: textual feature interaction
# ---------------------------------------------------------------------------


def tfi_g2g(t_m_g, t_e_g) -> Tensor:
    """Cosine of the two global text features (single pair)."""
    return ad.dot(ad.l2_normalize(ad._as_tensor(t_m_g)), ad.l2_normalize(ad._as_tensor(t_e_g)))


def tfi_g2g_grid(t_m_g, t_e_g) -> Tensor:
    m = ad.l2_normalize(ad._as_tensor(t_m_g))
    e = ad.l2_normalize(ad._as_tensor(t_e_g))
    return ad.matmul(m, ad.swapaxes(e, 0, 1))


def tfi_g2l(t_e_g, t_m_local, m_mask, t_e_local, e_mask, p: TfiParams) -> Tensor:
    """Attention read of mention tokens by entity tokens, for one pair.

    t_e_g: (d_t,); t_m_local: (L_m, d_t) masked by m_mask; t_e_local:
    (L_e, d_t) masked by e_mask. Masked mention positions get zero
    attention; masked entity rows are excluded from the pooling.
    """
    t_e_g = ad._as_tensor(t_e_g)
    d_t = t_e_g.shape[-1]
    q = ad.matmul(ad._as_tensor(t_e_local), p.wq)
    k = ad.matmul(ad._as_tensor(t_m_local), p.wk)
    v = ad.matmul(ad._as_tensor(t_m_local), p.wv)
    logits = ad.scale(ad.matmul(q, ad.swapaxes(k, -1, -2)), 1.0 / math.sqrt(d_t))
    attn = ad.masked_softmax(logits, np.asarray(m_mask, dtype=bool))
    context = ad.matmul(attn, v)                                   # (L_e, d_t)
    ht = ad.layer_norm(ad.masked_mean_pool(context, e_mask), p.ln_gain, p.ln_bias, p.eps)
    return ad.dot(ad.linear(t_e_g, p.fc_w, p.fc_b), ht)


def tfi_g2l_grid(t_e_g, t_m_local, m_mask, t_e_local, e_mask, p: TfiParams) -> Tensor:
    """Attention scores for all mention x entity pairs.

    t_e_g: (B_e, d_t); t_m_local: (B_m, L_m, d_t); t_e_local:
    (B_e, L_e, d_t). Returns (B_m, B_e).
    """
    t_e_g = ad._as_tensor(t_e_g)
    be, d_t = t_e_g.shape
    t_m_local = ad._as_tensor(t_m_local)
    bm, lm = t_m_local.shape[0], t_m_local.shape[1]
    le = ad._as_tensor(t_e_local).shape[1]
    q = ad.reshape(ad.matmul(ad._as_tensor(t_e_local), p.wq), (1, be, le, d_t))
    k = ad.reshape(ad.matmul(t_m_local, p.wk), (bm, 1, lm, d_t))
    v = ad.reshape(ad.matmul(t_m_local, p.wv), (bm, 1, lm, d_t))
    logits = ad.scale(ad.matmul(q, ad.swapaxes(k, -1, -2)), 1.0 / math.sqrt(d_t))
    attn = ad.masked_softmax(logits, np.asarray(m_mask, dtype=bool)[:, None, None, :])
    context = ad.matmul(attn, v)                                   # (B_m, B_e, L_e, d_t)
    pooled = ad.masked_mean_pool(context, np.asarray(e_mask, dtype=bool)[None, :, :])
    ht = ad.layer_norm(pooled, p.ln_gain, p.ln_bias, p.eps)        # (B_m, B_e, d_t)
    proj = ad.reshape(ad.linear(t_e_g, p.fc_w, p.fc_b), (1, be, d_t))
    return ad.reduce_sum(ad.mul(proj, ht), axis=-1)


def tfi_score(t_m_g, t_m_local, m_mask, t_e_g, t_e_local, e_mask, p: TfiParams) -> Tensor:
    """Mean of the global-global and global-local text scores (single pair)."""
    g2g = tfi_g2g(t_m_g, t_e_g)
    g2l = tfi_g2l(t_e_g, t_m_local, m_mask, t_e_local, e_mask, p)
    return (g2g + g2l) * 0.5


def tfi_score_grid(t_m_g, t_m_local, m_mask, t_e_g, t_e_local, e_mask, p: TfiParams) -> Tensor:
    g2g = tfi_g2g_grid(t_m_g, t_e_g)
    g2l = tfi_g2l_grid(t_e_g, t_m_local, m_mask, t_e_local, e_mask, p)
    return (g2g + g2l) * 0.5


# ---------------------------------------------------------------------------
# CMFI: cross-modal feature interaction
# ---------------------------------------------------------------------------


def cmfi_context(t_g, v_local, v_mask, p: CmfiParams) -> Tensor:
    """Fuse one record's global text feature with its local visual rows.

    t_g: (d_t,); v_local: (R, d_v) masked by v_mask. Attention weights
    over the projected visual rows sum to 1 on unmasked entries.
    """
    t_g = ad._as_tensor(t_g)
    ht = ad.linear(t_g, p.fc1_w, p.fc1_b)              # (d_x,)
    hv = ad.linear(ad._as_tensor(v_local), p.fc2_w, p.fc2_b)  # (R, d_x)
    d_x = ht.shape[-1]
    logits = ad.reduce_sum(ad.mul(hv, ad.reshape(ht, (1, d_x))), axis=-1)  # (R,)
    alpha = ad.masked_softmax(logits, np.asarray(v_mask, dtype=bool))
    ctx = ad.reduce_sum(ad.mul(hv, ad.reshape(alpha, (alpha.shape[0], 1))), axis=-2)
    gate = ad.tanh_map(ad.linear(ht, p.fc3_w, p.fc3_b))
    return ad.layer_norm(ad.mul(gate, ht) + ctx, p.ln_gain, p.ln_bias, p.eps)


def cmfi_context_batch(t_g, v_local, v_mask, p: CmfiParams) -> Tensor:
    """Batched fusion: t_g (B, d_t), v_local (B, R, d_v) -> (B, d_x)."""
    t_g = ad._as_tensor(t_g)
    b, _ = t_g.shape
    ht = ad.linear(t_g, p.fc1_w, p.fc1_b)                         # (B, d_x)
    hv = ad.linear(ad._as_tensor(v_local), p.fc2_w, p.fc2_b)      # (B, R, d_x)
    d_x = ht.shape[-1]
    logits = ad.reduce_sum(ad.mul(hv, ad.reshape(ht, (b, 1, d_x))), axis=-1)  # (B, R)
    alpha = ad.masked_softmax(logits, np.asarray(v_mask, dtype=bool))
    r = alpha.shape[-1]
    ctx = ad.reduce_sum(ad.mul(hv, ad.reshape(alpha, (b, r, 1))), axis=-2)    # (B, d_x)
    gate = ad.tanh_map(ad.linear(ht, p.fc3_w, p.fc3_b))
    return ad.layer_norm(ad.mul(gate, ht) + ctx, p.ln_gain, p.ln_bias, p.eps)


def cmfi_score(h_e, h_m, normalize: bool = False) -> Tensor:
    """Dot product of the two fused context vectors (single pair)."""
    h_e, h_m = ad._as_tensor(h_e), ad._as_tensor(h_m)
    if normalize:
        h_e, h_m = ad.l2_normalize(h_e), ad.l2_normalize(h_m)
    return ad.dot(h_e, h_m)


def cmfi_score_grid(h_m, h_e, normalize: bool = False) -> Tensor:
    """Dot products for all pairs: h_m (B_m, d_x), h_e (B_e, d_x) -> (B_m, B_e)."""
    h_m, h_e = ad._as_tensor(h_m), ad._as_tensor(h_e)
    if normalize:
        h_m, h_e = ad.l2_normalize(h_m), ad.l2_normalize(h_e)
    return ad.matmul(h_m, ad.swapaxes(h_e, 0, 1))
