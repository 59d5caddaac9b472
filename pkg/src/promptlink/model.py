"""Assembles heads and interaction units into one scoring model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import heads, interaction
from .autodiff import Tensor
from .config import HyperConfig
from .data import FeatureBundle, PackedFeatures, pack_features
from .params import ParamStore


@dataclass
class ProjectedFeatures:
    """Model-space features for a packed batch of records (one side)."""

    ids: list[str]
    v_g: Tensor            # (B, d_v)
    v_l: Tensor            # (B, R, d_v)
    img_mask: np.ndarray   # (B, R)
    t_g: Tensor            # (B, d_t)
    t_l: Tensor            # (B, T, d_t)
    txt_mask: np.ndarray   # (B, T)


@dataclass
class ScoreTriple:
    """Unit scores and their combination for one mention-entity pair."""

    s_v: float
    s_t: float
    s_c: float

    @property
    def combined(self) -> float:
        return (self.s_v + self.s_t + self.s_c) / 3.0


class LinkerModel:
    """Trainable scorer: projects feature bundles and scores pairs.

    Mention and entity sides share head parameters when
    ``config.tie_heads`` (the default); interaction parameters follow the
    checkpoint naming contract ("heads.", "vfi.m2e.", "vfi.e2m.", "tfi.",
    "cmfi.").
    """

    def __init__(self, config: HyperConfig, store: ParamStore | None = None,
                 dtype=np.float32):
        self.config = config
        if store is None:
            store = ParamStore()
            rng = np.random.default_rng(config.seed)
            self._register(store, rng, dtype)
        else:
            self._bind(store)
        self.store = store

    def _register(self, store: ParamStore, rng: np.random.Generator, dtype):
        self.head_m = heads.create_head_params(store, self.config, rng, "heads", dtype)
        if self.config.tie_heads:
            self.head_e = self.head_m
        else:
            self.head_e = heads.create_head_params(store, self.config, rng, "heads.entity", dtype)
        self.iparams = interaction.create_interaction_params(store, self.config, rng, dtype)

    def _bind(self, store: ParamStore):
        """Rebuild live parameter references from an existing store
        (checkpoint load path)."""
        cfg = self.config

        def hp(prefix):
            mlp = []
            for i in range(cfg.vg_mlp_depth):
                mlp.append((store[f"{prefix}.vg.fc{i + 1}.w"], store[f"{prefix}.vg.fc{i + 1}.b"]))
            return heads.HeadParams(
                ln_gain=store[f"{prefix}.vg.ln.gain"],
                ln_bias=store[f"{prefix}.vg.ln.bias"],
                mlp=mlp,
                local_w=store[f"{prefix}.vl.fc.w"],
                local_b=store[f"{prefix}.vl.fc.b"],
                ln_eps=cfg.ln_eps,
            )

        self.head_m = hp("heads")
        self.head_e = self.head_m if cfg.tie_heads else hp("heads.entity")

        def vp(prefix):
            return interaction.VfiParams(
                fc1_w=store[f"{prefix}.fc1.w"], fc1_b=store[f"{prefix}.fc1.b"],
                fc2_w=store[f"{prefix}.fc2.w"], fc2_b=store[f"{prefix}.fc2.b"],
                ln1_gain=store[f"{prefix}.ln1.gain"], ln1_bias=store[f"{prefix}.ln1.bias"],
                ln2_gain=store[f"{prefix}.ln2.gain"], ln2_bias=store[f"{prefix}.ln2.bias"],
                eps=cfg.ln_eps,
            )

        self.iparams = interaction.InteractionParams(
            vfi_m2e=vp("vfi.m2e"),
            vfi_e2m=vp("vfi.e2m"),
            tfi=interaction.TfiParams(
                wq=store["tfi.wq"], wk=store["tfi.wk"], wv=store["tfi.wv"],
                ln_gain=store["tfi.ln.gain"], ln_bias=store["tfi.ln.bias"],
                fc_w=store["tfi.fcg.w"], fc_b=store["tfi.fcg.b"], eps=cfg.ln_eps,
            ),
            cmfi=interaction.CmfiParams(
                fc1_w=store["cmfi.fc1.w"], fc1_b=store["cmfi.fc1.b"],
                fc2_w=store["cmfi.fc2.w"], fc2_b=store["cmfi.fc2.b"],
                fc3_w=store["cmfi.fc3.w"], fc3_b=store["cmfi.fc3.b"],
                ln_gain=store["cmfi.ln.gain"], ln_bias=store["cmfi.ln.bias"],
                eps=cfg.ln_eps,
            ),
        )

    # -- forward ------------------------------------------------------------

    def project(self, packed: PackedFeatures, side: str = "mention") -> ProjectedFeatures:
        hp = self.head_m if side == "mention" else self.head_e
        cls = packed.img_cls
        v_g = heads.visual_global_head(cls[:, 0], cls[:, 1], cls[:, 2], cls[:, 3], hp)
        v_l = heads.visual_local_head(packed.img_local, hp)
        t_g_np, t_l_np = heads.text_features(packed.txt)
        return ProjectedFeatures(
            ids=packed.ids,
            v_g=v_g,
            v_l=v_l,
            img_mask=packed.img_mask,
            t_g=ad._as_tensor(t_g_np),
            t_l=ad._as_tensor(t_l_np),
            txt_mask=packed.txt_mask,
        )

    def score_grid(self, mp: ProjectedFeatures, ep: ProjectedFeatures
                   ) -> tuple[Tensor, Tensor, Tensor]:
        """Score every mention against every entity: three (B_m, B_e) matrices."""
        norm = self.config.normalize_unit_dots
        s_v = interaction.vfi_score_grid(
            mp.v_g, mp.v_l, mp.img_mask, ep.v_g, ep.v_l, ep.img_mask,
            self.iparams, norm,
        )
        s_t = interaction.tfi_score_grid(
            mp.t_g, mp.t_l, mp.txt_mask, ep.t_g, ep.t_l, ep.txt_mask, self.iparams.tfi,
        )
        h_m = interaction.cmfi_context_batch(mp.t_g, mp.v_l, mp.img_mask, self.iparams.cmfi)
        h_e = interaction.cmfi_context_batch(ep.t_g, ep.v_l, ep.img_mask, self.iparams.cmfi)
        s_c = interaction.cmfi_score_grid(h_m, h_e, norm)
        return s_v, s_t, s_c

    def score_pair(self, mention: FeatureBundle, entity: FeatureBundle) -> ScoreTriple:
        """Reference single-pair scoring path (no batching tricks)."""
        mp = self.project(pack_features(["m"], [mention]), "mention")
        ep = self.project(pack_features(["e"], [entity]), "entity")
        norm = self.config.normalize_unit_dots
        d_v, d_t = self.config.d_v, self.config.d_t
        m_vg = ad.reshape(mp.v_g, (d_v,))
        e_vg = ad.reshape(ep.v_g, (d_v,))
        m_vl = ad.reshape(mp.v_l, mp.v_l.shape[1:])
        e_vl = ad.reshape(ep.v_l, ep.v_l.shape[1:])
        m_tg = ad.reshape(mp.t_g, (d_t,))
        e_tg = ad.reshape(ep.t_g, (d_t,))
        m_tl = ad.reshape(mp.t_l, mp.t_l.shape[1:])
        e_tl = ad.reshape(ep.t_l, ep.t_l.shape[1:])
        s_v = interaction.vfi_score(m_vg, m_vl, mp.img_mask[0], e_vg, e_vl, ep.img_mask[0],
                                    self.iparams, norm)
        s_t = interaction.tfi_score(m_tg, m_tl, mp.txt_mask[0], e_tg, e_tl, ep.txt_mask[0],
                                    self.iparams.tfi)
        h_m = interaction.cmfi_context(m_tg, m_vl, mp.img_mask[0], self.iparams.cmfi)
        h_e = interaction.cmfi_context(e_tg, e_vl, ep.img_mask[0], self.iparams.cmfi)
        s_c = interaction.cmfi_score(h_e, h_m, norm)
        return ScoreTriple(s_v.item(), s_t.item(), s_c.item())
