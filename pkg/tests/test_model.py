"""LinkerModel wiring tests: weight tying, score-dot normalization,
temperature, and checkpoint rebinding."""

import numpy as np
import pytest

from promptlink.checkpoint import TrainRunState, load_checkpoint, save_checkpoint
from promptlink.config import HyperConfig
from promptlink.data import pack_features, synth_dataset
from promptlink.model import LinkerModel


def _packed(ds, side="mention"):
    if side == "mention":
        recs = ds.mentions
        return pack_features([m.id for m in recs], [m.features for m in recs])
    recs = ds.kb.records()
    return pack_features([e.id for e in recs], [e.features for e in recs])


def test_tied_heads_share_parameters():
    cfg = HyperConfig(d_c=4, d_v=4, d_t=4, batch_size=2, seed=0, tie_heads=True)
    model = LinkerModel(cfg)
    assert model.head_m is model.head_e
    assert not any(n.startswith("heads.entity") for n in model.store.names())


def test_untied_heads_have_separate_parameters():
    cfg = HyperConfig(d_c=4, d_v=4, d_t=4, batch_size=2, seed=0, tie_heads=False)
    model = LinkerModel(cfg)
    assert model.head_m is not model.head_e
    assert "heads.entity.vg.fc1.w" in model.store
    ds = synth_dataset(1, 2, 2, d_c=4, d_t=4, noise_scale=0.0)
    # identical feature bundles project differently through untied heads
    mp = model.project(_packed(ds, "mention"), "mention")
    ep = model.project(_packed(ds, "entity"), "entity")
    assert not np.allclose(mp.v_g.data, ep.v_g.data)


def test_untied_heads_checkpoint_rebind(tmp_path):
    cfg = HyperConfig(d_c=4, d_v=4, d_t=4, batch_size=2, seed=3, tie_heads=False)
    model = LinkerModel(cfg)
    ds = synth_dataset(2, 2, 3, d_c=4, d_t=4, noise_scale=0.2)
    before = model.score_pair(ds.mentions[0].features, ds.kb.records()[1].features)
    path = save_checkpoint(tmp_path / "untied.ckpt", model.store, TrainRunState(config=cfg))
    loaded = load_checkpoint(path)
    rebuilt = LinkerModel(loaded.state.config, store=loaded.params)
    after = rebuilt.score_pair(ds.mentions[0].features, ds.kb.records()[1].features)
    assert before == after


def test_normalize_unit_dots_bounds_visual_and_cross_scores():
    ds = synth_dataset(4, 3, 5, d_c=6, d_t=6, noise_scale=0.4)
    base_cfg = HyperConfig(d_c=6, d_v=6, d_t=6, batch_size=2, seed=1)
    norm_cfg = HyperConfig(d_c=6, d_v=6, d_t=6, batch_size=2, seed=1,
                           normalize_unit_dots=True)
    plain = LinkerModel(base_cfg)
    normed = LinkerModel(norm_cfg)
    mp_p = plain.project(_packed(ds, "mention"), "mention")
    ep_p = plain.project(_packed(ds, "entity"), "entity")
    mp_n = normed.project(_packed(ds, "mention"), "mention")
    ep_n = normed.project(_packed(ds, "entity"), "entity")
    sv_p, _, sc_p = (t.data for t in plain.score_grid(mp_p, ep_p))
    sv_n, _, sc_n = (t.data for t in normed.score_grid(mp_n, ep_n))
    assert np.all(np.abs(sv_n) <= 1.0 + 1e-6)
    assert np.all(np.abs(sc_n) <= 1.0 + 1e-6)
    assert not np.allclose(sv_p, sv_n)


def test_normalized_grid_matches_normalized_pairs():
    ds = synth_dataset(6, 2, 3, d_c=5, d_t=5, noise_scale=0.3)
    cfg = HyperConfig(d_c=5, d_v=5, d_t=5, batch_size=2, seed=2,
                      normalize_unit_dots=True)
    model = LinkerModel(cfg)
    mp = model.project(_packed(ds, "mention"), "mention")
    ep = model.project(_packed(ds, "entity"), "entity")
    s_v, s_t, s_c = model.score_grid(mp, ep)
    for i, m in enumerate(ds.mentions):
        for j, e in enumerate(ds.kb.records()):
            triple = model.score_pair(m.features, e.features)
            assert s_v.data[i, j] == pytest.approx(triple.s_v, abs=1e-5)
            assert s_c.data[i, j] == pytest.approx(triple.s_c, abs=1e-5)


def test_temperature_scales_training_loss(tmp_path):
    from promptlink.data import split_dataset
    from promptlink.training import train
    import json

    ds = synth_dataset(5, 12, 16, d_c=4, d_t=4, noise_scale=0.1)
    tr, dev = split_dataset(ds, 0.25, seed=1)
    losses = {}
    for temp in (1.0, 4.0):
        cfg = HyperConfig(d_c=4, d_v=4, d_t=4, batch_size=4, epochs=1, seed=9,
                          lr=1e-4, temperature=temp)
        res = train(tr, dev, cfg, tmp_path / f"t{temp}")
        losses[temp] = json.loads(open(res.metrics_path).readline())["loss"]
    assert losses[1.0] != losses[4.0]
    assert np.isfinite(losses[4.0])
