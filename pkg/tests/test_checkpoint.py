"""Checkpoint container round-trip and failure modes."""

import numpy as np
import pytest

from promptlink.checkpoint import TrainRunState, load_checkpoint, save_checkpoint
from promptlink.config import HyperConfig
from promptlink.errors import CheckpointError
from promptlink.params import AdamW, ParamStore

CFG = HyperConfig(d_c=4, d_v=4, d_t=4, batch_size=2, seed=11)


def _random_store(seed=0) -> ParamStore:
    rng = np.random.default_rng(seed)
    store = ParamStore()
    store.add("heads.vg.fc1.w", rng.standard_normal((4, 4)).astype(np.float32))
    store.add("tfi.wq", rng.standard_normal((4, 4)).astype(np.float32))
    store.add("cmfi.ln.gain", rng.standard_normal(4).astype(np.float32))
    return store


def test_round_trip_bit_identical(tmp_path):
    store = _random_store()
    state = TrainRunState(config=CFG, epoch=3, step=42, best_dev_hit1=0.75)
    path = save_checkpoint(tmp_path / "x.ckpt", store, state)
    loaded = load_checkpoint(path)
    assert loaded.state.epoch == 3
    assert loaded.state.step == 42
    assert loaded.state.best_dev_hit1 == 0.75
    assert loaded.state.config == CFG
    assert sorted(loaded.params.names()) == sorted(store.names())
    for name, t in store.items():
        assert np.array_equal(loaded.params[name].data, t.data)


def test_round_trip_preserves_optimizer_moments(tmp_path):
    store = _random_store()
    opt = AdamW(store, lr=0.01)
    for _, t in store.items():
        t.grad[...] = 1.0
    opt.step()
    path = save_checkpoint(tmp_path / "x.ckpt", store, TrainRunState(config=CFG), opt)
    loaded = load_checkpoint(path)
    assert loaded.optimizer_meta["t"] == 1
    for name in store.names():
        assert np.array_equal(loaded.optimizer_arrays[f"optim.m.{name}"], opt.m[name])
        assert np.array_equal(loaded.optimizer_arrays[f"optim.v.{name}"], opt.v[name])


def test_truncated_file_rejected(tmp_path):
    store = _random_store()
    path = save_checkpoint(tmp_path / "x.ckpt", store, TrainRunState(config=CFG))
    raw = path.read_bytes()
    for cut in (2, 10, len(raw) // 2, len(raw) - 3):
        clipped = tmp_path / f"cut{cut}.ckpt"
        clipped.write_bytes(raw[:cut])
        with pytest.raises(CheckpointError):
            load_checkpoint(clipped)


def test_bad_magic_rejected(tmp_path):
    p = tmp_path / "bad.ckpt"
    p.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(p)


def test_missing_file_rejected(tmp_path):
    with pytest.raises(CheckpointError, match="cannot read"):
        load_checkpoint(tmp_path / "absent.ckpt")


def test_digest_mismatch_reports_both_digests(tmp_path):
    store = _random_store()
    path = save_checkpoint(tmp_path / "x.ckpt", store, TrainRunState(config=CFG))
    other = HyperConfig(d_c=8, d_v=8, d_t=8, batch_size=2, seed=11)
    with pytest.raises(CheckpointError) as exc:
        load_checkpoint(path, expected_config=other)
    msg = str(exc.value)
    assert CFG.digest() in msg and other.digest() in msg
