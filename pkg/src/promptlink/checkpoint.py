"""Binary checkpoint container.

Layout (all integers little-endian):

    magic   4 bytes  b"VPML"
    version u32
    m_len   u32, followed by m_len bytes of UTF-8 JSON metadata
            (config digest + full config, epoch, step, best dev Hit@1,
             RNG state, optimizer hyperparameters)
    count   u32 tensor-directory entries, each:
        name_len u32, name bytes, rank u32, rank x u64 extents,
        u64 absolute byte offset of the payload
    payloads: raw little-endian float32, 4-byte aligned

Optimizer moments are stored as ordinary directory entries under
"optim.m.<param>" / "optim.v.<param>".
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import HyperConfig
from .errors import CheckpointError
from .params import AdamW, ParamStore

MAGIC = b"VPML"
VERSION = 1


@dataclass
class TrainRunState:
    """Everything needed to reproduce or resume a training run."""

    config: HyperConfig
    epoch: int = 0
    step: int = 0
    best_dev_hit1: float = 0.0
    rng_state: dict | None = None

    def __post_init__(self):
        if not 0.0 <= self.best_dev_hit1 <= 1.0:
            raise CheckpointError("best_dev_hit1 must lie in [0, 1]")


def save_checkpoint(path, params: ParamStore, state: TrainRunState,
                    optimizer: AdamW | None = None) -> Path:
    """Write parameters (and optimizer moments) with run metadata."""
    path = Path(path)
    tensors: dict[str, np.ndarray] = {k: t.data for k, t in params.items()}
    meta = {
        "config_digest": state.config.digest(),
        "config": state.config.to_dict(),
        "epoch": state.epoch,
        "step": state.step,
        "best_dev_hit1": state.best_dev_hit1,
        "rng_state": state.rng_state,
    }
    if optimizer is not None:
        tensors.update(optimizer.state_arrays())
        meta["optimizer"] = {
            "lr": optimizer.lr,
            "betas": list(optimizer.betas),
            "eps": optimizer.eps,
            "weight_decay": optimizer.weight_decay,
            "t": optimizer.t,
        }
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")

    names = list(tensors)
    dir_size = 0
    for name in names:
        arr = tensors[name]
        dir_size += 4 + len(name.encode()) + 4 + 8 * arr.ndim + 8
    header_size = 4 + 4 + 4 + len(meta_bytes) + 4 + dir_size
    pad = (-header_size) % 4
    offset = header_size + pad

    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", VERSION)
    out += struct.pack("<I", len(meta_bytes))
    out += meta_bytes
    out += struct.pack("<I", len(names))
    payloads = []
    for name in names:
        arr = np.ascontiguousarray(tensors[name], dtype="<f4")
        nb = name.encode()
        out += struct.pack("<I", len(nb)) + nb
        out += struct.pack("<I", arr.ndim)
        for ext in arr.shape:
            out += struct.pack("<Q", ext)
        out += struct.pack("<Q", offset)
        payloads.append(arr.tobytes())
        offset += arr.nbytes
    out += b"\x00" * pad
    for p in payloads:
        out += p
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(bytes(out))
    return path


@dataclass
class LoadedCheckpoint:
    params: ParamStore
    state: TrainRunState
    optimizer_arrays: dict[str, np.ndarray] = field(default_factory=dict)
    optimizer_meta: dict | None = None


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CheckpointError("checkpoint truncated")
        piece = self.buf[self.pos:self.pos + n]
        self.pos += n
        return piece

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]


def load_checkpoint(path, expected_config: HyperConfig | None = None) -> LoadedCheckpoint:
    """Read a checkpoint; verify the config digest when one is expected.

    No partial state escapes on error: everything is parsed and validated
    before a ParamStore is populated.
    """
    try:
        buf = Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    r = _Reader(buf)
    if r.take(4) != MAGIC:
        raise CheckpointError(f"{path}: bad magic (not a checkpoint)")
    version = r.u32()
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version} (supported {VERSION})")
    try:
        meta = json.loads(r.take(r.u32()).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: bad metadata block: {e}") from e
    count = r.u32()
    entries = []
    for _ in range(count):
        name = r.take(r.u32()).decode("utf-8")
        rank = r.u32()
        shape = tuple(r.u64() for _ in range(rank))
        offset = r.u64()
        entries.append((name, shape, offset))

    arrays: dict[str, np.ndarray] = {}
    for name, shape, offset in entries:
        n = int(np.prod(shape)) if shape else 1
        end = offset + 4 * n
        if end > len(buf):
            raise CheckpointError(f"{path}: tensor {name!r} payload out of bounds")
        arrays[name] = (
            np.frombuffer(buf, dtype="<f4", count=n, offset=offset)
            .reshape(shape)
            .astype(np.float32, copy=True)
        )

    config = HyperConfig.from_dict(meta["config"])
    if meta.get("config_digest") != config.digest():
        raise CheckpointError(f"{path}: metadata digest does not match embedded config")
    if expected_config is not None and expected_config.digest() != config.digest():
        raise CheckpointError(
            "checkpoint config digest mismatch: "
            f"expected {expected_config.digest()}, found {config.digest()}"
        )
    state = TrainRunState(
        config=config,
        epoch=int(meta["epoch"]),
        step=int(meta["step"]),
        best_dev_hit1=float(meta["best_dev_hit1"]),
        rng_state=meta.get("rng_state"),
    )
    params = ParamStore()
    optim_arrays = {}
    for name, arr in arrays.items():
        if name.startswith("optim."):
            optim_arrays[name] = arr
        else:
            params.add(name, arr)
    return LoadedCheckpoint(
        params=params,
        state=state,
        optimizer_arrays=optim_arrays,
        optimizer_meta=meta.get("optimizer"),
    )
