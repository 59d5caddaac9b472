"""End-to-end training loop with checkpointing and dev-set selection.

One logical thread owns the parameters. Every run is a deterministic
function of (config, data): the config seed drives initialization and
per-epoch shuffling, and evaluation uses canonical internal ordering.
The metrics log is JSON-lines, one object per epoch:

    {"epoch": ..., "step": ..., "loss": ..., "dev_hit1": ...,
     "dev_hit3": ..., "dev_hit5": ..., "wall_ms": ...}

(``wall_ms`` is wall-clock and naturally varies between runs; all other
fields are reproducible bit-for-bit.)
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .checkpoint import TrainRunState, save_checkpoint
from .config import HyperConfig
from .data import Dataset, batch_iter
from .errors import LinkerError, TrainError, ValidationError
from .evaluation import evaluate
from .model import LinkerModel
from .objective import total_loss
from .params import AdamW


@dataclass
class TrainResult:
    best_checkpoint: Path
    last_checkpoint: Path
    metrics_path: Path
    state: TrainRunState


def _epoch_seed(seed: int, epoch: int) -> int:
    # independent shuffle stream per epoch, stable across runs
    return int(np.random.SeedSequence([seed, epoch, 0x5EED]).generate_state(1)[0])


def _clip_gradients(model: LinkerModel, max_norm: float) -> None:
    total = math.sqrt(sum(float((t.grad ** 2).sum()) for _, t in model.store.items()))
    if total > max_norm > 0:
        factor = max_norm / total
        for _, t in model.store.items():
            t.grad *= factor


def train(train_set: Dataset, dev_set: Dataset, config: HyperConfig, out_dir,
          report_every: int = 0) -> TrainResult:
    """Train a fresh model; keep the checkpoint with the best dev Hit@1.

    Raises :class:`TrainError` with diagnostics (batch id, parameter
    norms) if the loss or any gradient goes non-finite.
    """
    if train_set.d_c != dev_set.d_c or train_set.d_t != dev_set.d_t:
        raise ValidationError("train/dev feature dims disagree")
    if train_set.d_c != config.d_c or train_set.d_t != config.d_t:
        raise ValidationError(
            f"dataset dims (d_c={train_set.d_c}, d_t={train_set.d_t}) do not match "
            f"config (d_c={config.d_c}, d_t={config.d_t})"
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics_path = out_dir / "metrics.jsonl"
    best_path = out_dir / "best.ckpt"
    last_path = out_dir / "last.ckpt"

    model = LinkerModel(config)
    optimizer = AdamW(
        model.store,
        lr=config.lr,
        betas=(config.beta1, config.beta2),
        eps=config.adam_eps,
        weight_decay=config.weight_decay,
    )
    state = TrainRunState(config=config)
    save_checkpoint(best_path, model.store, state, optimizer)
    inv_temp = 1.0 / config.temperature

    step = 0
    best_hit1 = -1.0
    with metrics_path.open("w", encoding="utf-8") as log:
        for epoch in range(1, config.epochs + 1):
            t0 = time.monotonic()
            losses = []
            batches = batch_iter(train_set, config.batch_size,
                                 _epoch_seed(config.seed, epoch), training=True)
            for batch_id, batch in enumerate(batches):
                try:
                    mp = model.project(batch.mentions, "mention")
                    ep = model.project(batch.entities, "entity")
                    s_v, s_t, s_c = model.score_grid(mp, ep)
                    if config.temperature != 1.0:
                        s_v = ad.scale(s_v, inv_temp)
                        s_t = ad.scale(s_t, inv_temp)
                        s_c = ad.scale(s_c, inv_temp)
                    loss = total_loss(s_v, s_t, s_c, batch.positive_index,
                                      config.loss_weight)
                except LinkerError as e:
                    norms = model.store.param_norms()
                    worst = sorted(norms, key=norms.get, reverse=True)[:5]
                    raise TrainError(
                        f"forward failed at epoch {epoch} batch {batch_id}: {e}; "
                        f"largest parameter norms: "
                        + ", ".join(f"{k}={norms[k]:.3g}" for k in worst)
                    ) from e
                loss_val = loss.item()
                if not math.isfinite(loss_val):
                    raise TrainError(
                        f"non-finite loss at epoch {epoch} batch {batch_id}; "
                        f"parameter norms: {model.store.param_norms()}"
                    )
                ad.backward(loss)
                if config.grad_clip > 0:
                    _clip_gradients(model, config.grad_clip)
                optimizer.step()
                step += 1
                losses.append(loss_val)

            dev_report = evaluate(model, dev_set, ks=(1, 3, 5), report_top=0)
            hit1 = dev_report.hit_at_k[1]
            entry = {
                "epoch": epoch,
                "step": step,
                "loss": float(np.mean(losses)) if losses else None,
                "dev_hit1": hit1,
                "dev_hit3": dev_report.hit_at_k[3],
                "dev_hit5": dev_report.hit_at_k[5],
                "wall_ms": int((time.monotonic() - t0) * 1000),
            }
            log.write(json.dumps(entry) + "\n")
            log.flush()
            if report_every and epoch % report_every == 0:
                print(f"epoch {epoch}: loss={entry['loss']:.4f} dev_hit1={hit1:.3f}")
            state = TrainRunState(
                config=config, epoch=epoch, step=step,
                best_dev_hit1=max(best_hit1, hit1, 0.0),
            )
            if hit1 > best_hit1:
                best_hit1 = hit1
                save_checkpoint(best_path, model.store, state, optimizer)
            save_checkpoint(last_path, model.store, state, optimizer)

    if config.epochs == 0:
        save_checkpoint(last_path, model.store, state, optimizer)
    return TrainResult(
        best_checkpoint=best_path,
        last_checkpoint=last_path,
        metrics_path=metrics_path,
        state=state,
    )
