"""Combined similarity and the contrastive training objective.

Each of the three unit score matrices (rows = mentions, columns =
candidate entities of the batch) gets its own softmax cross-entropy at
the positive column; a fourth applies to their elementwise mean. Per-row
losses are averaged over the batch so the loss weight and learning rate
stay batch-size independent.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import DomainError, ShapeError


def combined_score(s_v, s_t, s_c) -> Tensor:
    """Arithmetic mean of the three unit scores (scalars or matrices)."""
    s_v, s_t, s_c = (ad._as_tensor(s) for s in (s_v, s_t, s_c))
    return (s_v + s_t + s_c) * (1.0 / 3.0)


def contrastive_loss(scores_row, pos: int) -> Tensor:
    """Softmax cross-entropy of one score row at its positive index."""
    scores_row = ad._as_tensor(scores_row)
    if scores_row.ndim != 1:
        raise ShapeError(f"contrastive_loss expects a vector, got {scores_row.shape}")
    c = scores_row.shape[0]
    if c < 2:
        raise DomainError("contrastive_loss needs at least 2 candidates")
    if not 0 <= pos < c:
        raise DomainError(f"positive index {pos} out of range for {c} candidates")
    row = ad.reshape(scores_row, (1, c))
    lse = ad.logsumexp(row)                       # (1,)
    hit = ad.take_rows(row, np.asarray([pos]))    # (1,)
    return ad.reshape(lse - hit, ())


def contrastive_loss_rows(scores: Tensor, pos_index: np.ndarray) -> Tensor:
    """Mean softmax cross-entropy over the rows of a score matrix."""
    scores = ad._as_tensor(scores)
    if scores.ndim != 2:
        raise ShapeError(f"score matrix must be 2-D, got {scores.shape}")
    b, c = scores.shape
    if c < 2:
        raise DomainError("contrastive loss needs at least 2 candidates per row")
    pos = np.asarray(pos_index, dtype=np.intp)
    if pos.shape != (b,) or pos.min() < 0 or pos.max() >= c:
        raise DomainError("positive indices out of range")
    per_row = ad.logsumexp(scores) - ad.take_rows(scores, pos)
    return ad.reduce_mean(per_row)


def total_loss(s_v: Tensor, s_t: Tensor, s_c: Tensor, pos_index: np.ndarray,
               loss_weight: float) -> Tensor:
    """Overall objective: loss on the mean scores plus weighted per-unit losses."""
    if not (s_v.shape == s_t.shape == s_c.shape):
        raise ShapeError(
            f"score matrices disagree: {s_v.shape}, {s_t.shape}, {s_c.shape}"
        )
    l_o = contrastive_loss_rows(combined_score(s_v, s_t, s_c), pos_index)
    if loss_weight == 0.0:
        return l_o
    l_v = contrastive_loss_rows(s_v, pos_index)
    l_t = contrastive_loss_rows(s_t, pos_index)
    l_c = contrastive_loss_rows(s_c, pos_index)
    return l_o + (l_v + l_t + l_c) * float(loss_weight)
