"""Annotation quality math: box IoU filtering and Fleiss' kappa.

Boxes are continuous rectangles (area = (x2-x1)*(y2-y1)); pixel-boundary
semantics are intentionally not modelled. Rating matrices follow the
standard Fleiss layout: one row per item, one column per category, cell
= number of raters choosing that category, with a constant rater count
per item.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Box:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValidationError(
                f"degenerate box ({self.x1}, {self.y1}, {self.x2}, {self.y2}): "
                "need x1 < x2 and y1 < y2"
            )

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)


def iou(a: Box, b: Box) -> float:
    """Intersection-over-union of two boxes; 0 when disjoint."""
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def filter_by_iou(pairs: list[tuple[Box, Box]], threshold: float = 0.5) -> list[int]:
    """Indices of pairs whose IoU reaches the threshold, order preserved."""
    if not 0.0 <= threshold <= 1.0:
        raise ValidationError(f"threshold must lie in [0, 1], got {threshold}")
    return [i for i, (a, b) in enumerate(pairs) if iou(a, b) >= threshold]


def fleiss_kappa(ratings) -> float:
    """Chance-corrected agreement across raters.

    ``ratings`` is an N x q count matrix with constant row sums n >= 2
    and q >= 2 categories. Returns (P_obs - P_exp) / (1 - P_exp); raises
    for the degenerate case P_exp == 1 (every rater, one category,
    every item).
    """
    m = np.asarray(ratings, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 2:
        raise ValidationError(f"rating matrix must be N x q with q >= 2, got {m.shape}")
    if np.any(m < 0) or not np.all(m == np.round(m)):
        raise ValidationError("rating matrix entries must be non-negative integers")
    row_sums = m.sum(axis=1)
    n = row_sums[0]
    if n < 2 or not np.all(row_sums == n):
        raise ValidationError(
            "every item needs the same rater count n >= 2 "
            f"(row sums: {sorted(set(row_sums.tolist()))})"
        )
    n_items = m.shape[0]
    p_item = ((m * (m - 1)).sum(axis=1)) / (n * (n - 1))
    p_obs = p_item.mean()
    p_cat = m.sum(axis=0) / (n_items * n)
    p_exp = float((p_cat ** 2).sum())
    if p_exp >= 1.0:
        raise ValidationError(
            "degenerate ratings: all raters chose a single category for every item"
        )
    return float((p_obs - p_exp) / (1.0 - p_exp))
