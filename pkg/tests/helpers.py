"""Shared test utilities: the central finite-difference gradient oracle."""

from __future__ import annotations

import numpy as np

from promptlink import autodiff as ad


def fd_check(build_fn, leaves: dict[str, ad.Tensor], step: float = 1e-4,
             max_coords: int | None = None, rng: np.random.Generator | None = None) -> float:
    """Compare analytic gradients against central finite differences.

    ``build_fn`` must rebuild the scalar graph from the leaves' *current*
    data each call. Returns the worst error, where error for one
    coordinate is |analytic - numeric| / max(|analytic|, |numeric|, 1):
    relative for large gradients, absolute (at the same threshold) near
    zero, where plain relative error is ill-conditioned.

    Leaves should be float64: central differences at step 1e-4 are
    unreliable at 32-bit precision.
    """
    for t in leaves.values():
        t.grad = np.zeros_like(t.data)
    root = build_fn()
    ad.backward(root)
    analytic = {name: t.grad.copy() for name, t in leaves.items()}

    coords = [(name, i) for name, t in leaves.items() for i in range(t.data.size)]
    if max_coords is not None and len(coords) > max_coords:
        if rng is None:
            rng = np.random.default_rng(0)
        pick = rng.choice(len(coords), size=max_coords, replace=False)
        coords = [coords[i] for i in pick]

    worst = 0.0
    for name, i in coords:
        flat = leaves[name].data.reshape(-1)
        orig = flat[i]
        flat[i] = orig + step
        f_plus = build_fn().item()
        flat[i] = orig - step
        f_minus = build_fn().item()
        flat[i] = orig
        numeric = (f_plus - f_minus) / (2.0 * step)
        a = analytic[name].reshape(-1)[i]
        err = abs(a - numeric) / max(abs(a), abs(numeric), 1.0)
        worst = max(worst, err)
    return worst


def leaf(rng: np.random.Generator, *shape) -> ad.Tensor:
    """Random float64 leaf tensor with gradient tracking."""
    return ad.Tensor(rng.standard_normal(shape), requires_grad=True, dtype=np.float64)
