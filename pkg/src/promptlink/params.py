"""Named parameter store and the adaptive-moment optimizer.

Parameters are leaf tensors registered under unique dotted paths
("heads.vg.fc1.w", "tfi.wq", ...); those paths are also the tensor names
written into checkpoints. One logical writer mutates the store during
backward/step; reads between updates are safe.
"""

from __future__ import annotations

import math

import numpy as np

from .autodiff import Tensor
from .errors import TrainError, ValidationError


class ParamStore:
    """Ordered map from parameter path to a trainable leaf tensor.

    Every registered tensor carries a same-shape gradient accumulator
    (``Tensor.grad``), zeroed on registration and after each optimizer
    step.
    """

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._params:
            raise ValidationError(f"duplicate parameter name: {name!r}")
        t = Tensor(np.asarray(value), requires_grad=True)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def zero_grads(self) -> None:
        for t in self._params.values():
            t.zero_grad()

    def copy_arrays(self) -> dict[str, np.ndarray]:
        return {k: t.data.copy() for k, t in self._params.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for name, arr in arrays.items():
            t = self._params.get(name)
            if t is None:
                raise ValidationError(f"unknown parameter in state: {name!r}")
            if t.data.shape != arr.shape:
                raise ValidationError(
                    f"parameter {name!r} shape {t.data.shape} != stored {arr.shape}"
                )
            t.data[...] = arr

    def grad_norms(self) -> dict[str, float]:
        return {k: float(np.linalg.norm(t.grad)) for k, t in self._params.items()}

    def param_norms(self) -> dict[str, float]:
        return {k: float(np.linalg.norm(t.data)) for k, t in self._params.items()}


def uniform_init(rng: np.random.Generator, fan_in: int, shape, dtype=np.float32) -> np.ndarray:
    """Variance-preserving uniform init in +-1/sqrt(fan_in)."""
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class AdamW:
    """Adaptive-moment update with decoupled weight decay.

    Uses the step-size formulation that folds the bias corrections into
    the learning rate, with eps added to the uncorrected root of the
    second moment:

        step_t = lr * sqrt(1 - b2^t) / (1 - b1^t)
        p     -= step_t * m / (sqrt(v) + eps) + lr * wd * p
    """

    def __init__(
        self,
        params: ParamStore,
        lr: float = 1e-5,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.01,
    ):
        if lr <= 0 or eps <= 0 or not (0 <= betas[0] < 1 and 0 <= betas[1] < 1):
            raise ValidationError("invalid optimizer hyperparameters")
        self.params = params
        self.lr = lr
        self.betas = (float(betas[0]), float(betas[1]))
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m = {k: np.zeros_like(t.data) for k, t in params.items()}
        self.v = {k: np.zeros_like(t.data) for k, t in params.items()}

    def step(self) -> None:
        """Apply one update from the accumulated gradients, then zero them."""
        b1, b2 = self.betas
        self.t += 1
        step_size = self.lr * math.sqrt(1.0 - b2**self.t) / (1.0 - b1**self.t)
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                raise TrainError(f"non-finite gradient for parameter {name!r}")
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            update = step_size * m / (np.sqrt(v) + self.eps)
            if self.weight_decay:
                update = update + (self.lr * self.weight_decay) * p.data
            p.data -= update
        self.params.zero_grads()

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for k in self.params.names():
            out[f"optim.m.{k}"] = self.m[k]
            out[f"optim.v.{k}"] = self.v[k]
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray], t: int) -> None:
        for k in self.params.names():
            self.m[k][...] = arrays[f"optim.m.{k}"]
            self.v[k][...] = arrays[f"optim.v.{k}"]
        self.t = int(t)
