"""Reverse-mode automatic differentiation over dense numpy arrays.

Every primitive is a pure function building a define-by-run graph of
:class:`Tensor` nodes; ``backward`` walks the graph once and accumulates
gradients additively into every reachable leaf that requires them.
Production code runs in float32; tests may build float64 graphs (the
dtype of leaf data is preserved) because finite-difference checks are
unreliable at 32-bit.

All binary ops accept numpy-style broadcasting; reductions and
normalisations act on the trailing axis unless stated otherwise, so the
same primitives serve single vectors, matrices, and batched grids.
Masks are plain boolean numpy arrays: they carry no gradient and masked
positions contribute exactly zero.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, ShapeError

_FLOAT_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))


class Tensor:
    """A dense float tensor node in a reverse-mode graph.

    Leaves are built directly (``Tensor(data, requires_grad=True)``);
    intermediate nodes come out of the primitives below. Data is stored
    row-major; non-finite values are rejected at construction.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype, copy=False)
        elif arr.dtype not in _FLOAT_DTYPES:
            arr = arr.astype(np.float32)
        if not np.all(np.isfinite(arr)):
            raise DomainError("tensor values must be finite (NaN/Inf rejected)")
        self.data = arr
        self.grad: np.ndarray | None = np.zeros_like(arr) if requires_grad else None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return self.data.item()

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad[...] = 0.0

    # operator sugar; scalars go through `scale`/`shift` so float32 graphs
    # are not silently promoted
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_as_tensor(other, like=self), self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, 1.0 / float(other))
        raise TypeError("tensor division only supports python scalars")

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}{flag})"


def _as_tensor(x, like: Tensor | None = None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    dtype = like.data.dtype if like is not None else None
    return Tensor(x, dtype=dtype)


def _node(data: np.ndarray, parents: tuple[Tensor, ...], backward) -> Tensor:
    if not np.all(np.isfinite(data)):
        raise DomainError("operation produced non-finite values")
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.requires_grad = any(p.requires_grad for p in parents)
    out._parents = parents if out.requires_grad else ()
    out._backward = backward if out.requires_grad else None
    return out


def _accum(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to `shape`."""
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (gd, sd) in enumerate(zip(g.shape, shape)) if sd == 1 and gd != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise / broadcast primitives
# ---------------------------------------------------------------------------


def add(a, b) -> Tensor:
    a = _as_tensor(a)
    b = _as_tensor(b, like=a)
    data = a.data + b.data

    def bwd(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(g, b.data.shape))

    return _node(data, (a, b), bwd)


def sub(a, b) -> Tensor:
    a = _as_tensor(a)
    b = _as_tensor(b, like=a)
    data = a.data - b.data

    def bwd(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(-g, b.data.shape))

    return _node(data, (a, b), bwd)


def mul(a, b) -> Tensor:
    a = _as_tensor(a)
    b = _as_tensor(b, like=a)
    data = a.data * b.data

    def bwd(g):
        _accum(a, _unbroadcast(g * b.data, a.data.shape))
        _accum(b, _unbroadcast(g * a.data, b.data.shape))

    return _node(data, (a, b), bwd)


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    data = a.data * c

    def bwd(g):
        _accum(a, g * c)

    return _node(data, (a,), bwd)


def tanh_map(a: Tensor) -> Tensor:
    """Elementwise hyperbolic tangent."""
    y = np.tanh(a.data)

    def bwd(g):
        _accum(a, g * (1.0 - y * y))

    return _node(y, (a,), bwd)


# ---------------------------------------------------------------------------
# linear algebra
# ---------------------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul requires >=2-D operands, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul inner dims disagree: {a.shape} @ {b.shape}")
    data = np.matmul(a.data, b.data)

    def bwd(g):
        if a.requires_grad:
            ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
            _accum(a, _unbroadcast(ga, a.data.shape))
        if b.requires_grad:
            gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
            _accum(b, _unbroadcast(gb, b.data.shape))

    return _node(data, (a, b), bwd)


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """Affine map y = x W + b with b broadcast over leading axes.

    Accepts a single vector (shape ``(p,)``) or any batch of rows
    (``(..., p)``); weights are ``(p, q)``, bias ``(q,)``.
    """
    x, w = _as_tensor(x), _as_tensor(w)
    if w.ndim != 2:
        raise ShapeError(f"linear weights must be 2-D, got {w.shape}")
    if x.shape[-1] != w.shape[0]:
        raise ShapeError(f"linear shapes disagree: x {x.shape} vs W {w.shape}")
    squeeze = x.ndim == 1
    xx = reshape(x, (1, x.shape[0])) if squeeze else x
    y = matmul(xx, w)
    if b is not None:
        b = _as_tensor(b, like=x)
        if b.shape != (w.shape[1],):
            raise ShapeError(f"linear bias shape {b.shape} != ({w.shape[1]},)")
        y = add(y, b)
    return reshape(y, (w.shape[1],)) if squeeze else y


def dot(u: Tensor, v: Tensor) -> Tensor:
    """Inner product of two 1-D tensors, returned as a scalar tensor."""
    u, v = _as_tensor(u), _as_tensor(v)
    if u.ndim != 1 or v.ndim != 1 or u.shape != v.shape:
        raise ShapeError(f"dot requires equal-length vectors, got {u.shape} and {v.shape}")
    data = np.asarray(np.dot(u.data, v.data), dtype=u.data.dtype)

    def bwd(g):
        _accum(u, g * v.data)
        _accum(v, g * u.data)

    return _node(data, (u, v), bwd)


def l2_normalize(v: Tensor) -> Tensor:
    """Scale trailing-axis vectors to unit Euclidean norm."""
    v = _as_tensor(v)
    norms = np.sqrt((v.data * v.data).sum(-1, keepdims=True))
    if np.any(norms == 0.0):
        raise DomainError("l2_normalize on a zero vector")
    y = v.data / norms

    def bwd(g):
        s = (g * y).sum(-1, keepdims=True)
        _accum(v, (g - y * s) / norms)

    return _node(y, (v,), bwd)


# ---------------------------------------------------------------------------
# shape manipulation
# ---------------------------------------------------------------------------


def reshape(x: Tensor, shape) -> Tensor:
    x = _as_tensor(x)
    data = x.data.reshape(shape)

    def bwd(g):
        _accum(x, g.reshape(x.data.shape))

    return _node(data, (x,), bwd)


def swapaxes(x: Tensor, a1: int, a2: int) -> Tensor:
    x = _as_tensor(x)
    data = np.swapaxes(x.data, a1, a2)

    def bwd(g):
        _accum(x, np.swapaxes(g, a1, a2))

    return _node(data, (x,), bwd)


def concat(tensors, axis: int = -1) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def bwd(g):
        for t, piece in zip(tensors, np.split(g, splits, axis=axis)):
            _accum(t, piece)

    return _node(data, tuple(tensors), bwd)


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------


def _norm_axes(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a % ndim for a in axis)


def reduce_sum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    x = _as_tensor(x)
    axes = _norm_axes(axis, x.ndim)
    data = x.data.sum(axis=axes, keepdims=keepdims)

    def bwd(g):
        gg = g
        if not keepdims:
            gg = np.expand_dims(gg, axes)
        _accum(x, np.broadcast_to(gg, x.data.shape))

    return _node(data, (x,), bwd)


def reduce_mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    x = _as_tensor(x)
    axes = _norm_axes(axis, x.ndim)
    count = 1
    for a in axes:
        count *= x.data.shape[a]
    return scale(reduce_sum(x, axis=axes, keepdims=keepdims), 1.0 / count)


# ---------------------------------------------------------------------------
# normalisation / attention building blocks
# ---------------------------------------------------------------------------


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalise the trailing axis to zero mean / unit population variance,
    then apply a trainable per-feature affine."""
    x, gain, bias = _as_tensor(x), _as_tensor(gain), _as_tensor(bias)
    d = x.shape[-1]
    if d < 1 or eps <= 0:
        raise DomainError("layer_norm needs d >= 1 and eps > 0")
    if gain.shape != (d,) or bias.shape != (d,):
        raise ShapeError(f"layer_norm gain/bias must be ({d},), got {gain.shape}/{bias.shape}")
    mu = x.data.mean(-1, keepdims=True)
    var = x.data.var(-1, keepdims=True)
    s = np.sqrt(var + eps)
    xhat = (x.data - mu) / s
    data = gain.data * xhat + bias.data

    def bwd(g):
        if gain.requires_grad:
            _accum(gain, (g * xhat).reshape(-1, d).sum(0))
        if bias.requires_grad:
            _accum(bias, g.reshape(-1, d).sum(0))
        if x.requires_grad:
            dxhat = g * gain.data
            m1 = dxhat.mean(-1, keepdims=True)
            m2 = (dxhat * xhat).mean(-1, keepdims=True)
            _accum(x, (dxhat - m1 - xhat * m2) / s)

    return _node(data, (x, gain, bias), bwd)


def softmax(v: Tensor) -> Tensor:
    """Max-shifted softmax over the trailing axis."""
    v = _as_tensor(v)
    m = v.data.max(-1, keepdims=True)
    e = np.exp(v.data - m)
    y = e / e.sum(-1, keepdims=True)

    def bwd(g):
        s = (g * y).sum(-1, keepdims=True)
        _accum(v, y * (g - s))

    return _node(y, (v,), bwd)


def masked_softmax(v: Tensor, mask: np.ndarray) -> Tensor:
    """Softmax over trailing-axis entries whose mask bit is set.

    Masked positions get probability exactly 0 and propagate no gradient.
    Every trailing-axis group must keep at least one unmasked entry.
    """
    v = _as_tensor(v)
    mask_b = np.broadcast_to(np.asarray(mask, dtype=bool), v.data.shape)
    if not mask_b.any(-1).all():
        raise DomainError("masked_softmax: a row has no unmasked entries")
    z = np.where(mask_b, v.data, -np.inf)
    m = z.max(-1, keepdims=True)
    e = np.exp(z - m)
    y = e / e.sum(-1, keepdims=True)

    def bwd(g):
        s = (g * y).sum(-1, keepdims=True)
        _accum(v, y * (g - s))

    return _node(y, (v,), bwd)


def masked_mean_pool(rows: Tensor, mask: np.ndarray) -> Tensor:
    """Mean over axis -2 restricted to rows whose mask bit is set.

    ``rows`` has shape ``(..., R, d)``; ``mask`` broadcasts to ``(..., R)``.
    """
    rows = _as_tensor(rows)
    if rows.ndim < 2:
        raise ShapeError(f"masked_mean_pool needs (..., R, d), got {rows.shape}")
    maskf = np.broadcast_to(np.asarray(mask, dtype=bool), rows.data.shape[:-1]).astype(
        rows.data.dtype
    )
    counts = maskf.sum(-1)
    if not np.all(counts > 0):
        raise DomainError("masked_mean_pool: empty mask")
    data = (rows.data * maskf[..., None]).sum(-2) / counts[..., None]

    def bwd(g):
        gx = maskf[..., :, None] * (g / counts[..., None])[..., None, :]
        _accum(rows, gx)

    return _node(data, (rows,), bwd)


def logsumexp(x: Tensor) -> Tensor:
    """Numerically stable log-sum-exp over the trailing axis."""
    x = _as_tensor(x)
    m = x.data.max(-1)
    data = m + np.log(np.exp(x.data - m[..., None]).sum(-1))

    def bwd(g):
        sm = np.exp(x.data - data[..., None])
        _accum(x, sm * g[..., None])

    return _node(data, (x,), bwd)


def take_rows(x: Tensor, index: np.ndarray) -> Tensor:
    """Pick one column per row of a matrix: ``y[i] = x[i, index[i]]``."""
    x = _as_tensor(x)
    if x.ndim != 2:
        raise ShapeError(f"take_rows expects a matrix, got {x.shape}")
    idx = np.asarray(index, dtype=np.intp)
    rows = np.arange(x.shape[0])
    data = x.data[rows, idx]

    def bwd(g):
        gx = np.zeros_like(x.data)
        np.add.at(gx, (rows, idx), g)
        _accum(x, gx)

    return _node(data, (x,), bwd)


# ---------------------------------------------------------------------------
# reverse pass
# ---------------------------------------------------------------------------


def backward(root: Tensor) -> None:
    """Accumulate d(root)/d(leaf) into every reachable leaf's ``.grad``.

    The root must be scalar. Repeated calls keep adding (gradients are
    accumulated, not overwritten); callers zero leaf grads between steps.
    """
    if root.data.shape != ():
        raise ShapeError(f"backward requires a scalar root, got shape {root.data.shape}")
    if not root.requires_grad:
        return
    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in seen or not node.requires_grad:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            stack.append((p, False))
    root_grad = np.ones((), dtype=root.data.dtype)
    grads_were = root.grad
    root.grad = root_grad if grads_were is None else grads_were + root_grad
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
