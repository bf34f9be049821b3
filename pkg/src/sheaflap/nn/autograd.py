"""A small reverse-mode autodiff engine over numpy arrays.

Only the operations below are differentiable; :func:`grad` refuses graphs
containing anything else.  Scatter-style ops accumulate sequentially (``np.bincount``)
so sums run in index order and results are reproducible.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError, UnsupportedOp

SUPPORTED_OPS = frozenset({
    "leaf", "add", "sub", "mul", "neg", "matmul", "kron_apply", "block_apply", "relu", "sigmoid",
    "tanh", "mean", "sum", "concat", "softmax_ce", "dropout", "gather", "scatter_add", "reshape",
    "transpose", "slice", "diag_embed", "diag_part", "rsqrt", "reciprocal", "sym_inv_sqrt", "sym_inv",
})


class Tensor:
    __slots__ = ("data", "grad", "parents", "backward_fn", "op", "requires_grad")

    def __init__(self, data, parents=(), backward_fn=None, op="leaf", requires_grad=False):
        self.data = np.asarray(data, dtype=float)
        self.grad = None
        self.parents = parents
        self.backward_fn = backward_fn
        self.op = op
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(op={self.op}, shape={self.data.shape})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    @property
    def T(self):
        return transpose(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(x) -> Tensor:
    return Tensor(np.array(x, dtype=float), requires_grad=True)


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


def _node(data, parents, backward_fn, op):
    return Tensor(data, tuple(parents), backward_fn, op)


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _node(a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)), "add")


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _node(a.data - b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)), "sub")


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _node(a.data * b.data, (a, b),
                 lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)), "mul")


def neg(a):
    return _node(-a.data, (a,), lambda g: (-g,), "neg")


def _swap(x):
    return np.swapaxes(x, -1, -2)


def matmul(a, b, op="matmul"):
    a, b = as_tensor(a), as_tensor(b)

    def back(g):
        ga = g @ _swap(b.data) if b.data.ndim > 1 else np.multiply.outer(g, b.data)
        gb = _swap(a.data) @ g if a.data.ndim > 1 else np.multiply.outer(a.data, g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _node(a.data @ b.data, (a, b), back, op)


def _segment_sum(index: np.ndarray, vals: np.ndarray, size: int) -> np.ndarray:
    """Row sums of ``vals`` into ``size`` buckets, accumulated in input order (same bits as ``np.add.at``)."""
    k = int(np.prod(vals.shape[1:], dtype=np.int64))
    if k == 0 or len(index) == 0:
        return np.zeros((size,) + vals.shape[1:])
    flat = (np.asarray(index, dtype=np.int64)[:, None] * k + np.arange(k)).ravel()
    out = np.bincount(flat, weights=vals.reshape(-1), minlength=size * k)
    return out.reshape((size,) + vals.shape[1:])


def kron_apply(W, X):
    """Apply the d x d matrix ``W`` to every node's stalk: (I_n ⊗ W) X for X of shape (n, d, f)."""
    W, X = as_tensor(W), as_tensor(X)
    if W.data.ndim != 2 or X.data.ndim != 3 or W.shape[1] != X.shape[1]:
        raise ShapeError(f"kron_apply needs (d, d) and (n, d, f), got {W.shape} and {X.shape}")
    return matmul(W, X, op="kron_apply")


def block_apply(values, rows: np.ndarray, cols: np.ndarray, X):
    """Block-sparse product: out[r] = Σ_k values[k] @ X[cols[k]] over blocks with rows[k] = r."""
    values, X = as_tensor(values), as_tensor(X)
    n = X.shape[0]
    if values.data.ndim != 3 or X.data.ndim != 3 or values.shape[2] != X.shape[1]:
        raise ShapeError(f"block_apply got blocks {values.shape} and signal {X.shape}")
    out = _segment_sum(rows, values.data @ X.data[cols], n).reshape(n, values.shape[1], X.shape[2])

    def back(g):
        gr = g[rows]
        gv = gr @ _swap(X.data[cols])
        return gv, _segment_sum(cols, _swap(values.data) @ gr, n)

    return _node(out, (values, X), back, "block_apply")


def relu(a):
    mask = a.data > 0
    return _node(np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,), "relu")


def sigmoid(a):
    s = 0.5 * (1.0 + np.tanh(0.5 * a.data))
    return _node(s, (a,), lambda g: (g * s * (1.0 - s),), "sigmoid")


def tanh(a):
    t = np.tanh(a.data)
    return _node(t, (a,), lambda g: (g * (1.0 - t * t),), "tanh")


def sum(a, axis=None):  # noqa: A001
    def back(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.shape).copy(),)

    return _node(a.data.sum(axis=axis), (a,), back, "sum")


def mean(a, axis=None):
    count = a.data.size if axis is None else a.shape[axis]

    def back(g):
        g = g / count
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.shape).copy(),)

    return _node(a.data.mean(axis=axis), (a,), back, "mean")


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    cuts = np.cumsum(sizes)[:-1]
    return _node(np.concatenate([t.data for t in tensors], axis=axis), tensors,
                 lambda g: tuple(np.split(g, cuts, axis=axis)), "concat")


def gather(a, index: np.ndarray):
    """Rows of ``a`` at ``index`` (axis 0)."""
    def back(g):
        return (_segment_sum(index, g, a.shape[0]),)

    return _node(a.data[index], (a,), back, "gather")


def scatter_add(a, index: np.ndarray, size: int):
    """Sum rows of ``a`` into ``size`` buckets given by ``index``."""
    out = _segment_sum(index, a.data, size)
    return _node(out, (a,), lambda g: (g[index],), "scatter_add")


def segment_mean(a, index: np.ndarray, size: int):
    counts = np.bincount(index, minlength=size).astype(float)
    inv = (1.0 / np.maximum(counts, 1.0)).reshape((size,) + (1,) * (a.data.ndim - 1))
    return mul(scatter_add(a, index, size), inv)


def reshape(a, shape):
    return _node(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),), "reshape")


def transpose(a):
    """Swap the last two axes."""
    return _node(_swap(a.data), (a,), lambda g: (_swap(g),), "transpose")


def slice_last(a, start: int, stop: int):
    def back(g):
        ga = np.zeros_like(a.data)
        ga[..., start:stop] = g
        return (ga,)

    return _node(a.data[..., start:stop], (a,), back, "slice")


def diag_embed(a):
    """(k, d) -> (k, d, d) with the rows on the diagonal."""
    d = a.shape[-1]
    idx = np.arange(d)
    out = np.zeros(a.shape + (d,))
    out[..., idx, idx] = a.data
    return _node(out, (a,), lambda g: (g[..., idx, idx].copy(),), "diag_embed")


def diag_part(a):
    idx = np.arange(a.shape[-1])
    d = a.shape[-1]

    def back(g):
        out = np.zeros(g.shape + (d,))
        out[..., idx, idx] = g
        return (out,)

    return _node(a.data[..., idx, idx].copy(), (a,), back, "diag_part")


def rsqrt(a):
    r = 1.0 / np.sqrt(a.data)
    return _node(r, (a,), lambda g: (-0.5 * g * r / a.data,), "rsqrt")


def reciprocal(a):
    r = 1.0 / a.data
    return _node(r, (a,), lambda g: (-g * r * r,), "reciprocal")


def _spectral_fn(a, f, fprime, op):
    """Matrix function of a batch of symmetric matrices via eigendecomposition."""
    lam, Q = np.linalg.eigh(a.data)
    fl = f(lam)
    out = (Q * fl[..., None, :]) @ _swap(Q)

    def back(g):
        gs = 0.5 * (g + _swap(g))
        M = _swap(Q) @ gs @ Q
        dl = lam[..., :, None] - lam[..., None, :]
        df = fl[..., :, None] - fl[..., None, :]
        close = np.abs(dl) <= 1e-12 * np.maximum(np.abs(lam[..., :, None]), 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            K = np.where(close, fprime(0.5 * (lam[..., :, None] + lam[..., None, :])), df / dl)
        return (Q @ (K * M) @ _swap(Q),)

    return _node(0.5 * (out + _swap(out)), (a,), back, op)


def sym_inv_sqrt(a):
    return _spectral_fn(a, lambda x: x ** -0.5, lambda x: -0.5 * x ** -1.5, "sym_inv_sqrt")


def sym_inv(a):
    return _spectral_fn(a, lambda x: 1.0 / x, lambda x: -1.0 / (x * x), "sym_inv")


def softmax_cross_entropy(logits, labels: np.ndarray, index: np.ndarray):
    """Mean cross-entropy of ``logits[index]`` against ``labels[index]``."""
    z = logits.data[index]
    z = z - z.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    y = labels[index]
    count = max(len(index), 1)
    loss = -logp[np.arange(len(index)), y].sum() / count

    def back(g):
        p = np.exp(logp)
        p[np.arange(len(index)), y] -= 1.0
        gl = np.zeros_like(logits.data)
        np.add.at(gl, index, p * (g / count))
        return (gl,)

    return _node(loss, (logits,), back, "softmax_ce")


def dropout(a, p: float, rng: np.random.Generator | None, training: bool = True):
    """Inverted dropout with a fixed mask drawn from ``rng``."""
    if not training or p <= 0.0:
        return a
    mask = (rng.random(a.shape) >= p) / (1.0 - p)
    return _node(a.data * mask, (a,), lambda g: (g * mask,), "dropout")


def _topo(root: Tensor) -> list[Tensor]:
    order, seen, stack = [], set(), [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Tensor) -> None:
    """Accumulate d loss / d t into ``t.grad`` for every tensor that requires it."""
    if loss.data.size != 1:
        raise ShapeError("backward needs a scalar loss")
    order = _topo(loss)
    for node in order:
        if node.op not in SUPPORTED_OPS:
            raise UnsupportedOp(f"no derivative rule for op {node.op!r}")
    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node.backward_fn is None or node.grad is None:
            continue
        grads = node.backward_fn(node.grad)
        for parent, g in zip(node.parents, grads):
            if not parent.requires_grad:
                continue
            parent.grad = g if parent.grad is None else parent.grad + g
        node.grad = None  # interior node, gradient fully propagated


def grad(params: list[Tensor], loss: Tensor) -> list[np.ndarray]:
    """Gradients of scalar ``loss`` with respect to ``params`` (zeros if unused)."""
    for p in params:
        p.grad = None
    backward(loss)
    return [np.zeros_like(p.data) if p.grad is None else p.grad for p in params]
