"""Minimal reverse-mode autodiff over numpy arrays.

A Tensor wraps an ndarray plus an optional gradient buffer; ops build a tape
of parent links and backward closures, and Tensor.backward() walks the tape
in reverse topological order.  float32 is the training dtype; the same code
paths accept float64 for finite-difference verification.
"""

import numpy as np

from ..errors import DataError, DimensionError
from .kernels import ConvParams, dilated_conv2d, dilated_conv2d_backward


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, grad):
        if self.grad is None:
            self.grad = grad.astype(self.data.dtype, copy=True)
        else:
            self.grad += grad

    def backward(self, grad=None):
        if grad is None:
            grad = np.ones_like(self.data)
        order = []
        seen = set()

        def visit(node):
            if id(node) in seen:
                return
            seen.add(id(node))
            for p in node._parents:
                visit(p)
            order.append(node)

        visit(self)
        self._accumulate(np.asarray(grad, dtype=self.data.dtype))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_wrap(other, self.dtype), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return mul(self, -1.0)


def _wrap(x, dtype=None):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype))


def _wrap2(a, b):
    # keep python scalars / plain arrays at the Tensor operand's dtype
    if isinstance(a, Tensor) and not isinstance(b, Tensor):
        return a, Tensor(np.asarray(b, dtype=a.data.dtype))
    if isinstance(b, Tensor) and not isinstance(a, Tensor):
        return Tensor(np.asarray(a, dtype=b.data.dtype)), b
    return _wrap(a), _wrap(b)


def _needs(*tensors):
    return any(t.requires_grad or t._backward is not None for t in tensors)


def _make(data, parents, backward):
    out = Tensor(data)
    if _needs(*parents):
        out._parents = tuple(parents)
        out._backward = backward
        out.requires_grad = True
    return out


def _unbroadcast(grad, shape):
    """Sum grad down to `shape` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a, b):
    a, b = _wrap2(a, b)

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.shape))

    return _make(a.data + b.data, (a, b), backward)


def sub(a, b):
    a, b = _wrap2(a, b)

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(-g, b.shape))

    return _make(a.data - b.data, (a, b), backward)


def mul(a, b):
    a, b = _wrap2(a, b)

    def backward(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.shape))

    return _make(a.data * b.data, (a, b), backward)


_RELU_MASK_TRACE = None


class record_relu_masks:
    """Context manager collecting every ReLU sign mask evaluated inside it.

    Used by gradient checks to confirm a finite-difference interval does not
    cross a kink (identical masks at both endpoints)."""

    def __enter__(self):
        global _RELU_MASK_TRACE
        self._prev = _RELU_MASK_TRACE
        _RELU_MASK_TRACE = []
        return _RELU_MASK_TRACE

    def __exit__(self, *exc):
        global _RELU_MASK_TRACE
        _RELU_MASK_TRACE = self._prev
        return False


def relu(a):
    a = _wrap(a)
    mask = a.data > 0
    if _RELU_MASK_TRACE is not None:
        _RELU_MASK_TRACE.append(mask)

    def backward(g):
        if a.requires_grad:
            a._accumulate(g * mask)

    return _make(np.where(mask, a.data, 0), (a,), backward)


def sigmoid(a):
    a = _wrap(a)
    s = 1.0 / (1.0 + np.exp(-a.data))

    def backward(g):
        if a.requires_grad:
            a._accumulate(g * s * (1.0 - s))

    return _make(s, (a,), backward)


def log(a, eps=0.0):
    a = _wrap(a)
    val = a.data + eps

    def backward(g):
        if a.requires_grad:
            a._accumulate(g / val)

    return _make(np.log(val), (a,), backward)


def mean(a):
    a = _wrap(a)
    n = a.data.size

    def backward(g):
        if a.requires_grad:
            a._accumulate(np.full_like(a.data, g / n))

    return _make(np.asarray(a.data.mean(), dtype=a.dtype), (a,), backward)


def tsum(a):
    a = _wrap(a)

    def backward(g):
        if a.requires_grad:
            a._accumulate(np.full_like(a.data, g))

    return _make(np.asarray(a.data.sum(), dtype=a.dtype), (a,), backward)


def concat_channels(*tensors):
    """Concatenate N x C_i x H x W tensors along the channel axis."""
    ts = [_wrap(t) for t in tensors]
    base = ts[0].shape
    for t in ts[1:]:
        if t.shape[0] != base[0] or t.shape[2:] != base[2:]:
            raise DimensionError(f"cannot concat shapes {[t.shape for t in ts]}")
    sizes = [t.shape[1] for t in ts]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(ts, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                t._accumulate(g[:, lo:hi])

    return _make(np.concatenate([t.data for t in ts], axis=1), ts, backward)


def split_channels(a, sizes):
    """Exact inverse of concat_channels; returns one tensor per size."""
    a = _wrap(a)
    if sum(sizes) != a.shape[1]:
        raise DimensionError(f"split sizes {sizes} do not sum to {a.shape[1]} channels")
    offsets = np.cumsum([0] + list(sizes))
    outs = []
    for lo, hi in zip(offsets[:-1], offsets[1:]):
        lo, hi = int(lo), int(hi)

        def backward(g, lo=lo, hi=hi):
            if a.requires_grad:
                full = np.zeros_like(a.data)
                full[:, lo:hi] = g
                a._accumulate(full)

        outs.append(_make(a.data[:, lo:hi].copy(), (a,), backward))
    return outs


def channel_softmax(a):
    """Softmax over the channel axis of an N x C x H x W tensor."""
    a = _wrap(a)
    shifted = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=1, keepdims=True)

    def backward(g):
        if a.requires_grad:
            dot = (g * p).sum(axis=1, keepdims=True)
            a._accumulate(p * (g - dot))

    return _make(p, (a,), backward)


def conv2d(x, weight, bias, dilation=1):
    """Autodiff dilated convolution; weight (O,I,k,k), bias (O,)."""
    x, weight, bias = _wrap(x), _wrap(weight), _wrap(bias)
    params = ConvParams(weights=weight.data, bias=bias.data, dilation=dilation)
    out = dilated_conv2d(x.data, params)

    def backward(g):
        gx, gw, gb = dilated_conv2d_backward(x.data, params, g)
        if x.requires_grad:
            x._accumulate(gx)
        if weight.requires_grad:
            weight._accumulate(gw)
        if bias.requires_grad:
            bias._accumulate(gb)

    return _make(out, (x, weight, bias), backward)


def mse(pred, target):
    """Mean squared error over all elements; target may be a plain array."""
    pred = _wrap(pred)
    target = _wrap(target, pred.dtype)
    if pred.shape != target.shape:
        raise DimensionError(f"mse shapes differ: {pred.shape} vs {target.shape}")
    d = sub(pred, target)
    return mean(mul(d, d))


def bce(prob, target, eps=1e-7):
    """Mean binary cross-entropy of probabilities against a binary target."""
    prob = _wrap(prob)
    target = np.asarray(target.data if isinstance(target, Tensor) else target)
    if prob.shape != target.shape:
        raise DimensionError(f"bce shapes differ: {prob.shape} vs {target.shape}")
    if not np.all((target == 0) | (target == 1)):
        raise DataError("bce target must be binary")
    pos = mul(log(prob, eps), target)
    neg = mul(log(sub(1.0, prob), eps), 1.0 - target)
    return mul(mean(add(pos, neg)), -1.0)


def check_finite(t, what="tensor"):
    if not np.all(np.isfinite(t.data)):
        raise DataError(f"{what} contains non-finite values")
    return t
