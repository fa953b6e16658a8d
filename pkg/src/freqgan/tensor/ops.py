"""Differentiable primitives.

Layout is NCHW throughout (a bare ``C×H×W`` input is treated as a batch of
one). Elementwise binary ops accept equal shapes or a scalar right operand
(a Python number or a single-element tensor); there is no general
broadcasting, so shape slips surface as :class:`ShapeError`.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from freqgan.errors import ContractError, DegenerateBatchError, ShapeError
from freqgan.tensor.core import Tensor, as_tensor, make_result

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


# ---------------------------------------------------------------- elementwise

def _binary_operand(a: Tensor, b) -> tuple[Tensor, bool]:
    """Return (b as tensor, b_is_scalar) or raise on a shape mismatch."""
    bt = as_tensor(b)
    if bt.shape == a.shape:
        return bt, False
    if bt.data.size == 1:
        return bt, True
    raise ShapeError(f"shape mismatch: {a.shape} vs {bt.shape}")


def _reduce_like(g: np.ndarray, b: Tensor, scalar: bool) -> np.ndarray:
    return np.asarray(g.sum()).reshape(b.shape) if scalar else g


def add(a, b) -> Tensor:
    a = as_tensor(a)
    b, scalar = _binary_operand(a, b)
    return make_result(a.data + b.data, (a, b),
                       lambda g: (g, _reduce_like(g, b, scalar)))


def sub(a, b) -> Tensor:
    a = as_tensor(a)
    b, scalar = _binary_operand(a, b)
    return make_result(a.data - b.data, (a, b),
                       lambda g: (g, _reduce_like(-g, b, scalar)))


def mul(a, b) -> Tensor:
    a = as_tensor(a)
    b, scalar = _binary_operand(a, b)
    ad, bd = a.data, b.data
    return make_result(ad * bd, (a, b),
                       lambda g: (g * bd, _reduce_like(g * ad, b, scalar)))


def div(a, b) -> Tensor:
    a = as_tensor(a)
    b, scalar = _binary_operand(a, b)
    ad, bd = a.data, b.data
    out = ad / bd

    def backward(g):
        return g / bd, _reduce_like(-g * out / bd, b, scalar)

    return make_result(out, (a, b), backward)


def neg(a: Tensor) -> Tensor:
    return make_result(-a.data, (a,), lambda g: (-g,))


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    return make_result(a.data * c, (a,), lambda g: (g * c,))


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return make_result(a.data * mask, (a,), lambda g: (g * mask,))


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    return make_result(y, (a,), lambda g: (g * (1.0 - y * y),))


def elementwise(kind: str, a: Tensor, b=None) -> Tensor:
    """Dispatch by name: add, sub, mul, div, relu, tanh, scale."""
    binary = {"add": add, "sub": sub, "mul": mul, "div": div}
    if kind in binary:
        return binary[kind](a, b)
    if kind == "relu":
        return relu(a)
    if kind == "tanh":
        return tanh(a)
    if kind == "scale":
        return scale(a, b)
    raise ContractError(f"unknown elementwise op {kind!r}")


# ---------------------------------------------------------------- structural

def sum(a: Tensor, axis=None) -> Tensor:
    shape = a.shape

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),)

    return make_result(np.sum(a.data, axis=axis), (a,), backward)


def mean(a: Tensor, axis=None) -> Tensor:
    if axis is None:
        n = a.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        n = int(np.prod([a.shape[ax] for ax in axes]))
    return scale(sum(a, axis), 1.0 / n)


def reshape(a: Tensor, shape) -> Tensor:
    old = a.shape
    return make_result(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),))


def transpose(a: Tensor, axes=None) -> Tensor:
    axes = tuple(reversed(range(a.ndim))) if axes is None else tuple(axes)
    inverse = tuple(np.argsort(axes))
    return make_result(a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),))


def getitem(a: Tensor, index) -> Tensor:
    shape = a.shape

    def backward(g):
        full = np.zeros(shape)
        np.add.at(full, index, g)
        return (full,)

    return make_result(a.data[index], (a,), backward)


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise ShapeError(str(exc)) from None
    return make_result(data, tensors, lambda g: tuple(np.split(g, splits, axis=axis)))


# ---------------------------------------------------------------- linear maps

def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul needs [m×k]·[k×n], got {a.shape}·{b.shape}")
    ad, bd = a.data, b.data
    return make_result(ad @ bd, (a, b), lambda g: (g @ bd.T, ad.T @ g))


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """``x @ w.T + b`` for x [B×in], w [out×in], b [out]."""
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[1]:
        raise ShapeError(f"linear: x {x.shape} incompatible with weight {w.shape}")
    xd, wd = x.data, w.data
    out = xd @ wd.T
    parents = [x, w]
    if b is not None:
        out = out + b.data
        parents.append(b)

    def backward(g):
        grads = [g @ wd if x.requires_grad else None, g.T @ xd if w.requires_grad else None]
        if b is not None:
            grads.append(g.sum(axis=0))
        return grads

    return make_result(out, parents, backward)


def _as_batch(x: Tensor) -> tuple[Tensor, bool]:
    if x.ndim == 3:
        return reshape(x, (1,) + x.shape), True
    if x.ndim != 4:
        raise ShapeError(f"expected C×H×W or B×C×H×W, got shape {x.shape}")
    return x, False


def _out_extent(n: int, k: int, stride: int, pad: int) -> int:
    if stride < 1:
        raise ShapeError(f"stride must be >= 1, got {stride}")
    span = n + 2 * pad - k
    if span < 0:
        raise ShapeError(f"kernel {k} larger than padded extent {n + 2 * pad}")
    if span % stride:
        raise ShapeError(f"(extent {n} + 2·{pad} − {k}) not divisible by stride {stride}")
    return span // stride + 1


def _im2col(xp: np.ndarray, k: int, stride: int, Ho: int, Wo: int) -> np.ndarray:
    """Padded B×C×H×W input to B×(k·k·C)×(Ho·Wo) patches, rows ordered (i, j, c)."""
    B, C = xp.shape[:2]
    if k == 1:
        return np.ascontiguousarray(xp[:, :, ::stride, ::stride]).reshape(B, C, Ho * Wo)
    cols = np.empty((B, k, k, C, Ho, Wo))
    hi, wi = stride * (Ho - 1) + 1, stride * (Wo - 1) + 1
    for i in range(k):
        for j in range(k):
            cols[:, i, j] = xp[:, :, i:i + hi:stride, j:j + wi:stride]
    return cols.reshape(B, k * k * C, Ho * Wo)


def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None, stride: int = 1, pad: int = 0) -> Tensor:
    """Cross-correlation of x [B×C×H×W] with w [O×C×k×k].

    Patches are gathered with k·k strided slice copies and contracted with a
    batched matmul; on small channel counts this beats a strided-view im2col.
    """
    x, squeeze = _as_batch(x)
    B, C, H, W = x.shape
    O, Ci, k, k2 = w.shape
    if Ci != C or k != k2:
        raise ShapeError(f"conv2d: input {x.shape} incompatible with weight {w.shape}")
    Ho = _out_extent(H, k, stride, pad)
    Wo = _out_extent(W, k, stride, pad)

    xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x.data
    cols = _im2col(xp, k, stride, Ho, Wo)
    wmat = w.data.transpose(0, 2, 3, 1).reshape(O, k * k * C)
    out = np.matmul(wmat, cols)
    if b is not None:
        out += b.data[:, None]
    out = out.reshape(B, O, Ho, Wo)
    parents = [x, w] + ([b] if b is not None else [])

    def backward(g):
        gm = g.reshape(B, O, Ho * Wo)
        gw = None
        if w.requires_grad:
            gw = np.matmul(gm, cols.transpose(0, 2, 1)).sum(axis=0)
            gw = gw.reshape(O, k, k, C).transpose(0, 3, 1, 2)
        gx = None
        if x.requires_grad and stride == 1:
            # stride-1 input gradient: full correlation of g with the flipped kernel
            q = k - 1 - pad
            if q >= 0:
                gp = np.pad(g, ((0, 0), (0, 0), (q, q), (q, q))) if q else g
                gcols = _im2col(gp, k, 1, H, W)
                wflip = w.data[:, :, ::-1, ::-1].transpose(1, 2, 3, 0).reshape(C, k * k * O)
                gx = np.matmul(wflip, gcols).reshape(B, C, H, W)
        if x.requires_grad and gx is None:
            gcols = np.matmul(wmat.T, gm).reshape(B, k, k, C, Ho, Wo)
            gxp = np.zeros(xp.shape)
            hi, wi = stride * (Ho - 1) + 1, stride * (Wo - 1) + 1
            for i in range(k):
                for j in range(k):
                    gxp[:, :, i:i + hi:stride, j:j + wi:stride] += gcols[:, i, j]
            gx = gxp[:, :, pad:pad + H, pad:pad + W]
        grads = [gx, gw]
        if b is not None:
            grads.append(gm.sum(axis=(0, 2)))
        return grads

    result = make_result(out, parents, backward)
    return reshape(result, result.shape[1:]) if squeeze else result


def upsample_nearest(x: Tensor, m: int = 2) -> Tensor:
    x, squeeze = _as_batch(x)
    B, C, H, W = x.shape
    out = np.repeat(np.repeat(x.data, m, axis=2), m, axis=3)

    def backward(g):
        return (g.reshape(B, C, H, m, W, m).sum(axis=(3, 5)),)

    result = make_result(out, (x,), backward)
    return reshape(result, result.shape[1:]) if squeeze else result


# ---------------------------------------------------------------- pooling

def _windows(xd: np.ndarray, k: int, stride: int) -> np.ndarray:
    return sliding_window_view(xd, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]


def max_pool2d(x: Tensor, k: int = 2, stride: int | None = None) -> tuple[Tensor, np.ndarray]:
    """Max pooling that also returns flat argmax positions within each H×W plane."""
    stride = k if stride is None else stride
    x, squeeze = _as_batch(x)
    B, C, H, W = x.shape
    if k > H or k > W:
        raise ShapeError(f"pool window {k} exceeds spatial extent {(H, W)}")
    Ho, Wo = _out_extent(H, k, stride, 0), _out_extent(W, k, stride, 0)
    win = _windows(x.data, k, stride).reshape(B, C, Ho, Wo, k * k)
    local = win.argmax(axis=-1)
    out = np.take_along_axis(win, local[..., None], axis=-1)[..., 0]
    rows = np.arange(Ho)[:, None] * stride + local // k
    cols = np.arange(Wo)[None, :] * stride + local % k
    flat = rows * W + cols

    def backward(g):
        full = np.zeros((B, C, H * W))
        np.add.at(full, (np.arange(B)[:, None, None, None], np.arange(C)[None, :, None, None], flat), g)
        return (full.reshape(B, C, H, W),)

    result = make_result(out, (x,), backward)
    if squeeze:
        return reshape(result, result.shape[1:]), flat[0]
    return result, flat


def avg_pool2d(x: Tensor, k: int = 2, stride: int | None = None) -> Tensor:
    stride = k if stride is None else stride
    x, squeeze = _as_batch(x)
    B, C, H, W = x.shape
    if k > H or k > W:
        raise ShapeError(f"pool window {k} exceeds spatial extent {(H, W)}")
    Ho, Wo = _out_extent(H, k, stride, 0), _out_extent(W, k, stride, 0)
    if stride == k:
        out = x.data.reshape(B, C, Ho, k, Wo, k).mean(axis=(3, 5))
    else:
        out = _windows(x.data, k, stride).mean(axis=(-2, -1))

    def backward(g):
        share = g / (k * k)
        if stride == k:
            return (np.repeat(np.repeat(share, k, axis=2), k, axis=3),)
        full = np.zeros((B, C, H, W))
        hi, wi = stride * (Ho - 1) + 1, stride * (Wo - 1) + 1
        for i in range(k):
            for j in range(k):
                full[:, :, i:i + hi:stride, j:j + wi:stride] += share
        return (full,)

    result = make_result(out, (x,), backward)
    return reshape(result, result.shape[1:]) if squeeze else result


def global_sum_pool(x: Tensor) -> Tensor:
    """Collapse each channel's spatial plane into one scalar."""
    if x.ndim < 2:
        raise ShapeError(f"global_sum_pool needs at least 2 spatial axes, got {x.shape}")
    return sum(x, axis=(-2, -1))


def pool2d(mode: str, x: Tensor, k: int = 2, stride: int | None = None):
    """Returns ``(tensor, index_map_or_None)``; ``index_map`` only for max mode."""
    if mode in ("max", "max_with_indices"):
        return max_pool2d(x, k, stride)
    if mode == "avg":
        return avg_pool2d(x, k, stride), None
    if mode == "global_sum":
        return global_sum_pool(x), None
    raise ContractError(f"unknown pooling mode {mode!r}")


# ---------------------------------------------------------------- normalization

def batch_norm(x: Tensor, gamma: Tensor, beta: Tensor, running_mean: np.ndarray,
               running_var: np.ndarray, training: bool = True,
               momentum: float = BN_MOMENTUM, eps: float = BN_EPS) -> Tensor:
    """Per-channel batch normalization over B×C×H×W or B×C input.

    In training mode the running statistics arrays are updated in place.
    """
    if x.ndim not in (2, 4):
        raise ShapeError(f"batch_norm expects B×C or B×C×H×W, got {x.shape}")
    C = x.shape[1]
    if gamma.shape != (C,) or beta.shape != (C,):
        raise ShapeError(f"gamma/beta must have shape ({C},)")
    axes = (0,) if x.ndim == 2 else (0, 2, 3)
    bshape = (1, C) if x.ndim == 2 else (1, C, 1, 1)
    gd = gamma.data.reshape(bshape)

    if training:
        B = x.shape[0]
        if B < 2:
            raise DegenerateBatchError("batch_norm in train mode needs batch size >= 2")
        n = x.size // C
        mu = x.data.mean(axis=axes, keepdims=True)
        var = x.data.var(axis=axes, keepdims=True)
        inv_std = 1.0 / np.sqrt(var + eps)
        xhat = (x.data - mu) * inv_std
        running_mean *= 1.0 - momentum
        running_mean += momentum * mu.reshape(C)
        running_var *= 1.0 - momentum
        running_var += momentum * var.reshape(C) * n / (n - 1)

        def backward(g):
            gxhat = g * gd
            gx = inv_std / n * (n * gxhat - gxhat.sum(axis=axes, keepdims=True)
                                - xhat * (gxhat * xhat).sum(axis=axes, keepdims=True))
            return gx, (g * xhat).sum(axis=axes), g.sum(axis=axes)
    else:
        inv_std = 1.0 / np.sqrt(running_var.reshape(bshape) + eps)
        xhat = (x.data - running_mean.reshape(bshape)) * inv_std

        def backward(g):
            return g * gd * inv_std, (g * xhat).sum(axis=axes), g.sum(axis=axes)

    out = xhat * gd + beta.data.reshape(bshape)
    return make_result(out, (x, gamma, beta), backward)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - lse
    probs = np.exp(out)
    return make_result(out, (x,), lambda g: (g - probs * g.sum(axis=axis, keepdims=True),))

