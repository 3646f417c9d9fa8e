"""Differentiable operations on batched arrays.

Convolution and pooling take ``(batch, channels, frames)`` or an unbatched
``(channels, frames)``; dense takes ``(batch, features)`` or ``(features,)``.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided

from ..errors import ShapeError
from .tensor import Tensor, as_tensor, make_result

BCE_EPS = 1e-7


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    src = x.shape
    return make_result(x.data.reshape(shape), (x,), lambda g: (g.reshape(src),))


def flatten(x) -> Tensor:
    """Collapse all but the batch axis."""
    x = as_tensor(x)
    return reshape(x, (x.shape[0], -1))


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return make_result(a.data + b.data, (a, b),
                       lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def mul(a, b) -> Tensor:
    """Element-wise product; ``b`` may broadcast, e.g. (B,1,N) weights over (B,C,N) leads."""
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    return make_result(ad * bd, (a, b),
                       lambda g: (_unbroadcast(g * bd, a.shape) if a.requires_grad else None,
                                  _unbroadcast(g * ad, b.shape) if b.requires_grad else None))


def relu(x) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0
    return make_result(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def stable_sigmoid(z: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    s = stable_sigmoid(x.data)
    return make_result(s, (x,), lambda g: (g * s * (1.0 - s),))


def _batched(x: Tensor):
    if x.ndim == 2:
        return reshape(x, (1,) + x.shape), True
    if x.ndim != 3:
        raise ShapeError(f"expected (channels, frames) or (batch, channels, frames), got {x.shape}")
    return x, False


def conv1d(x, w, b, dilation: int = 1) -> Tensor:
    """Same-padded dilated cross-correlation.

    ``y[o, t] = b[o] + sum_{i,j} w[o, i, j] * x[i, t + (j - (k-1)/2) * dilation]``
    with zeros outside the signal.
    """
    x, w, b = as_tensor(x), as_tensor(w), as_tensor(b)
    x, squeeze = _batched(x)
    if w.ndim != 3:
        raise ShapeError(f"conv weights must be (c_out, c_in, k), got {w.shape}")
    c_out, c_in, k = w.shape
    bsz, cx, n = x.shape
    if cx != c_in:
        raise ShapeError(f"input has {cx} channels, weights expect {c_in}")
    if k % 2 == 0:
        raise ShapeError(f"kernel size must be odd, got {k}")
    if b.shape != (c_out,):
        raise ShapeError(f"bias must have shape ({c_out},), got {b.shape}")
    if dilation < 1:
        raise ShapeError(f"dilation must be >= 1, got {dilation}")

    pad = (k - 1) // 2 * dilation
    xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad))) if pad else x.data
    s0, s1, s2 = xp.strides
    cols = as_strided(xp, shape=(bsz, c_in, k, n), strides=(s0, s1, s2 * dilation, s2),
                      writeable=False).reshape(bsz, c_in * k, n)
    w2 = w.data.reshape(c_out, c_in * k)
    y = np.matmul(w2, cols) + b.data[None, :, None]

    def backward(g):
        gw = np.tensordot(g, cols, axes=([0, 2], [0, 2])).reshape(w.shape) if w.requires_grad else None
        gb = g.sum(axis=(0, 2)) if b.requires_grad else None
        gx = None
        if x.requires_grad:
            dcols = np.matmul(w2.T, g).reshape(bsz, c_in, k, n)
            gxp = np.zeros((bsz, c_in, n + 2 * pad))
            for j in range(k):
                gxp[:, :, j * dilation:j * dilation + n] += dcols[:, :, j, :]
            gx = gxp[:, :, pad:pad + n] if pad else gxp
        return gx, gw, gb

    out = make_result(y, (x, w, b), backward)
    return reshape(out, out.shape[1:]) if squeeze else out


def maxpool1d(x, pool: int) -> Tensor:
    """Non-overlapping max pooling; trailing frames that do not fill a window are dropped."""
    x = as_tensor(x)
    x, squeeze = _batched(x)
    bsz, c, n = x.shape
    if pool < 1:
        raise ShapeError(f"pool size must be >= 1, got {pool}")
    if pool > n:
        raise ShapeError(f"pool size {pool} exceeds {n} frames")
    m = n // pool
    windows = x.data[:, :, :m * pool].reshape(bsz, c, m, pool)
    idx = windows.argmax(axis=-1)[..., None]
    y = np.take_along_axis(windows, idx, axis=-1)[..., 0]

    def backward(g):
        gw = np.zeros((bsz, c, m, pool))
        np.put_along_axis(gw, idx, g[..., None], axis=-1)
        gx = np.zeros((bsz, c, n))
        gx[:, :, :m * pool] = gw.reshape(bsz, c, m * pool)
        return (gx,)

    out = make_result(y, (x,), backward)
    return reshape(out, out.shape[1:]) if squeeze else out


def dense(x, w, b) -> Tensor:
    """``y = W x + b`` for each row of ``x``."""
    x, w, b = as_tensor(x), as_tensor(w), as_tensor(b)
    if w.ndim != 2 or b.shape != (w.shape[0],):
        raise ShapeError(f"dense weights {w.shape} / bias {b.shape} are inconsistent")
    if x.shape[-1] != w.shape[1] or x.ndim not in (1, 2):
        raise ShapeError(f"dense input {x.shape} does not match weights {w.shape}")
    xd = x.data
    y = xd @ w.data.T + b.data

    def backward(g):
        gx = g @ w.data if x.requires_grad else None
        if xd.ndim == 1:
            gw, gb = np.outer(g, xd), g
        else:
            gw, gb = g.T @ xd, g.sum(axis=0)
        return gx, gw, gb

    return make_result(y, (x, w, b), backward)


def mse_loss(a, target) -> Tensor:
    """Mean of squared differences over all elements."""
    a, target = as_tensor(a), as_tensor(target)
    if a.shape != target.shape:
        raise ShapeError(f"mse operands differ in shape: {a.shape} vs {target.shape}")
    diff = a.data - target.data
    n = diff.size
    return make_result(np.array(np.mean(diff * diff)), (a, target),
                       lambda g: (g * 2.0 * diff / n, -g * 2.0 * diff / n))


def bce_loss(p, y, eps: float = BCE_EPS) -> Tensor:
    """Binary cross-entropy averaged over the batch; ``p`` is clamped to [eps, 1-eps]."""
    p = as_tensor(p)
    y = np.asarray(y.data if isinstance(y, Tensor) else y, dtype=np.float64).reshape(p.shape)
    pc = np.clip(p.data, eps, 1.0 - eps)
    inside = (p.data >= eps) & (p.data <= 1.0 - eps)
    n = p.data.size
    loss = -np.mean(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc))

    def backward(g):
        return (g * inside * (-y / pc + (1.0 - y) / (1.0 - pc)) / n,)

    return make_result(np.array(loss), (p,), backward)
