"""Differentiable primitives.

Every primitive computes its forward value with numpy and, when a tape is
active and some input requires a gradient, records a closure mapping the
output adjoint to input adjoints.
"""
from __future__ import annotations

import numpy as np

from .. import _kernels
from ..errors import ShapeError
from .tensor import Tensor, active_tape, as_tensor

__all__ = [
    "forward",
    "matmul",
    "add",
    "sub",
    "mul",
    "scale",
    "sum",
    "relu",
    "sigmoid",
    "tanh",
    "dropout",
    "conv1d",
    "batchnorm1d",
    "reshape",
    "flatten",
    "slice_axis",
    "concat",
    "mse",
    "lstm",
    "PRIMITIVES",
]


def _emit(name, inputs, value, backward):
    needs = any(isinstance(t, Tensor) and t.requires_grad for t in inputs)
    out = Tensor(value, requires_grad=needs)
    tape = active_tape()
    if needs and tape is not None:
        tape.record(name, inputs, out, backward)
    return out


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} @ {b.shape}")
    A, Bm = a.data, b.data

    def back(g):
        return g @ Bm.T, A.T @ g

    return _emit("matmul", (a, b), A @ Bm, back)


def _check_broadcast(name, a, b):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{name}: shapes {a.shape} and {b.shape} do not broadcast") from None


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("add", a, b)

    def back(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _emit("add", (a, b), a.data + b.data, back)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("sub", a, b)

    def back(g):
        return _unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)

    return _emit("sub", (a, b), a.data - b.data, back)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("mul", a, b)
    A, Bv = a.data, b.data

    def back(g):
        return _unbroadcast(g * Bv, a.shape), _unbroadcast(g * A, b.shape)

    return _emit("mul", (a, b), A * Bv, back)


def scale(a, c: float):
    a = as_tensor(a)
    c = float(c)
    return _emit("scale", (a,), a.data * c, lambda g: (g * c,))


def sum(a):  # noqa: A001 - mirrors numpy naming
    a = as_tensor(a)
    shape = a.shape
    return _emit("sum", (a,), np.sum(a.data), lambda g: (np.broadcast_to(g, shape).copy(),))


def relu(x):
    x = as_tensor(x)
    mask = x.data > 0
    return _emit("relu", (x,), np.where(mask, x.data, 0.0), lambda g: (g * mask,))


def sigmoid(x):
    x = as_tensor(x)
    z = x.data
    y = np.empty_like(z)
    pos = z >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    y[~pos] = e / (1.0 + e)
    return _emit("sigmoid", (x,), y, lambda g: (g * y * (1.0 - y),))


def tanh(x):
    x = as_tensor(x)
    y = np.tanh(x.data)
    return _emit("tanh", (x,), y, lambda g: (g * (1.0 - y * y),))


def dropout(x, mask, keep_prob: float):
    """Inverted dropout with a caller-supplied 0/1 ``mask``."""
    x = as_tensor(x)
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != x.shape:
        raise ShapeError(f"dropout: mask shape {mask.shape} != input shape {x.shape}")
    factor = mask / keep_prob
    return _emit("dropout", (x,), x.data * factor, lambda g: (g * factor,))


def _conv_pad(padding, k):
    if padding == "same":
        if k % 2 == 0:
            raise ShapeError(f"conv1d: 'same' padding needs an odd kernel, got {k}")
        return k // 2, k // 2
    if padding == "valid":
        return 0, 0
    p = int(padding)
    return p, p


def conv1d(x, w, b=None, stride: int = 1, padding="same"):
    """Cross-correlation of ``x`` (B, C, L) with ``w`` (O, C, K)."""
    x, w = as_tensor(x), as_tensor(w)
    if x.ndim != 3 or w.ndim != 3 or x.shape[1] != w.shape[1]:
        raise ShapeError(f"conv1d: input {x.shape} and kernel {w.shape} are incompatible")
    K = w.shape[2]
    pl, pr = _conv_pad(padding, K)
    xp = np.pad(x.data, ((0, 0), (0, 0), (pl, pr)))
    Lp = xp.shape[2]
    if Lp < K:
        raise ShapeError(f"conv1d: padded length {Lp} shorter than kernel {K}")
    L_out = (Lp - K) // stride + 1
    cols = np.lib.stride_tricks.sliding_window_view(xp, K, axis=2)[:, :, ::stride, :]
    W = w.data
    out = np.einsum("bclk,ock->bol", cols, W, optimize=True)
    inputs = (x, w)
    if b is not None:
        b = as_tensor(b)
        if b.shape != (W.shape[0],):
            raise ShapeError(f"conv1d: bias shape {b.shape} != ({W.shape[0]},)")
        out = out + b.data[None, :, None]
        inputs = (x, w, b)
    x_len = x.shape[2]

    def back(g):
        dW = np.einsum("bclk,bol->ock", cols, g, optimize=True)
        dcols = np.einsum("bol,ock->bclk", g, W, optimize=True)
        dxp = np.zeros_like(xp)
        span = stride * (L_out - 1) + 1
        for k in range(K):
            dxp[:, :, k : k + span : stride] += dcols[:, :, :, k]
        dx = dxp[:, :, pl : pl + x_len]
        if b is None:
            return dx, dW
        return dx, dW, g.sum(axis=(0, 2))

    return _emit("conv1d", inputs, out, back)


def batchnorm1d(x, gamma, beta, running_mean=None, running_var=None, training=True, momentum=0.9, eps=1e-8):
    """Per-feature normalization over batch (and time for 3-D input).

    ``x`` is (B, C) or (B, C, L). In training mode the batch statistics are
    used and the running buffers (if given) are updated in place by an
    exponential moving average; otherwise the running statistics are used.
    """
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    if x.ndim not in (2, 3) or gamma.shape != (x.shape[1],) or beta.shape != (x.shape[1],):
        raise ShapeError(f"batchnorm1d: input {x.shape}, gamma {gamma.shape}, beta {beta.shape}")
    axes = (0,) if x.ndim == 2 else (0, 2)
    bshape = (1, -1) if x.ndim == 2 else (1, -1, 1)
    X = x.data
    if training:
        mu = X.mean(axis=axes)
        var = X.var(axis=axes)
        if running_mean is not None:
            running_mean *= momentum
            running_mean += (1 - momentum) * mu
        if running_var is not None:
            running_var *= momentum
            running_var += (1 - momentum) * var
    else:
        mu, var = running_mean, running_var
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (X - mu.reshape(bshape)) * inv.reshape(bshape)
    G = gamma.data.reshape(bshape)
    out = G * xhat + beta.data.reshape(bshape)
    m = X.size // X.shape[1]

    def back(g):
        dgamma = (g * xhat).sum(axis=axes)
        dbeta = g.sum(axis=axes)
        dxhat = g * G
        if training:
            s1 = dxhat.sum(axis=axes).reshape(bshape)
            s2 = (dxhat * xhat).sum(axis=axes).reshape(bshape)
            dx = inv.reshape(bshape) / m * (m * dxhat - s1 - xhat * s2)
        else:
            dx = dxhat * inv.reshape(bshape)
        return dx, dgamma, dbeta

    return _emit("batchnorm1d", (x, gamma, beta), out, back)


def reshape(x, shape):
    x = as_tensor(x)
    old = x.shape
    try:
        val = x.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot view {old} as {shape}") from None
    return _emit("reshape", (x,), val, lambda g: (g.reshape(old),))


def flatten(x):
    x = as_tensor(x)
    return reshape(x, (x.shape[0], -1))


def slice_axis(x, axis: int, start: int, stop: int):
    x = as_tensor(x)
    idx = [slice(None)] * x.ndim
    idx[axis] = slice(start, stop)
    idx = tuple(idx)
    shape = x.shape

    def back(g):
        out = np.zeros(shape)
        out[idx] = g
        return (out,)

    return _emit("slice", (x,), x.data[idx], back)


def concat(tensors, axis: int = 0):
    tensors = [as_tensor(t) for t in tensors]
    try:
        val = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ShapeError(f"concat: shapes {[t.shape for t in tensors]} along axis {axis}") from None
    bounds = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def back(g):
        return tuple(np.take(g, np.arange(bounds[i], bounds[i + 1]), axis=axis) for i in range(len(tensors)))

    return _emit("concat", tuple(tensors), val, back)


def mse(pred, target):
    """Mean squared error over all elements (per-sample mean, then batch mean)."""
    pred, target = as_tensor(pred), as_tensor(target)
    if pred.shape != target.shape:
        raise ShapeError(f"mse: prediction {pred.shape} vs target {target.shape}")
    diff = pred.data - target.data
    n = diff.size

    def back(g):
        d = 2.0 * g * diff / n
        return d, -d

    return _emit("mse", (pred, target), np.mean(diff * diff), back)


def lstm(x, wx, wh, b):
    """Single-layer LSTM over ``x`` (B, T, D) from zero initial state.

    Gate order in the 4H axis is input, forget, cell, output. Returns the
    hidden-state sequence (B, T, H). The time recurrence runs in the
    compiled kernel when available.
    """
    x, wx, wh, b = (as_tensor(t) for t in (x, wx, wh, b))
    if x.ndim != 3 or wx.ndim != 2 or wx.shape[0] != x.shape[2]:
        raise ShapeError(f"lstm: input {x.shape} incompatible with input weights {wx.shape}")
    H = wh.shape[0]
    if wh.shape != (H, 4 * H) or wx.shape[1] != 4 * H or b.shape != (4 * H,):
        raise ShapeError(f"lstm: weight shapes wx {wx.shape}, wh {wh.shape}, b {b.shape}")
    B, T, D = x.shape
    X = x.data
    Wh = np.ascontiguousarray(wh.data)
    xw = np.ascontiguousarray((X.reshape(B * T, D) @ wx.data + b.data).reshape(B, T, 4 * H))
    h, c, gates = _kernels.lstm_forward(xw, Wh)

    def back(g):
        dxw, dwh = _kernels.lstm_backward(np.ascontiguousarray(g, dtype=np.float64), Wh, h, c, gates)
        flat = dxw.reshape(B * T, 4 * H)
        dx = (flat @ wx.data.T).reshape(B, T, D)
        dwx = X.reshape(B * T, D).T @ flat
        return dx, dwx, dwh, flat.sum(axis=0)

    return _emit("lstm", (x, wx, wh, b), h, back)


PRIMITIVES = {
    "matmul": matmul,
    "add": add,
    "sub": sub,
    "mul": mul,
    "scale": scale,
    "sum": sum,
    "relu": relu,
    "sigmoid": sigmoid,
    "tanh": tanh,
    "dropout": dropout,
    "conv1d": conv1d,
    "batchnorm1d": batchnorm1d,
    "reshape": reshape,
    "flatten": flatten,
    "slice": slice_axis,
    "concat": concat,
    "mse": mse,
    "lstm": lstm,
}


def forward(tape, primitive: str, *inputs, **kwargs):
    """Apply ``primitive`` by name, recording onto ``tape``."""
    fn = PRIMITIVES[primitive]
    with tape:
        return fn(*inputs, **kwargs)
