"""Parameterized layers built on the autodiff primitives."""
from __future__ import annotations

import numpy as np

from ..autodiff import ops
from ..autodiff.tensor import Tensor


def he_uniform(rng, shape, fan_in):
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


def xavier_uniform(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Layer:
    """Holds named parameter tensors and named state buffers."""

    def __init__(self):
        self.params: dict[str, Tensor] = {}
        self.buffers: dict[str, np.ndarray] = {}

    def add_param(self, name, value):
        t = Tensor(value, requires_grad=True, name=name)
        self.params[name] = t
        return t


class Dense(Layer):
    def __init__(self, n_in, n_out, rng, init="he"):
        super().__init__()
        if init == "he":
            w = he_uniform(rng, (n_in, n_out), n_in)
        else:
            w = xavier_uniform(rng, (n_in, n_out), n_in, n_out)
        self.W = self.add_param("W", w)
        self.b = self.add_param("b", np.zeros(n_out))

    def __call__(self, x):
        return ops.add(ops.matmul(x, self.W), self.b)


class Conv1d(Layer):
    def __init__(self, c_in, c_out, kernel, rng, bias=False, init="he"):
        super().__init__()
        fan_in, fan_out = c_in * kernel, c_out * kernel
        if init == "he":
            w = he_uniform(rng, (c_out, c_in, kernel), fan_in)
        else:
            w = xavier_uniform(rng, (c_out, c_in, kernel), fan_in, fan_out)
        self.W = self.add_param("W", w)
        self.b = self.add_param("b", np.zeros(c_out)) if bias else None

    def __call__(self, x):
        return ops.conv1d(x, self.W, self.b, stride=1, padding="same")


class BatchNorm1d(Layer):
    def __init__(self, channels, momentum=0.9, eps=1e-8):
        super().__init__()
        self.gamma = self.add_param("gamma", np.ones(channels))
        self.beta = self.add_param("beta", np.zeros(channels))
        self.buffers["running_mean"] = np.zeros(channels)
        self.buffers["running_var"] = np.ones(channels)
        self.momentum = momentum
        self.eps = eps

    def __call__(self, x, training):
        return ops.batchnorm1d(
            x,
            self.gamma,
            self.beta,
            self.buffers["running_mean"],
            self.buffers["running_var"],
            training=training,
            momentum=self.momentum,
            eps=self.eps,
        )


class LSTM(Layer):
    """Single-layer LSTM; gate order input, forget, cell, output."""

    def __init__(self, n_in, hidden, rng, forget_bias=1.0):
        super().__init__()
        self.hidden = hidden
        self.wx = self.add_param("wx", xavier_uniform(rng, (n_in, 4 * hidden), n_in, 4 * hidden))
        self.wh = self.add_param("wh", xavier_uniform(rng, (hidden, 4 * hidden), hidden, 4 * hidden))
        b = np.zeros(4 * hidden)
        b[hidden : 2 * hidden] = forget_bias
        self.b = self.add_param("b", b)

    def __call__(self, x):
        return ops.lstm(x, self.wx, self.wh, self.b)


def lstm_unrolled(x, wx, wh, b):
    """Reference LSTM composed from elementary primitives, one step at a time.

    Slow; used to cross-check the fused kernel.
    """
    B, T, _ = x.shape
    H = wh.shape[0]
    h = c = None
    states = []
    for t in range(T):
        xt = ops.reshape(ops.slice_axis(x, 1, t, t + 1), (B, -1))
        z = ops.add(ops.matmul(xt, wx), b)
        if h is not None:
            z = ops.add(z, ops.matmul(h, wh))
        i = ops.sigmoid(ops.slice_axis(z, 1, 0, H))
        f = ops.sigmoid(ops.slice_axis(z, 1, H, 2 * H))
        g = ops.tanh(ops.slice_axis(z, 1, 2 * H, 3 * H))
        o = ops.sigmoid(ops.slice_axis(z, 1, 3 * H, 4 * H))
        c = ops.mul(i, g) if c is None else ops.add(ops.mul(f, c), ops.mul(i, g))
        h = ops.mul(o, ops.tanh(c))
        states.append(ops.reshape(h, (B, 1, H)))
    return ops.concat(states, axis=1)
