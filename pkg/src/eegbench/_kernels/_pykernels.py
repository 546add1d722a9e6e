"""Pure numpy fallback for the compiled kernels (same signatures and results)."""
import numpy as np


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def lstm_forward(xw, wh):
    xw = np.ascontiguousarray(xw, dtype=np.float64)
    B, T, G = xw.shape
    H = G // 4
    h = np.zeros((B, T, H))
    c = np.zeros((B, T, H))
    gates = np.zeros((B, T, G))
    h_prev = np.zeros((B, H))
    c_prev = np.zeros((B, H))
    for t in range(T):
        z = xw[:, t, :] + h_prev @ wh if t > 0 else xw[:, t, :].copy()
        g = _sigmoid(z)
        g[:, 2 * H : 3 * H] = np.tanh(z[:, 2 * H : 3 * H])
        gates[:, t, :] = g
        c_prev = g[:, H : 2 * H] * c_prev + g[:, :H] * g[:, 2 * H : 3 * H]
        h_prev = g[:, 3 * H :] * np.tanh(c_prev)
        c[:, t, :] = c_prev
        h[:, t, :] = h_prev
    return h, c, gates


def lstm_backward(dh, wh, h, c, gates):
    B, T, H = dh.shape
    dxw = np.zeros((B, T, 4 * H))
    dwh = np.zeros((H, 4 * H))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        g = gates[:, t, :]
        i, f, gg, o = g[:, :H], g[:, H : 2 * H], g[:, 2 * H : 3 * H], g[:, 3 * H :]
        tc = np.tanh(c[:, t, :])
        dht = dh[:, t, :] + dh_next
        dc = dc_next + dht * o * (1.0 - tc * tc)
        cp = c[:, t - 1, :] if t > 0 else np.zeros((B, H))
        dz = np.concatenate(
            [dc * gg * i * (1 - i), dc * cp * f * (1 - f), dc * i * (1 - gg * gg), dht * tc * o * (1 - o)],
            axis=1,
        )
        dxw[:, t, :] = dz
        dc_next = dc * f
        if t > 0:
            dwh += h[:, t - 1, :].T @ dz
        dh_next = dz @ wh.T
    return dxw, dwh


def find_extrema(x):
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if n < 3:
        return np.zeros(0, dtype=np.intp), np.zeros(0, dtype=np.intp)
    # collapse runs of equal values, remember each run's span
    change = np.flatnonzero(np.diff(x) != 0) + 1
    starts = np.concatenate([[0], change])
    ends = np.concatenate([change - 1, [n - 1]])
    vals = x[starts]
    if vals.size < 3:
        return np.zeros(0, dtype=np.intp), np.zeros(0, dtype=np.intp)
    mid = vals[1:-1]
    is_max = (mid > vals[:-2]) & (mid > vals[2:])
    is_min = (mid < vals[:-2]) & (mid < vals[2:])
    centers = (starts[1:-1] + ends[1:-1]) // 2
    return centers[is_max].astype(np.intp), centers[is_min].astype(np.intp)


def count_zero_crossings(x):
    x = np.asarray(x, dtype=np.float64)
    s = np.sign(x[x != 0])
    return int(np.count_nonzero(s[1:] != s[:-1]))
