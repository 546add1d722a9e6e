# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sequential kernels: LSTM recurrence and extrema scanning."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, tanh

cnp.import_array()


cdef inline double _sigmoid(double z) nogil:
    if z >= 0:
        return 1.0 / (1.0 + exp(-z))
    cdef double e = exp(z)
    return e / (1.0 + e)


def lstm_forward(const double[:, :, ::1] xw, const double[:, ::1] wh):
    """Run the recurrence given input projections ``xw`` (B, T, 4H)."""
    cdef Py_ssize_t B = xw.shape[0], T = xw.shape[1], G = xw.shape[2]
    cdef Py_ssize_t H = G // 4
    h_arr = np.zeros((B, T, H))
    c_arr = np.zeros((B, T, H))
    g_arr = np.zeros((B, T, G))
    cdef double[:, :, ::1] h = h_arr
    cdef double[:, :, ::1] c = c_arr
    cdef double[:, :, ::1] gates = g_arr
    cdef Py_ssize_t b, t, j, k
    cdef double z, hp, cp, ig, fg, gg, og
    with nogil:
        for b in range(B):
            for t in range(T):
                for j in range(G):
                    z = xw[b, t, j]
                    if t > 0:
                        for k in range(H):
                            z = z + h[b, t - 1, k] * wh[k, j]
                    if j >= 2 * H and j < 3 * H:
                        gates[b, t, j] = tanh(z)
                    else:
                        gates[b, t, j] = _sigmoid(z)
                for j in range(H):
                    ig = gates[b, t, j]
                    fg = gates[b, t, H + j]
                    gg = gates[b, t, 2 * H + j]
                    og = gates[b, t, 3 * H + j]
                    cp = c[b, t - 1, j] if t > 0 else 0.0
                    c[b, t, j] = fg * cp + ig * gg
                    h[b, t, j] = og * tanh(c[b, t, j])
    return h_arr, c_arr, g_arr


def lstm_backward(const double[:, :, ::1] dh, const double[:, ::1] wh,
                  const double[:, :, ::1] h, const double[:, :, ::1] c,
                  const double[:, :, ::1] gates):
    """Backpropagate through time; returns (d_xw, d_wh)."""
    cdef Py_ssize_t B = dh.shape[0], T = dh.shape[1], H = dh.shape[2]
    cdef Py_ssize_t G = 4 * H
    dxw_arr = np.zeros((B, T, G))
    dwh_arr = np.zeros((H, G))
    dhn_arr = np.zeros(H)
    dcn_arr = np.zeros(H)
    cdef double[:, :, ::1] dxw = dxw_arr
    cdef double[:, ::1] dwh = dwh_arr
    cdef double[::1] dh_next = dhn_arr
    cdef double[::1] dc_next = dcn_arr
    cdef Py_ssize_t b, t, j, k
    cdef double dht, tc, ig, fg, gg, og, dc, cp, acc
    with nogil:
        for b in range(B):
            for j in range(H):
                dh_next[j] = 0.0
                dc_next[j] = 0.0
            for t in range(T - 1, -1, -1):
                for j in range(H):
                    ig = gates[b, t, j]
                    fg = gates[b, t, H + j]
                    gg = gates[b, t, 2 * H + j]
                    og = gates[b, t, 3 * H + j]
                    tc = tanh(c[b, t, j])
                    dht = dh[b, t, j] + dh_next[j]
                    dc = dc_next[j] + dht * og * (1.0 - tc * tc)
                    cp = c[b, t - 1, j] if t > 0 else 0.0
                    dxw[b, t, j] = dc * gg * ig * (1.0 - ig)
                    dxw[b, t, H + j] = dc * cp * fg * (1.0 - fg)
                    dxw[b, t, 2 * H + j] = dc * ig * (1.0 - gg * gg)
                    dxw[b, t, 3 * H + j] = dht * tc * og * (1.0 - og)
                    dc_next[j] = dc * fg
                for k in range(H):
                    acc = 0.0
                    for j in range(G):
                        acc = acc + dxw[b, t, j] * wh[k, j]
                        if t > 0:
                            dwh[k, j] += h[b, t - 1, k] * dxw[b, t, j]
                    dh_next[k] = acc
    return dxw_arr, dwh_arr


def find_extrema(const double[::1] x):
    """Indices of strict local maxima and minima; flat plateaus report their middle."""
    cdef Py_ssize_t n = x.shape[0]
    maxima = []
    minima = []
    cdef Py_ssize_t i = 1, j
    cdef double left, right
    while i < n - 1:
        if x[i] == x[i - 1]:
            i += 1
            continue
        j = i
        while j < n - 1 and x[j + 1] == x[i]:
            j += 1
        if j >= n - 1:
            break
        left = x[i - 1]
        right = x[j + 1]
        if x[i] > left and x[i] > right:
            maxima.append((i + j) // 2)
        elif x[i] < left and x[i] < right:
            minima.append((i + j) // 2)
        i = j + 1
    return np.asarray(maxima, dtype=np.intp), np.asarray(minima, dtype=np.intp)


def count_zero_crossings(const double[::1] x):
    cdef Py_ssize_t n = x.shape[0], i
    cdef Py_ssize_t count = 0
    cdef double prev = 0.0
    cdef bint have_prev = False
    with nogil:
        for i in range(n):
            if x[i] == 0.0:
                continue
            if have_prev and (x[i] > 0) != (prev > 0):
                count += 1
            prev = x[i]
            have_prev = True
    return count
