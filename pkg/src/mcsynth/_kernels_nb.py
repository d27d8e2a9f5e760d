"""Numba-jitted hot kernels.

All filtering cost concentrates here: the time-variant FIR pass, its two
adjoints, the warp recursion, the minimum-phase recursion, and the pulse
placement loop.  Everything is float64 and single-threaded so runs are
bitwise reproducible.
"""

import numpy as np
from numba import njit

BACKEND = "numba"


@njit(cache=True)
def tv_fir_apply(x, taps, seg_len, origin):
    T = x.shape[0]
    S, K = taps.shape
    y = np.zeros(T)
    for s in range(S):
        t0 = s * seg_len
        t1 = min(t0 + seg_len, T)
        for t in range(t0, t1):
            kmin = t + origin - T + 1
            if kmin < 0:
                kmin = 0
            kmax = t + origin
            if kmax > K - 1:
                kmax = K - 1
            acc = 0.0
            for k in range(kmin, kmax + 1):
                acc += taps[s, k] * x[t - k + origin]
            y[t] = acc
    return y


@njit(cache=True)
def tv_fir_input_grad(dy, taps, seg_len, origin):
    T = dy.shape[0]
    S, K = taps.shape
    dx = np.zeros(T)
    for s in range(S):
        t0 = s * seg_len
        t1 = min(t0 + seg_len, T)
        for t in range(t0, t1):
            g = dy[t]
            kmin = t + origin - T + 1
            if kmin < 0:
                kmin = 0
            kmax = t + origin
            if kmax > K - 1:
                kmax = K - 1
            for k in range(kmin, kmax + 1):
                dx[t - k + origin] += g * taps[s, k]
    return dx


@njit(cache=True)
def tv_fir_tap_grad(dy, x, n_seg, n_tap, seg_len, origin):
    T = dy.shape[0]
    G = np.zeros((n_seg, n_tap))
    for s in range(n_seg):
        t0 = s * seg_len
        t1 = min(t0 + seg_len, T)
        for t in range(t0, t1):
            g = dy[t]
            kmin = t + origin - T + 1
            if kmin < 0:
                kmin = 0
            kmax = t + origin
            if kmax > n_tap - 1:
                kmax = n_tap - 1
            for k in range(kmin, kmax + 1):
                G[s, k] += g * x[t - k + origin]
    return G


@njit(cache=True)
def freqt_frames(C, out_order, a):
    F, M1 = C.shape
    N = out_order
    out = np.zeros((F, N + 1))
    prev = np.zeros(N + 1)
    for f in range(F):
        wc = out[f]
        for m in range(N + 1):
            wc[m] = 0.0
        for i in range(M1 - 1, -1, -1):
            for m in range(N + 1):
                prev[m] = wc[m]
            wc[0] = C[f, i] + a * prev[0]
            if N >= 1:
                wc[1] = (1.0 - a * a) * prev[0] + a * prev[1]
            for m in range(2, N + 1):
                wc[m] = prev[m - 1] + a * (prev[m] - wc[m - 1])
    return out


@njit(cache=True)
def c2mpir(c, length):
    M = c.shape[0] - 1
    h = np.zeros(length)
    h[0] = np.exp(c[0])
    for n in range(1, length):
        kmax = min(n, M)
        acc = 0.0
        for k in range(1, kmax + 1):
            acc += k * c[k] * h[n - k]
        h[n] = acc / n
    return h


@njit(cache=True)
def pulse_train(f0s, sample_rate, tie_eps):
    T = f0s.shape[0]
    y = np.zeros(T)
    phase = 0.0
    prev_k = 0.0
    for t in range(T):
        f = f0s[t]
        if f <= 0.0:
            phase = 0.0
            prev_k = 0.0
        else:
            phase += f / sample_rate
            k = np.floor(phase + tie_eps)
            if k > prev_k:
                y[t] = np.sqrt(sample_rate / f)
                prev_k = k
    return y
