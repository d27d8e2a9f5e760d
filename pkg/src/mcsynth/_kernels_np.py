"""Pure-numpy implementations of the hot kernels.

Selected when numba is unavailable or disabled via MCSYNTH_DISABLE_NUMBA.
Semantics match ``_kernels_nb`` exactly; see that module for the loop
formulations these vectorized forms were derived from.
"""

import numpy as np

BACKEND = "numpy"


def tv_fir_apply(x, taps, seg_len, origin):
    # y[t] = sum_k taps[seg(t), k] * x[t - k + origin], out-of-range x = 0
    T = x.shape[0]
    S, K = taps.shape
    y = np.zeros(T)
    xp = np.concatenate([np.zeros(K), x, np.zeros(K)])
    for s in range(S):
        t0 = s * seg_len
        t1 = min(t0 + seg_len, T)
        if t0 >= t1:
            break
        seg = xp[K + t0 + origin - (K - 1) : K + (t1 - 1) + origin + 1]
        y[t0:t1] = np.convolve(seg, taps[s], mode="valid")
    return y


def tv_fir_input_grad(dy, taps, seg_len, origin):
    # dx[t - k + origin] += dy[t] * taps[seg(t), k]
    T = dy.shape[0]
    S, K = taps.shape
    acc = np.zeros(T + 2 * K)
    for s in range(S):
        t0 = s * seg_len
        t1 = min(t0 + seg_len, T)
        if t0 >= t1:
            break
        cor = np.convolve(dy[t0:t1], taps[s][::-1], mode="full")
        u0 = t0 + origin - (K - 1)
        acc[u0 + K : u0 + K + cor.shape[0]] += cor
    return acc[K : K + T]


def tv_fir_tap_grad(dy, x, n_seg, n_tap, seg_len, origin):
    # G[s, k] = sum_{t in seg s} dy[t] * x[t - k + origin]
    T = dy.shape[0]
    K = n_tap
    xp = np.concatenate([np.zeros(K), x, np.zeros(K)])
    G = np.zeros((n_seg, K))
    for s in range(n_seg):
        t0 = s * seg_len
        t1 = min(t0 + seg_len, T)
        if t0 >= t1:
            break
        q = xp[K + t0 + origin - (K - 1) : K + (t1 - 1) + origin + 1]
        G[s] = np.correlate(dy[t0:t1], q, mode="valid")[::-1]
    return G


def freqt_frames(C, out_order, a):
    # Two-buffer warp recursion, input coefficients consumed highest first,
    # vectorized across frames.
    F, M1 = C.shape
    N = out_order
    out = np.zeros((F, N + 1))
    prev = np.empty_like(out)
    for i in range(M1 - 1, -1, -1):
        prev[:] = out
        out[:, 0] = C[:, i] + a * prev[:, 0]
        if N >= 1:
            out[:, 1] = (1.0 - a * a) * prev[:, 0] + a * prev[:, 1]
        for m in range(2, N + 1):
            out[:, m] = prev[:, m - 1] + a * (prev[:, m] - out[:, m - 1])
    return out


def c2mpir(c, length):
    # Minimum-phase recursion h[n] = (1/n) sum_k k c(k) h[n-k]
    M = c.shape[0] - 1
    h = np.zeros(length)
    h[0] = np.exp(c[0])
    if M == 0:
        return h
    kc = np.arange(1, M + 1) * c[1:]
    for n in range(1, length):
        kmax = min(n, M)
        h[n] = np.dot(kc[:kmax], h[n - kmax : n][::-1]) / n
    return h


def pulse_train(f0s, sample_rate, tie_eps):
    # Phase-accumulator pulse placement over per-sample f0 (0 = unvoiced).
    # A pulse fires where the running phase crosses an integer; the tiny
    # tie_eps keeps exact-period f0 values on their nominal sample.
    T = f0s.shape[0]
    y = np.zeros(T)
    voiced = (f0s > 0.0).astype(np.int8)
    edges = np.flatnonzero(np.diff(np.concatenate([[0], voiced, [0]])))
    for a, b in zip(edges[::2], edges[1::2]):
        cum = np.cumsum(f0s[a:b] / sample_rate)
        k = np.floor(cum + tie_eps)
        hit = k > np.concatenate([[0.0], k[:-1]])
        y[a:b][hit] = np.sqrt(sample_rate / f0s[a:b][hit])
    return y
