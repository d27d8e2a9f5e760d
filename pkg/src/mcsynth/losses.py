"""STFT analysis and the multi-resolution STFT waveform loss.

Total loss over ``S`` analysis conditions is
``(1/2S) * sum_s (sc_s + mag_s)`` where ``sc`` is the Frobenius-relative
magnitude-spectrogram distance and ``mag`` the normalized L1 log-magnitude
distance.  Frames are Hann-windowed and centered via reflect padding; the
log is stabilized with a 1e-7 floor and normalized by element count,
neither of which is pinned by convention elsewhere.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidInputError, InvalidParameterError, UndefinedReferenceError
from .excitation import Signal

LOG_EPS = 1e-7

DEFAULT_WINDOW_LENGTHS = (600, 1200, 2400)
DEFAULT_HOP_FRACTION = 0.2  # 80% overlap


@dataclass(frozen=True)
class StftConfig:
    """One STFT analysis condition."""

    window_len: int
    hop: int
    fft_size: int
    window: str = "hann"

    def __post_init__(self):
        if self.window_len < 1:
            raise InvalidParameterError(f"window_len must be >= 1, got {self.window_len}")
        if self.hop < 1:
            raise InvalidParameterError(f"hop must be >= 1, got {self.hop}")
        if self.fft_size < self.window_len:
            raise InvalidParameterError(
                f"fft_size {self.fft_size} must be >= window_len {self.window_len}"
            )
        if self.fft_size & (self.fft_size - 1):
            raise InvalidParameterError(f"fft_size must be a power of two, got {self.fft_size}")
        if self.window != "hann":
            raise InvalidParameterError(f"only the hann window is supported, got {self.window!r}")

    @property
    def bins(self) -> int:
        return self.fft_size // 2 + 1


@dataclass(frozen=True)
class LossReport:
    """Total multi-resolution loss plus per-resolution (sc, mag) parts."""

    total: float
    per_resolution: tuple

    def __post_init__(self):
        object.__setattr__(self, "per_resolution", tuple(map(tuple, self.per_resolution)))


def default_stft_configs() -> tuple[StftConfig, ...]:
    """Three resolutions: windows 600/1200/2400, 80% overlap, pow2 FFT."""
    configs = []
    for win in DEFAULT_WINDOW_LENGTHS:
        fft = 1
        while fft < win:
            fft *= 2
        configs.append(StftConfig(win, int(round(win * DEFAULT_HOP_FRACTION)), fft))
    return tuple(configs)


def _hann(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def _frame(x: np.ndarray, cfg: StftConfig) -> np.ndarray:
    pad = cfg.window_len // 2
    xp = np.pad(x, pad, mode="reflect")
    n_frames = 1 + (xp.shape[0] - cfg.window_len) // cfg.hop
    return sliding_window_view(xp, cfg.window_len)[:: cfg.hop][:n_frames]


def stft_complex(x: np.ndarray, cfg: StftConfig) -> np.ndarray:
    """One-sided complex STFT, frames centered by reflect padding."""
    if x.shape[0] < cfg.window_len:
        raise InvalidInputError(
            f"signal of {x.shape[0]} samples is shorter than one window ({cfg.window_len})"
        )
    frames = _frame(x, cfg) * _hann(cfg.window_len)
    return np.fft.rfft(frames, cfg.fft_size, axis=1)


def stft_adjoint(dX: np.ndarray, cfg: StftConfig, x_len: int) -> np.ndarray:
    """Adjoint of :func:`stft_complex` under the real inner product
    ``<X, Y> = sum Re(X)Re(Y) + Im(X)Im(Y)``."""
    pad = cfg.window_len // 2
    xp_len = x_len + 2 * pad
    G = dX.copy()
    G[:, 1:-1] *= 0.5
    v = np.fft.irfft(G, cfg.fft_size, axis=1) * cfg.fft_size
    v = v[:, : cfg.window_len] * _hann(cfg.window_len)
    dxp = np.zeros(xp_len)
    hop = cfg.hop
    for f in range(v.shape[0]):
        dxp[f * hop : f * hop + cfg.window_len] += v[f]
    dx = dxp[pad : pad + x_len].copy()
    if pad:
        dx[1 : pad + 1] += dxp[:pad][::-1]
        dx[x_len - pad - 1 : x_len - 1] += dxp[pad + x_len :][::-1]
    return dx


def stft_magnitude(x: Signal, cfg: StftConfig) -> np.ndarray:
    """Magnitude spectrogram, shape (frames, fft_size//2 + 1)."""
    return np.abs(stft_complex(x.samples, cfg))


def _check_pair(x: Signal, xhat: Signal):
    if len(x) != len(xhat):
        raise InvalidInputError(f"signal lengths differ: {len(x)} vs {len(xhat)}")
    if x.sample_rate != xhat.sample_rate:
        raise InvalidInputError(
            f"sample rates differ: {x.sample_rate} vs {xhat.sample_rate}"
        )


def spectral_convergence(x: Signal, xhat: Signal, cfg: StftConfig) -> float:
    """``||A(x) - A(xhat)||_F / ||A(x)||_F``."""
    _check_pair(x, xhat)
    ref = stft_magnitude(x, cfg)
    ref_norm = np.linalg.norm(ref)
    if ref_norm == 0.0:
        raise UndefinedReferenceError("spectral convergence is undefined for a zero reference")
    return float(np.linalg.norm(ref - stft_magnitude(xhat, cfg)) / ref_norm)


def log_magnitude_loss(x: Signal, xhat: Signal, cfg: StftConfig) -> float:
    """Mean absolute log-magnitude distance with a ``1e-7`` floor."""
    _check_pair(x, xhat)
    ref = stft_magnitude(x, cfg)
    est = stft_magnitude(xhat, cfg)
    return float(np.sum(np.abs(np.log(ref + LOG_EPS) - np.log(est + LOG_EPS))) / ref.size)


def multi_res_stft_loss(
    x: Signal,
    xhat: Signal,
    configs: tuple[StftConfig, ...] | None = None,
    tape=None,
) -> LossReport:
    """Multi-resolution STFT loss between reference ``x`` and estimate ``xhat``.

    When a tape is given, records the gradient of the total with respect
    to the estimate's samples.
    """
    if configs is None:
        configs = default_stft_configs()
    configs = tuple(configs)
    if not configs:
        raise InvalidParameterError("at least one STFT configuration is required")
    _check_pair(x, xhat)

    n_res = len(configs)
    parts = []
    saved = []
    for cfg in configs:
        ref = np.abs(stft_complex(x.samples, cfg))
        ref_norm = np.linalg.norm(ref)
        if ref_norm == 0.0:
            raise UndefinedReferenceError(
                "spectral convergence is undefined for a zero reference"
            )
        X = stft_complex(xhat.samples, cfg)
        est = np.abs(X)
        diff_norm = np.linalg.norm(ref - est)
        sc = float(diff_norm / ref_norm)
        log_diff = np.log(est + LOG_EPS) - np.log(ref + LOG_EPS)
        mag = float(np.sum(np.abs(log_diff)) / ref.size)
        parts.append((sc, mag))
        if tape is not None:
            saved.append((cfg, X, est, ref, ref_norm, diff_norm, np.sign(log_diff)))

    total = float(sum(sc + mag for sc, mag in parts) / (2.0 * n_res))
    report = LossReport(total, tuple(parts))

    if tape is not None:
        x_len = len(xhat)
        total_var = np.float64(total)

        def vjp(upstream):
            dx = np.zeros(x_len)
            for cfg, X, est, ref, ref_norm, diff_norm, mag_sign in saved:
                dA = mag_sign / (ref.size * (est + LOG_EPS))
                if diff_norm > 0.0:
                    dA = dA + (est - ref) / (diff_norm * ref_norm)
                dA *= float(upstream) / (2.0 * n_res)
                safe = np.where(est > 0.0, est, 1.0)
                dX = np.where(est > 0.0, dA / safe, 0.0) * X
                dx += stft_adjoint(dX, cfg, x_len)
            return (dx,)

        tape.record("mr_stft_loss", total_var, (xhat.samples,), vjp)
        tape.watch(total_var, "loss")

    return report
