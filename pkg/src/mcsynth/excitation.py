"""Excitation generation: pulse trains from f0, seeded Gaussian noise, and
pitch manipulation.

Conventions (not pinned by any standard, fixed here for reproducibility):

* pulse amplitude is ``sqrt(sample_rate / f0)`` so a voiced constant-f0
  region has unit mean power;
* per-sample f0 is linearly interpolated between voiced frame centers,
  with hard transitions at voiced/unvoiced boundaries;
* the pulse phase accumulator resets to 0 at every unvoiced->voiced onset;
* noise comes from numpy's Philox counter-based generator (256-bit
  counter, 128-bit key), so a seed fully determines the signal.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidInputError, InvalidParameterError

# Guard against exact-period f0s landing a hair under an integer phase.
PHASE_TIE_EPS = 1e-9


@dataclass(frozen=True)
class Signal:
    """A uniformly sampled real-valued waveform."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise InvalidInputError("signal samples must be 1-D")
        if not np.all(np.isfinite(samples)):
            raise InvalidInputError(
                f"signal contains non-finite sample at index "
                f"{int(np.argmin(np.isfinite(samples)))}"
            )
        if not float(self.sample_rate) > 0:
            raise InvalidParameterError(f"sample_rate must be > 0, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class F0Track:
    """Per-frame fundamental frequency in Hz; 0 encodes unvoiced."""

    values: np.ndarray
    frame_hop: int
    sample_rate: float

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise InvalidInputError("f0 values must be 1-D")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError(
                f"f0 track contains non-finite value at frame "
                f"{int(np.argmin(np.isfinite(values)))}"
            )
        if np.any(values < 0):
            raise InvalidInputError(
                f"f0 track contains negative value at frame {int(np.argmax(values < 0))}"
            )
        fs = float(self.sample_rate)
        if fs <= 0:
            raise InvalidParameterError(f"sample_rate must be > 0, got {self.sample_rate}")
        if np.any(values >= fs / 2):
            raise InvalidParameterError(
                f"voiced f0 at frame {int(np.argmax(values >= fs / 2))} is not below "
                f"Nyquist ({fs / 2} Hz)"
            )
        if int(self.frame_hop) < 1:
            raise InvalidParameterError(f"frame_hop must be >= 1, got {self.frame_hop}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "frame_hop", int(self.frame_hop))
        object.__setattr__(self, "sample_rate", fs)

    @property
    def num_frames(self) -> int:
        return self.values.shape[0]

    @property
    def total_samples(self) -> int:
        return self.num_frames * self.frame_hop


def f0_per_sample(f0: F0Track, total_len: int) -> np.ndarray:
    """Sample-rate f0 contour: linear between voiced frame centers, hard
    edges at voiced/unvoiced boundaries, 0 in unvoiced regions."""
    if total_len < 0:
        raise InvalidInputError(f"total_len must be >= 0, got {total_len}")
    if total_len > f0.total_samples:
        raise InvalidInputError(
            f"total_len {total_len} exceeds f0 track span {f0.total_samples}"
        )
    hop = f0.frame_hop
    out = np.zeros(total_len)
    voiced = (f0.values > 0).astype(np.int8)
    edges = np.flatnonzero(np.diff(np.concatenate([[0], voiced, [0]])))
    for i, j in zip(edges[::2], edges[1::2]):
        a = i * hop
        b = min(j * hop, total_len)
        if a >= b:
            continue
        centers = (np.arange(i, j) + 0.5) * hop
        out[a:b] = np.interp(np.arange(a, b, dtype=np.float64), centers, f0.values[i:j])
    return out


def pulse_train(f0: F0Track, total_len: int) -> Signal:
    """Generate the periodic excitation for the voiced regions of ``f0``.

    A phase accumulator advances by ``f0(t)/fs`` per sample and a pulse of
    amplitude ``sqrt(fs / f0(t))`` fires at each sample where the phase
    wraps past 1.  Unvoiced samples are zero.
    """
    f0s = f0_per_sample(f0, total_len)
    return Signal(kernels.pulse_train(f0s, f0.sample_rate, PHASE_TIE_EPS), f0.sample_rate)


def gaussian_noise(total_len: int, seed: int, sample_rate: float = 48000.0) -> Signal:
    """I.i.d. standard-normal samples from a Philox-seeded generator."""
    if total_len < 0:
        raise InvalidInputError(f"total_len must be >= 0, got {total_len}")
    gen = np.random.Generator(np.random.Philox(int(seed)))
    return Signal(gen.standard_normal(int(total_len)), sample_rate)


def shift_semitones(f0: F0Track, semitones: float) -> F0Track:
    """Scale voiced f0 values by ``2**(semitones/12)``; unvoiced zeros stay."""
    factor = 2.0 ** (float(semitones) / 12.0)
    shifted = f0.values * factor
    limit = f0.sample_rate / 2
    if np.any(shifted >= limit):
        bad = int(np.argmax(shifted >= limit))
        raise InvalidParameterError(
            f"shift of {semitones} semitones pushes frame {bad} "
            f"({f0.values[bad]} Hz -> {shifted[bad]} Hz) past Nyquist ({limit} Hz)"
        )
    return F0Track(shifted, f0.frame_hop, f0.sample_rate)
