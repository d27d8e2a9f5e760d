"""Cepstrum algebra: frequency warping, impulse-response conversion, and
frame-to-sample coefficient scheduling.

A cepstral frame ``c(0..M)`` at warp ``alpha`` models the log spectral
envelope ``sum_m c(m) exp(-j m beta(w))`` where ``beta`` is the phase of
the first-order all-pass ``(z^-1 - alpha) / (1 - alpha z^-1)``.  All
arithmetic is float64.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import InvalidInputError, InvalidParameterError


def _as_float64(a, name):
    out = np.ascontiguousarray(a, dtype=np.float64)
    if not np.all(np.isfinite(out)):
        bad = np.argwhere(~np.isfinite(out))
        raise InvalidInputError(f"{name} contains non-finite value at index {tuple(bad[0])}")
    return out


@dataclass(frozen=True)
class CepstralTrack:
    """Per-frame cepstral coefficient vectors with a shared warp parameter.

    Parameters
    ----------
    frames : ndarray [shape=(num_frames, order+1)]
        Coefficient vectors, one row per frame.
    warp : float in (-1, 1)
        Frequency warping parameter of the all-pass axis the
        coefficients live on (0 = linear frequency).
    frame_hop : int >= 1
        Samples between consecutive frames.
    """

    frames: np.ndarray
    warp: float
    frame_hop: int

    def __post_init__(self):
        frames = _as_float64(self.frames, "cepstral frames")
        if frames.ndim != 2 or frames.shape[1] < 1:
            raise InvalidInputError("cepstral frames must be a (num_frames, order+1) array")
        if not -1.0 < float(self.warp) < 1.0:
            raise InvalidParameterError(f"|warp| must be < 1, got {self.warp}")
        if int(self.frame_hop) < 1:
            raise InvalidParameterError(f"frame_hop must be >= 1, got {self.frame_hop}")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "warp", float(self.warp))
        object.__setattr__(self, "frame_hop", int(self.frame_hop))

    @property
    def order(self) -> int:
        return self.frames.shape[1] - 1

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def total_samples(self) -> int:
        return self.num_frames * self.frame_hop

    def with_frames(self, frames) -> "CepstralTrack":
        return CepstralTrack(frames, self.warp, self.frame_hop)

    def with_warp(self, warp) -> "CepstralTrack":
        """Reinterpret the same coefficients at a different warp."""
        return CepstralTrack(self.frames, warp, self.frame_hop)


@dataclass(frozen=True)
class ImpulseResponse:
    """FIR taps with an origin index (0 = causal, center = zero-phase)."""

    taps: np.ndarray
    origin_index: int = 0

    def __post_init__(self):
        taps = _as_float64(self.taps, "impulse response taps")
        if taps.ndim != 1:
            raise InvalidInputError("impulse response taps must be 1-D")
        if not 0 <= int(self.origin_index) < taps.shape[0]:
            raise InvalidParameterError("origin_index out of range")
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "origin_index", int(self.origin_index))


@dataclass(frozen=True)
class CoefficientSchedule:
    """Per-segment coefficient vectors derived from a track.

    ``taps_per_segment[s]`` applies to samples
    ``[s * segment_len, min((s+1) * segment_len, total_len))``.
    ``blend_lo/hi/weight`` record which source frames each segment mixes,
    so linear maps through the schedule have an exact adjoint.
    """

    taps_per_segment: np.ndarray
    segment_len: int
    total_len: int
    origin: int = 0
    blend_lo: np.ndarray = field(default=None, repr=False)
    blend_hi: np.ndarray = field(default=None, repr=False)
    blend_weight: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        taps = _as_float64(self.taps_per_segment, "schedule taps")
        if taps.ndim != 2:
            raise InvalidInputError("taps_per_segment must be 2-D")
        seg_len = int(self.segment_len)
        total = int(self.total_len)
        if seg_len < 1 or total < 1:
            raise InvalidParameterError("segment_len and total_len must be >= 1")
        if -(-total // seg_len) != taps.shape[0]:
            raise InvalidInputError(
                f"expected ceil({total}/{seg_len}) = {-(-total // seg_len)} segments, "
                f"got {taps.shape[0]}"
            )
        object.__setattr__(self, "taps_per_segment", taps)
        object.__setattr__(self, "segment_len", seg_len)
        object.__setattr__(self, "total_len", total)
        object.__setattr__(self, "origin", int(self.origin))

    @property
    def num_segments(self) -> int:
        return self.taps_per_segment.shape[0]

    def with_taps(self, taps, origin=None) -> "CoefficientSchedule":
        return CoefficientSchedule(
            taps,
            self.segment_len,
            self.total_len,
            self.origin if origin is None else origin,
            self.blend_lo,
            self.blend_hi,
            self.blend_weight,
        )


def effective_warp(src_warp: float, dst_warp: float) -> float:
    """Warp parameter of the all-pass composition taking ``src`` to ``dst``."""
    return (dst_warp - src_warp) / (1.0 - src_warp * dst_warp)


def freqt(src: CepstralTrack, dst_order: int, dst_warp: float) -> CepstralTrack:
    """Re-express a cepstral track on a different warped frequency axis.

    Each frame is transformed independently by the all-pass substitution
    with effective warp ``(dst_warp - src.warp) / (1 - src.warp*dst_warp)``
    using the classical two-buffer recursion.  The transform is linear in
    the coefficients and exact for the coefficients it keeps; accuracy of
    the truncated representation grows with ``dst_order``.

    Parameters
    ----------
    src : CepstralTrack
    dst_order : int >= 0
        Order of the output track.
    dst_warp : float in (-1, 1)

    Returns
    -------
    CepstralTrack at ``dst_warp`` with ``dst_order + 1`` coefficients.
    """
    if not -1.0 < dst_warp < 1.0:
        raise InvalidParameterError(f"|dst_warp| must be < 1, got {dst_warp}")
    if dst_order < 0:
        raise InvalidParameterError(f"dst_order must be >= 0, got {dst_order}")
    a = effective_warp(src.warp, dst_warp)
    if a == 0.0:
        out = np.zeros((src.num_frames, dst_order + 1))
        keep = min(src.order, dst_order) + 1
        out[:, :keep] = src.frames[:, :keep]
    else:
        out = kernels.freqt_frames(src.frames, dst_order, a)
    return CepstralTrack(out, dst_warp, src.frame_hop)


@lru_cache(maxsize=64)
def _freqt_matrix_cached(src_order: int, dst_order: int, a: float) -> np.ndarray:
    basis = np.eye(src_order + 1)
    if a == 0.0:
        mat_t = np.zeros((src_order + 1, dst_order + 1))
        keep = min(src_order, dst_order) + 1
        mat_t[:keep, :keep] = np.eye(keep)
    else:
        mat_t = kernels.freqt_frames(basis, dst_order, a)
    mat = np.ascontiguousarray(mat_t.T)
    mat.setflags(write=False)
    return mat


def freqt_matrix(src_order: int, dst_order: int, src_warp: float, dst_warp: float) -> np.ndarray:
    """Explicit matrix ``F`` with ``freqt(c) == F @ c`` (read-only, cached)."""
    a = effective_warp(float(src_warp), float(dst_warp))
    return _freqt_matrix_cached(int(src_order), int(dst_order), float(a))


def c2mpir(frame, ir_length: int, *, warp: float = 0.0) -> ImpulseResponse:
    """Convert a linear-frequency cepstrum to a minimum-phase impulse response.

    Uses the causal recursion ``h[0] = exp(c(0))``,
    ``h[n] = (1/n) sum_{k=1..min(n,M)} k c(k) h[n-k]``.  The input must be
    at warp 0; apply :func:`freqt` first for warped tracks.
    """
    if warp != 0.0:
        raise InvalidParameterError("c2mpir requires a warp-0 cepstrum; apply freqt first")
    if ir_length < 1:
        raise InvalidParameterError(f"ir_length must be >= 1, got {ir_length}")
    c = _as_float64(np.atleast_1d(frame), "cepstrum frame")
    if c.ndim != 1:
        raise InvalidInputError("c2mpir expects a single cepstrum vector")
    return ImpulseResponse(kernels.c2mpir(c, int(ir_length)), 0)


def schedule(
    track: CepstralTrack,
    total_len: int,
    interp: str = "hold",
    segment_len: int | None = None,
) -> CoefficientSchedule:
    """Expand a frame-rate track into per-segment coefficient vectors.

    ``hold`` emits one segment per frame (``segment_len = frame_hop``).
    ``linear`` interpolates coefficients between frame centers at
    ``segment_len`` granularity (default ``frame_hop // 4``), clamped at
    the ends.  Interpolation happens on the coefficients themselves, not
    on any derived taps.
    """
    if track.num_frames == 0:
        raise InvalidInputError("cannot schedule an empty track")
    if interp not in ("hold", "linear"):
        raise InvalidParameterError(f"interp must be 'hold' or 'linear', got {interp!r}")
    if total_len < 1:
        raise InvalidInputError(f"total_len must be >= 1, got {total_len}")
    if total_len > track.total_samples:
        raise InvalidInputError(
            f"total_len {total_len} exceeds track span {track.total_samples}"
        )
    hop = track.frame_hop
    nframes = track.num_frames
    if interp == "hold":
        seg_len = hop
        nseg = -(-total_len // seg_len)
        lo = np.arange(nseg)
        hi = lo.copy()
        w = np.zeros(nseg)
    else:
        seg_len = segment_len if segment_len is not None else max(1, hop // 4)
        if seg_len < 1:
            raise InvalidParameterError(f"segment_len must be >= 1, got {seg_len}")
        nseg = -(-total_len // seg_len)
        centers = np.minimum((np.arange(nseg) + 0.5) * seg_len, total_len - 0.5)
        pos = np.clip(centers / hop - 0.5, 0.0, nframes - 1.0)
        lo = np.minimum(pos.astype(np.int64), max(nframes - 2, 0))
        hi = np.minimum(lo + 1, nframes - 1)
        w = pos - lo
    taps = (1.0 - w)[:, None] * track.frames[lo] + w[:, None] * track.frames[hi]
    return CoefficientSchedule(taps, seg_len, total_len, 0, lo, hi, w)


def schedule_adjoint(sched: CoefficientSchedule, num_frames: int, dtaps: np.ndarray) -> np.ndarray:
    """Adjoint of the frame->segment blend recorded in ``sched``."""
    D = sched.taps_per_segment.shape[1]
    out = np.zeros((num_frames, D))
    w = sched.blend_weight[:, None]
    np.add.at(out, sched.blend_lo, (1.0 - w) * dtaps)
    np.add.at(out, sched.blend_hi, w * dtaps)
    return out
