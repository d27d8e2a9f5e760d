"""Time-variant FIR machinery: the exponential synthesis filter realized
as a Maclaurin cascade (or a single minimum-phase FIR), zero-phase
aperiodicity filters, and the full mixed-excitation chain.

The exponential filter ``exp(sum_m c(m) z^-m)`` is evaluated as the
truncated series ``sum_{l=0..L} C^l / l!`` in Horner form,
``s_{k-1} = x + C(s_k)/k``, where ``C`` is a time-variant FIR pass with
taps ``[0, c(1), .., c(N)]``.  The constant ``c(0)`` is applied as a
per-segment scalar gain ``exp(c(0))`` on the cascade output, keeping
``C`` strictly delayed.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .cepstral import CepstralTrack, CoefficientSchedule, freqt, schedule, schedule_adjoint
from .errors import InvalidInputError, InvalidParameterError, InvalidStateError
from .excitation import F0Track, Signal, gaussian_noise, pulse_train

DEFAULT_HALF_TAPS = 256


@dataclass(frozen=True)
class ExpFilterConfig:
    """Settings of the exponential synthesis filter.

    ``cepstrum_order`` is the order N of the warp-0 cepstrum the envelope
    is converted to before filtering; ``maclaurin_order`` is the series
    truncation L.  ``single_fir`` realizes the filter as one long
    minimum-phase FIR of ``ir_length`` taps instead of the L-stage
    cascade (faster per sample, heavier on memory, not differentiable).
    """

    cepstrum_order: int
    maclaurin_order: int = 20
    realization: str = "cascade"
    ir_length: int = 4096
    interp: str = "hold"
    segment_len: int | None = None

    def __post_init__(self):
        if self.cepstrum_order < 0:
            raise InvalidParameterError(f"cepstrum_order must be >= 0, got {self.cepstrum_order}")
        if self.maclaurin_order < 1:
            raise InvalidParameterError(f"maclaurin_order must be >= 1, got {self.maclaurin_order}")
        if self.realization not in ("cascade", "single_fir"):
            raise InvalidParameterError(
                f"realization must be 'cascade' or 'single_fir', got {self.realization!r}"
            )
        if self.realization == "single_fir" and self.ir_length < self.cepstrum_order + 1:
            raise InvalidParameterError(
                f"ir_length {self.ir_length} must be >= cepstrum_order+1 "
                f"({self.cepstrum_order + 1}) for single_fir"
            )
        if self.interp not in ("hold", "linear"):
            raise InvalidParameterError(f"interp must be 'hold' or 'linear', got {self.interp!r}")


@dataclass(frozen=True)
class SynthesisInput:
    """Everything the synthesis chain consumes.

    ``post_filter_a`` / ``post_filter_p`` hook in after the aperiodicity
    and periodicity branches (Signal -> Signal); ``None`` means identity.
    Non-identity hooks are forward-only.
    """

    envelope: CepstralTrack
    aperiodicity: CepstralTrack
    f0: F0Track
    noise_seed: int = 0
    post_filter_a: Callable[[Signal], Signal] | None = None
    post_filter_p: Callable[[Signal], Signal] | None = None

    def __post_init__(self):
        env, ap, f0 = self.envelope, self.aperiodicity, self.f0
        if not (env.num_frames == ap.num_frames == f0.num_frames):
            raise InvalidInputError(
                f"frame counts differ: envelope {env.num_frames}, "
                f"aperiodicity {ap.num_frames}, f0 {f0.num_frames}"
            )
        if not (env.frame_hop == ap.frame_hop == f0.frame_hop):
            raise InvalidInputError("all tracks must share frame_hop")
        if env.warp != ap.warp:
            raise InvalidInputError(
                f"warp differs between envelope ({env.warp}) and aperiodicity ({ap.warp})"
            )


def tv_fir(sched: CoefficientSchedule, signal: Signal, tape=None) -> Signal:
    """Apply per-segment FIR taps: ``y[t] = sum_k h_t[k] x[t - k + origin]``.

    Samples before the signal start (and past its end, for nonzero
    origin) read as zero.
    """
    x = signal.samples
    if sched.total_len != x.shape[0]:
        raise InvalidInputError(
            f"schedule covers {sched.total_len} samples but signal has {x.shape[0]}"
        )
    taps = sched.taps_per_segment
    y = kernels.tv_fir_apply(x, taps, sched.segment_len, sched.origin)
    out = Signal(y, signal.sample_rate)
    if tape is not None:
        n_seg, n_tap = taps.shape
        seg_len, origin = sched.segment_len, sched.origin

        def vjp(dy):
            dx = kernels.tv_fir_input_grad(dy, taps, seg_len, origin)
            dtaps = kernels.tv_fir_tap_grad(dy, x, n_seg, n_tap, seg_len, origin)
            return dx, dtaps

        tape.record("tv_fir", out.samples, (x, taps), vjp)
    return out


def _segment_sums(v: np.ndarray, n_seg: int, seg_len: int) -> np.ndarray:
    offsets = np.arange(n_seg) * seg_len
    return np.add.reduceat(v, offsets)


def _unique_rows(mat: np.ndarray):
    uniq, inverse = np.unique(mat, axis=0, return_inverse=True)
    return uniq, inverse.ravel()


def _cascade(x, csched: CoefficientSchedule, L: int, tape=None):
    """Horner evaluation of the truncated exponential series."""
    C = csched.taps_per_segment
    n_seg = csched.num_segments
    seg_len = csched.segment_len
    T = x.shape[0]
    taps = C.copy()
    taps[:, 0] = 0.0
    gains_seg = np.exp(C[:, 0])
    gains = np.repeat(gains_seg, seg_len)[:T]

    s = x
    saved = [s]  # [s_L, s_{L-1}, .., s_0]
    for k in range(L, 0, -1):
        s = x + kernels.tv_fir_apply(s, taps, seg_len, 0) / k
        saved.append(s)
    y = gains * s

    if tape is not None:
        n_tap = taps.shape[1]

        def vjp(dy):
            s0 = saved[L]
            dgain_seg = _segment_sums(dy * s0, n_seg, seg_len)
            dC = np.zeros_like(C)
            dC[:, 0] = dgain_seg * gains_seg
            g = gains * dy
            du = np.zeros(T)
            for k in range(1, L + 1):
                du += g
                s_k = saved[L - k]
                dC[:, 1:] += kernels.tv_fir_tap_grad(g, s_k, n_seg, n_tap, seg_len, 0)[:, 1:] / k
                g = kernels.tv_fir_input_grad(g, taps, seg_len, 0) / k
            du += g
            return du, dC

        tape.record("exp_cascade", y, (x, C), vjp)
    return y


def _single_fir(x, csched: CoefficientSchedule, ir_length: int):
    uniq, inverse = _unique_rows(csched.taps_per_segment)
    hs = np.stack([kernels.c2mpir(row, ir_length) for row in uniq])
    taps = hs[inverse]
    return kernels.tv_fir_apply(x, taps, csched.segment_len, 0)


def exp_filter(envelope: CepstralTrack, signal: Signal, cfg: ExpFilterConfig, tape=None) -> Signal:
    """Run the input through ``exp(sum c(m) z~^-m)`` under ``envelope``.

    The envelope is converted per frame to a warp-0 cepstrum of order
    ``cfg.cepstrum_order``, scheduled at ``cfg.interp`` granularity, and
    applied via the configured realization.
    """
    x = signal.samples
    if x.shape[0] > envelope.total_samples:
        raise InvalidInputError(
            f"input of {x.shape[0]} samples exceeds envelope span {envelope.total_samples}"
        )
    warp0 = _freqt_taped(envelope, cfg.cepstrum_order, tape)
    csched = _schedule_taped(warp0, x.shape[0], cfg.interp, cfg.segment_len, tape)
    if cfg.realization == "cascade":
        y = _cascade(x, csched, cfg.maclaurin_order, tape)
    else:
        if tape is not None:
            raise InvalidStateError(
                "single_fir realization is forward-only; use the cascade for gradients"
            )
        y = _single_fir(x, csched, cfg.ir_length)
    return Signal(y, signal.sample_rate)


def _freqt_taped(track: CepstralTrack, dst_order: int, tape, dst_warp: float = 0.0):
    out = freqt(track, dst_order, dst_warp)
    if tape is not None:
        from .cepstral import freqt_matrix

        F = freqt_matrix(track.order, dst_order, track.warp, dst_warp)
        tape.record("freqt", out.frames, (track.frames,), lambda dD: (dD @ F,))
    return out


def _schedule_taped(track: CepstralTrack, total_len, interp, segment_len, tape):
    sched = schedule(track, total_len, interp, segment_len)
    if tape is not None:
        nf = track.num_frames
        tape.record(
            "schedule",
            sched.taps_per_segment,
            (track.frames,),
            lambda dT: (schedule_adjoint(sched, nf, dT),),
        )
    return sched


def _next_pow2(n: int) -> int:
    k = 1
    while k < n:
        k *= 2
    return k


def _zp_taper(half_taps: int) -> np.ndarray:
    # Raised-cosine roll-off over the outer 10% of taps against Gibbs ripple.
    tw = np.ones(half_taps + 1)
    n0 = int(np.floor(0.9 * half_taps))
    n = np.arange(n0 + 1, half_taps + 1)
    if n.size:
        tw[n0 + 1 :] = 0.5 * (1.0 + np.cos(np.pi * (n - n0) / (half_taps - n0 + 1)))
    return tw


def _zp_tap_matrix(cep: np.ndarray, half_taps: int, tape=None):
    """Symmetric zero-phase taps from warp-0 cepstra, one row per segment.

    The real response ``exp(c(0) + sum_m c(m) cos(m w))`` is sampled on a
    DFT grid of at least ``8 * half_taps`` points and inverse-transformed
    to ``2*half_taps + 1`` tapered symmetric taps.
    """
    S, n_coef = cep.shape
    H = half_taps
    K = _next_pow2(max(8 * H, 2 * H + 2))
    w = 2.0 * np.pi * np.arange(K // 2 + 1) / K
    B = np.cos(np.outer(w, np.arange(n_coef)))
    tw = _zp_taper(H)

    E = cep @ B.T
    R = np.exp(E)
    r = np.fft.irfft(R, K, axis=1)[:, : H + 1]
    core = r * tw
    taps = np.empty((S, 2 * H + 1))
    taps[:, H:] = core
    taps[:, :H] = core[:, 1:][:, ::-1]
    if tape is None:
        return taps
    irfft_w = np.full(K // 2 + 1, 2.0)
    irfft_w[0] = 1.0
    irfft_w[-1] = 1.0

    def vjp(dtaps):
        dcore = dtaps[:, H:].copy()
        dcore[:, 1:] += dtaps[:, :H][:, ::-1]
        dr = np.zeros((S, K))
        dr[:, : H + 1] = dcore * tw
        dR = (irfft_w / K) * np.fft.rfft(dr, axis=1).real
        dE = R * dR
        return (dE @ B,)

    tape.record("zp_taps", taps, (cep,), vjp)
    return taps


def zero_phase_filter(
    aperiodicity: CepstralTrack,
    signal: Signal,
    half_taps: int = DEFAULT_HALF_TAPS,
    *,
    interp: str = "hold",
    segment_len: int | None = None,
    conversion_order: int | None = None,
    tape=None,
) -> Signal:
    """Filter with the real nonnegative response of the aperiodicity cepstrum.

    Per segment, the track is converted to a warp-0 cepstrum (order
    ``conversion_order``, default ``max(half_taps, 4*order)``), its
    symmetric two-sided form is evaluated as
    ``exp(c(0) + sum_m c(m) cos(m w))`` on a dense DFT grid, and the
    inverse transform yields a ``2*half_taps + 1``-tap centered response
    applied with zero delay.
    """
    x = signal.samples
    if x.shape[0] == 0:
        raise InvalidInputError("zero_phase_filter requires a nonempty signal")
    if half_taps < 1:
        raise InvalidParameterError(f"half_taps must be >= 1, got {half_taps}")
    if conversion_order is None:
        conversion_order = max(half_taps, 4 * aperiodicity.order)
    warp0 = _freqt_taped(aperiodicity, conversion_order, tape)
    csched = _schedule_taped(warp0, x.shape[0], interp, segment_len, tape)
    taps = _zp_tap_matrix(csched.taps_per_segment, half_taps, tape)
    zsched = csched.with_taps(taps, origin=half_taps)
    return tv_fir(zsched, signal, tape)


def _add_signals(a: Signal, b: Signal, tape=None) -> Signal:
    out = Signal(a.samples + b.samples, a.sample_rate)
    if tape is not None:
        tape.record("add", out.samples, (a.samples, b.samples), lambda g: (g, g))
    return out


def _sub_signals(a: Signal, b: Signal, tape=None) -> Signal:
    out = Signal(a.samples - b.samples, a.sample_rate)
    if tape is not None:
        tape.record("sub", out.samples, (a.samples, b.samples), lambda g: (g, -g))
    return out


def mixed_excitation(
    noise: Signal,
    pulses: Signal,
    aperiodicity: CepstralTrack,
    half_taps: int = DEFAULT_HALF_TAPS,
    *,
    interp: str = "hold",
    segment_len: int | None = None,
    tape=None,
) -> Signal:
    """Blend noise and pulses through the complementary zero-phase pair.

    Computed as ``pulses + Ha(noise - pulses)``, algebraically identical
    to ``Ha*noise + (1 - Ha)*pulses`` in a single filter pass; identical
    inputs therefore pass through exactly.
    """
    if len(noise) != len(pulses):
        raise InvalidInputError(
            f"noise ({len(noise)}) and pulses ({len(pulses)}) lengths differ"
        )
    if noise.sample_rate != pulses.sample_rate:
        raise InvalidInputError("noise and pulses sample rates differ")
    diff = _sub_signals(noise, pulses, tape)
    filt = zero_phase_filter(
        aperiodicity, diff, half_taps, interp=interp, segment_len=segment_len, tape=tape
    )
    return _add_signals(pulses, filt, tape)


def synthesize(
    inp: SynthesisInput,
    cfg: ExpFilterConfig,
    half_taps: int = DEFAULT_HALF_TAPS,
    *,
    total_len: int | None = None,
    noise: Signal | None = None,
    pulses: Signal | None = None,
    tape=None,
) -> Signal:
    """Run the full source-filter chain and return the waveform.

    ``exp_filter(envelope, post_a(Ha*noise) + post_p(Hp*pulses))`` with
    ``Hp = 1 - Ha``; identity hooks reduce this to the one-pass mixed
    excitation.  Deterministic given ``inp.noise_seed``.  Explicit
    ``noise``/``pulses`` signals override the generated excitation
    (gradient probes and repeated fitting passes use this).
    """
    T = inp.envelope.total_samples if total_len is None else int(total_len)
    if noise is None:
        noise = gaussian_noise(T, inp.noise_seed, inp.f0.sample_rate)
    if pulses is None:
        pulses = pulse_train(inp.f0, T)
    if len(noise) != T or len(pulses) != T:
        raise InvalidInputError("noise/pulses overrides must cover the synthesis length")
    if tape is not None:
        tape.watch(inp.envelope.frames, "envelope")
        tape.watch(inp.aperiodicity.frames, "aperiodicity")
        tape.watch(noise.samples, "noise")
        tape.watch(pulses.samples, "pulses")
    if inp.post_filter_a is None and inp.post_filter_p is None:
        mixed = mixed_excitation(
            noise,
            pulses,
            inp.aperiodicity,
            half_taps,
            interp=cfg.interp,
            segment_len=cfg.segment_len,
            tape=tape,
        )
    else:
        if tape is not None:
            raise InvalidStateError("gradients require identity post filters")
        post_a = inp.post_filter_a or (lambda s: s)
        post_p = inp.post_filter_p or (lambda s: s)
        ha_noise = zero_phase_filter(
            inp.aperiodicity, noise, half_taps, interp=cfg.interp, segment_len=cfg.segment_len
        )
        ha_pulses = zero_phase_filter(
            inp.aperiodicity, pulses, half_taps, interp=cfg.interp, segment_len=cfg.segment_len
        )
        hp_pulses = _sub_signals(pulses, ha_pulses)
        mixed = _add_signals(post_a(ha_noise), post_p(hp_pulses))
    return exp_filter(inp.envelope, mixed, cfg, tape)
