import numpy as np
import pytest

from mcsynth import (
    CepstralTrack,
    CoefficientSchedule,
    ExpFilterConfig,
    F0Track,
    InvalidInputError,
    InvalidParameterError,
    Signal,
    SynthesisInput,
    exp_filter,
    gaussian_noise,
    mixed_excitation,
    pulse_train,
    stft_magnitude,
    StftConfig,
    synthesize,
    tv_fir,
    zero_phase_filter,
)
from oracles import (
    decaying_frames,
    naive_tv_fir,
    power_sum_filter,
    symmetric_tap_gain,
    zero_phase_log_gain,
)

FS = 48000.0
ALPHA = 0.55


def make_schedule(taps, seg_len, total):
    return CoefficientSchedule(np.atleast_2d(np.asarray(taps, float)), seg_len, total)


class TestTvFir:
    def test_identity_taps(self, rng):
        x = rng.normal(size=32)
        sched = make_schedule(np.ones((4, 1)), 8, 32)
        np.testing.assert_array_equal(tv_fir(sched, Signal(x, FS)).samples, x)

    def test_unit_delay(self):
        sched = make_schedule([[0.0, 1.0]], 3, 3)
        out = tv_fir(sched, Signal(np.array([1.0, 2.0, 3.0]), FS))
        np.testing.assert_array_equal(out.samples, [0.0, 1.0, 2.0])

    def test_time_invariant_matches_full_convolution(self, rng):
        x = rng.normal(size=256)
        taps = rng.normal(size=9)
        sched = make_schedule(np.tile(taps, (4, 1)), 64, 256)
        out = tv_fir(sched, Signal(x, FS)).samples
        ref = np.convolve(x, taps)[:256]
        assert np.max(np.abs(out - ref)) < 1e-12

    def test_time_variant_matches_naive_loop(self, rng):
        x = rng.normal(size=100)
        taps = rng.normal(size=(7, 5))
        sched = make_schedule(taps, 15, 100)
        out = tv_fir(sched, Signal(x, FS)).samples
        np.testing.assert_allclose(out, naive_tv_fir(x, taps, 15), atol=1e-13)

    def test_centered_origin_matches_naive_loop(self, rng):
        x = rng.normal(size=64)
        taps = rng.normal(size=(2, 7))
        sched = CoefficientSchedule(taps, 32, 64, origin=3)
        out = tv_fir(sched, Signal(x, FS)).samples
        np.testing.assert_allclose(out, naive_tv_fir(x, taps, 32, origin=3), atol=1e-13)

    def test_length_mismatch_rejected(self, rng):
        sched = make_schedule(np.ones((1, 1)), 8, 8)
        with pytest.raises(InvalidInputError):
            tv_fir(sched, Signal(rng.normal(size=9), FS))


def invariant_envelope(coeffs, frames, hop):
    return CepstralTrack(np.tile(coeffs, (frames, 1)), 0.0, hop)


class TestExpFilter:
    def test_zero_envelope_is_identity(self, rng):
        x = rng.normal(size=512)
        env = invariant_envelope(np.zeros(9), 4, 128)
        cfg = ExpFilterConfig(cepstrum_order=8)
        out = exp_filter(env, Signal(x, FS), cfg).samples
        np.testing.assert_allclose(out, x, atol=1e-15)

    def test_pure_gain(self, rng):
        g = 0.37
        coeffs = np.zeros(6)
        coeffs[0] = g
        env = invariant_envelope(coeffs, 4, 128)
        x = rng.normal(size=512)
        out = exp_filter(env, Signal(x, FS), ExpFilterConfig(cepstrum_order=5)).samples
        np.testing.assert_allclose(out, np.exp(g) * x, rtol=1e-12)

    def _unit_norm_cepstrum(self, rng, order=24):
        c = rng.normal(scale=0.2, size=order + 1)
        c[0] = 0.0
        c /= max(1.0, np.sum(np.abs(c[1:])))
        return c

    def test_cascade_response_matches_exact_exponential(self, rng):
        # steady-state response of the L=20 cascade vs exp of the spectrum
        c = self._unit_norm_cepstrum(rng)
        env = invariant_envelope(c, 1, 1024)
        cfg = ExpFilterConfig(cepstrum_order=24, maclaurin_order=20)
        impulse = np.zeros(1024)
        impulse[0] = 1.0
        ir = exp_filter(env, Signal(impulse, FS), cfg).samples
        grid = 8192
        omega = 2 * np.pi * np.arange(grid // 2 + 1) / grid
        response = np.fft.rfft(ir, grid)
        exact = np.exp(sum(cm * np.exp(-1j * omega * m) for m, cm in enumerate(c)))
        assert np.max(np.abs(response - exact) / np.abs(exact)) < 1e-10

    def test_cascade_matches_single_fir(self, rng):
        c = self._unit_norm_cepstrum(rng)
        env = invariant_envelope(c, 8, 1024)
        x = rng.normal(size=8192)
        casc = exp_filter(env, Signal(x, FS), ExpFilterConfig(24, 20, "cascade")).samples
        fir = exp_filter(env, Signal(x, FS), ExpFilterConfig(24, 20, "single_fir", 4096)).samples
        assert np.max(np.abs(casc - fir)) < 1e-8

    def test_horner_equals_power_sum(self, rng):
        # literal series oracle on a small time-invariant instance
        c = rng.normal(scale=0.3, size=5)
        env = invariant_envelope(c, 1, 64)
        x = rng.normal(size=64)
        for L in (1, 3, 7):
            out = exp_filter(env, Signal(x, FS), ExpFilterConfig(4, L)).samples
            taps_row = np.concatenate([[0.0], c[1:]])
            ref = np.exp(c[0]) * power_sum_filter(x, taps_row, L)
            assert np.max(np.abs(out - ref)) < 1e-12

    def test_linear_in_input(self, rng):
        env = CepstralTrack(decaying_frames(rng, 4, 8), ALPHA, 64)
        cfg = ExpFilterConfig(cepstrum_order=32)
        x1, x2 = rng.normal(size=(2, 256))
        a, b = 1.7, -0.3
        f = lambda x: exp_filter(env, Signal(x, FS), cfg).samples
        np.testing.assert_allclose(f(a * x1 + b * x2), a * f(x1) + b * f(x2), atol=1e-12)

    def test_overlong_input_rejected(self, rng):
        env = invariant_envelope(np.zeros(3), 2, 64)
        with pytest.raises(InvalidInputError):
            exp_filter(env, Signal(rng.normal(size=129), FS), ExpFilterConfig(2))

    def test_config_validation(self):
        with pytest.raises(InvalidParameterError):
            ExpFilterConfig(cepstrum_order=8, maclaurin_order=0)
        with pytest.raises(InvalidParameterError):
            ExpFilterConfig(cepstrum_order=8, realization="iir")
        with pytest.raises(InvalidParameterError):
            ExpFilterConfig(cepstrum_order=8, realization="single_fir", ir_length=4)
        with pytest.raises(InvalidParameterError):
            ExpFilterConfig(cepstrum_order=8, interp="spline")


class TestZeroPhase:
    def test_zero_cepstrum_is_unity(self, rng):
        ap = CepstralTrack(np.zeros((4, 5)), ALPHA, 64)
        x = rng.normal(size=256)
        out = zero_phase_filter(ap, Signal(x, FS), 64).samples
        assert np.max(np.abs(out - x)) < 1e-10

    def test_impulse_response_symmetric(self, rng):
        ap = CepstralTrack(decaying_frames(rng, 1, 6, scale=0.3), ALPHA, 1024)
        pos = 512
        impulse = np.zeros(1024)
        impulse[pos] = 1.0
        out = zero_phase_filter(ap, Signal(impulse, FS), 128).samples
        left = out[pos - 128 : pos][::-1]
        right = out[pos + 1 : pos + 129]
        assert np.max(np.abs(left - right)) < 1e-12

    def test_log_gain_matches_warped_axis_oracle(self, rng):
        half = 256
        for _ in range(5):
            coeffs = decaying_frames(rng, 1, 24, scale=0.3)[0]
            ap = CepstralTrack(coeffs[None, :], ALPHA, 4096)
            impulse = np.zeros(4096)
            impulse[2048] = 1.0
            taps = zero_phase_filter(ap, Signal(impulse, FS), half).samples[
                2048 - half : 2048 + half + 1
            ]
            omega = np.linspace(0.0, np.pi, 1001)
            measured = np.log(symmetric_tap_gain(taps, omega))
            expected = zero_phase_log_gain(coeffs, omega, ALPHA)
            assert np.max(np.abs(measured - expected)) < 1e-4

    def test_zero_group_delay(self, rng):
        ap = CepstralTrack(decaying_frames(rng, 1, 8, scale=0.4), ALPHA, 4096)
        x = rng.normal(size=4096)
        y = zero_phase_filter(ap, Signal(x, FS), 64).samples
        lags = np.arange(-8, 9)
        corr = [np.dot(x, np.roll(y, -k)) for k in lags]
        assert lags[int(np.argmax(corr))] == 0

    def test_parameter_validation(self, rng):
        ap = CepstralTrack(np.zeros((1, 2)), ALPHA, 16)
        with pytest.raises(InvalidParameterError):
            zero_phase_filter(ap, Signal(rng.normal(size=16), FS), 0)
        with pytest.raises(InvalidInputError):
            zero_phase_filter(ap, Signal(np.zeros(0), FS), 8)


class TestMixedExcitation:
    def test_identical_inputs_pass_through_exactly(self, rng):
        ap = CepstralTrack(decaying_frames(rng, 4, 6), ALPHA, 64)
        e = rng.normal(size=256)
        out = mixed_excitation(Signal(e, FS), Signal(e, FS), ap, 32).samples
        assert np.max(np.abs(out - e)) < 1e-12

    def test_zero_aperiodicity_routes_noise(self, rng):
        ap = CepstralTrack(np.zeros((4, 6)), ALPHA, 64)
        noise = rng.normal(size=256)
        pulses = rng.normal(size=256)
        out = mixed_excitation(Signal(noise, FS), Signal(pulses, FS), ap, 64).samples
        assert np.max(np.abs(out - noise)) < 1e-10

    def test_one_pass_matches_two_pass_oracle(self, rng):
        half = 64
        ap = CepstralTrack(decaying_frames(rng, 2, 6, scale=0.3), ALPHA, 128)
        noise = rng.normal(size=256)
        pulses = rng.normal(size=256)
        out = mixed_excitation(Signal(noise, FS), Signal(pulses, FS), ap, half).samples
        # two-pass form: Ha*noise + Hp*pulses where the Hp taps are the
        # complementary response delta - Ha
        ha_noise = zero_phase_filter(ap, Signal(noise, FS), half).samples
        ha_pulses = zero_phase_filter(ap, Signal(pulses, FS), half).samples
        two_pass = ha_noise + (pulses - ha_pulses)
        assert np.max(np.abs(out - two_pass)) < 1e-10

    def test_length_mismatch_rejected(self, rng):
        ap = CepstralTrack(np.zeros((2, 3)), ALPHA, 64)
        with pytest.raises(InvalidInputError):
            mixed_excitation(Signal(np.zeros(128), FS), Signal(np.zeros(100), FS), ap)


def toy_input(rng, frames=20, hop=240, env_order=12, ap_order=4, f0_hz=150.0, seed=5):
    env = CepstralTrack(decaying_frames(rng, frames, env_order, scale=0.15), ALPHA, hop)
    ap = CepstralTrack(decaying_frames(rng, frames, ap_order, scale=0.2), ALPHA, hop)
    f0 = F0Track(np.full(frames, f0_hz), hop, FS)
    return SynthesisInput(env, ap, f0, noise_seed=seed)


class TestSynthesize:
    def test_unity_filters_route_noise(self):
        frames, hop = 10, 240
        env = CepstralTrack(np.zeros((frames, 5)), ALPHA, hop)
        ap = CepstralTrack(np.zeros((frames, 3)), ALPHA, hop)
        f0 = F0Track(np.full(frames, 100.0), hop, FS)
        inp = SynthesisInput(env, ap, f0, noise_seed=11)
        out = synthesize(inp, ExpFilterConfig(cepstrum_order=8))
        noise = gaussian_noise(frames * hop, 11, FS)
        assert np.max(np.abs(out.samples - noise.samples)) < 1e-10

    def test_voiced_synthesis_has_harmonic_spectrum(self, rng):
        frames, hop, f0_hz = 100, 240, 200.0
        env = CepstralTrack(np.zeros((frames, 5)), ALPHA, hop)
        ap_coeffs = np.zeros((frames, 3))
        ap_coeffs[:, 0] = -5.0  # strong pulse routing
        ap = CepstralTrack(ap_coeffs, ALPHA, hop)
        f0 = F0Track(np.full(frames, f0_hz), hop, FS)
        out = synthesize(SynthesisInput(env, ap, f0, noise_seed=2), ExpFilterConfig(8))
        mag = stft_magnitude(out, StftConfig(2400, 480, 4096)).mean(axis=0)
        freqs = np.arange(mag.size) * FS / 4096
        harmonics = np.arange(1, 10) * f0_hz
        h_idx = np.round(harmonics / (FS / 4096)).astype(int)
        off_idx = np.round((harmonics + f0_hz / 2) / (FS / 4096)).astype(int)
        assert mag[h_idx].min() > 5.0 * mag[off_idx].max()

    def test_identity_posts_match_explicit_two_branch(self, rng):
        inp = toy_input(rng)
        cfg = ExpFilterConfig(cepstrum_order=24)
        one_pass = synthesize(inp, cfg, 64)
        explicit = SynthesisInput(
            inp.envelope, inp.aperiodicity, inp.f0, inp.noise_seed,
            post_filter_a=lambda s: s, post_filter_p=lambda s: s,
        )
        two_branch = synthesize(explicit, cfg, 64)
        assert np.max(np.abs(one_pass.samples - two_branch.samples)) < 1e-10

    def test_post_filters_applied(self, rng):
        inp = toy_input(rng)
        cfg = ExpFilterConfig(cepstrum_order=24)
        base = synthesize(inp, cfg, 64)
        doubled_noise = SynthesisInput(
            inp.envelope, inp.aperiodicity, inp.f0, inp.noise_seed,
            post_filter_a=lambda s: Signal(2.0 * s.samples, s.sample_rate),
        )
        out = synthesize(doubled_noise, cfg, 64)
        assert not np.allclose(out.samples, base.samples)

    def test_deterministic_given_seed(self, rng):
        inp = toy_input(rng)
        cfg = ExpFilterConfig(cepstrum_order=24)
        a = synthesize(inp, cfg, 64)
        b = synthesize(inp, cfg, 64)
        np.testing.assert_array_equal(a.samples, b.samples)

    def test_track_consistency_enforced(self, rng):
        env = CepstralTrack(np.zeros((4, 3)), ALPHA, 240)
        ap_bad_frames = CepstralTrack(np.zeros((5, 3)), ALPHA, 240)
        f0 = F0Track(np.full(4, 100.0), 240, FS)
        with pytest.raises(InvalidInputError):
            SynthesisInput(env, ap_bad_frames, f0)
        ap_bad_warp = CepstralTrack(np.zeros((4, 3)), 0.42, 240)
        with pytest.raises(InvalidInputError):
            SynthesisInput(env, ap_bad_warp, f0)
