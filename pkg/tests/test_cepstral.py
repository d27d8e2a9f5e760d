import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mcsynth import (
    CepstralTrack,
    InvalidInputError,
    InvalidParameterError,
    c2mpir,
    freqt,
    freqt_matrix,
    schedule,
)
from oracles import decaying_frames, eval_warped_cepstrum

ALPHA = 0.55


def track(frames, warp=ALPHA, hop=80):
    return CepstralTrack(np.atleast_2d(np.asarray(frames, dtype=float)), warp, hop)


class TestFreqt:
    def test_zero_effective_warp_pads(self):
        out = freqt(track([[0.3, -0.1, 0.05]]), 5, ALPHA)
        np.testing.assert_array_equal(out.frames, [[0.3, -0.1, 0.05, 0.0, 0.0, 0.0]])
        assert out.warp == ALPHA

    def test_zero_effective_warp_truncates(self):
        out = freqt(track([[0.3, -0.1, 0.05]]), 1, ALPHA)
        np.testing.assert_array_equal(out.frames, [[0.3, -0.1]])

    def test_flat_log_spectrum_is_warp_invariant(self):
        g = 1.7
        frame = np.zeros(8)
        frame[0] = g
        for dst_warp in (0.0, 0.3, -0.5):
            out = freqt(track([frame]), 11, dst_warp)
            expected = np.zeros(12)
            expected[0] = g
            np.testing.assert_allclose(out.frames[0], expected, atol=1e-15)

    def test_frequency_domain_oracle(self, rng):
        # order-49 warped frame -> order-199 linear frame; the evaluated
        # exp-arguments must agree on a dense grid.
        frames = decaying_frames(rng, 4, 49, scale=0.3, decay=0.85)
        out = freqt(track(frames), 199, 0.0)
        omega = np.linspace(0.0, np.pi, 2049)
        for src, dst in zip(frames, out.frames):
            lhs = sum(c * np.exp(-1j * omega * m) for m, c in enumerate(dst))
            rhs = eval_warped_cepstrum(src, omega, ALPHA)
            assert np.max(np.abs(lhs - rhs)) < 1e-6

    def test_round_trip_at_reference_orders(self, rng):
        frames = rng.normal(scale=0.2, size=(100, 50))
        back = freqt(freqt(track(frames), 199, 0.0), 49, ALPHA)
        rel = np.linalg.norm(back.frames - frames, axis=1) / np.linalg.norm(frames, axis=1)
        assert rel.max() < 1e-6

    def test_round_trip_accuracy_grows_with_order(self, rng):
        frames = rng.normal(scale=0.2, size=(20, 50))
        errs = []
        for n in (120, 160, 199):
            back = freqt(freqt(track(frames), n, 0.0), 49, ALPHA)
            errs.append(np.abs(back.frames - frames).max())
        assert errs[0] > errs[1] > errs[2]

    @settings(max_examples=25, deadline=None)
    @given(
        a=st.floats(-3, 3),
        b=st.floats(-3, 3),
        seed=st.integers(0, 2**16),
    )
    def test_linearity(self, a, b, seed):
        r = np.random.default_rng(seed)
        c1 = r.normal(size=(2, 9))
        c2 = r.normal(size=(2, 9))
        lhs = freqt(track(a * c1 + b * c2), 20, 0.0).frames
        rhs = a * freqt(track(c1), 20, 0.0).frames + b * freqt(track(c2), 20, 0.0).frames
        np.testing.assert_allclose(lhs, rhs, atol=1e-12 * max(1.0, abs(a) + abs(b)))

    def test_matrix_matches_function(self, rng):
        frames = rng.normal(size=(5, 13))
        F = freqt_matrix(12, 30, ALPHA, -0.2)
        direct = freqt(track(frames), 30, -0.2).frames
        np.testing.assert_allclose(frames @ F.T, direct, atol=1e-14)

    def test_invalid_warp_rejected(self):
        with pytest.raises(InvalidParameterError):
            freqt(track([[1.0, 0.0]]), 4, 1.0)
        with pytest.raises(InvalidParameterError):
            CepstralTrack(np.zeros((1, 2)), -1.0, 80)

    def test_non_finite_input_rejected(self):
        with pytest.raises(InvalidInputError):
            CepstralTrack(np.array([[np.nan, 0.0]]), 0.2, 80)

    def test_negative_order_rejected(self):
        with pytest.raises(InvalidParameterError):
            freqt(track([[1.0, 0.0]]), -1, 0.0)


class TestC2mpir:
    def test_zero_cepstrum_gives_unit_impulse(self):
        ir = c2mpir(np.zeros(3), 8)
        np.testing.assert_array_equal(ir.taps, [1, 0, 0, 0, 0, 0, 0, 0])
        assert ir.origin_index == 0

    def test_pure_gain(self):
        ir = c2mpir(np.array([np.log(2.0), 0.0]), 4)
        np.testing.assert_allclose(ir.taps, [2, 0, 0, 0], atol=1e-15)

    def test_leading_tap_is_exp_gain(self, rng):
        c = rng.normal(scale=0.3, size=10)
        assert c2mpir(c, 16).taps[0] == np.exp(c[0])

    def test_fft_exponentiation_oracle(self, rng):
        c = rng.normal(scale=0.15, size=25)
        ir = c2mpir(c, 4096)
        grid = 8192
        spectrum = np.exp(np.fft.fft(np.concatenate([c, np.zeros(grid - c.size)])))
        causal = np.fft.ifft(spectrum).real[:4096]
        assert np.max(np.abs(ir.taps - causal)) < 1e-8

    def test_log_spectrum_round_trip(self, rng):
        # Parseval-style: log|DFT(h)| must reproduce the cepstrum sum.
        c = rng.normal(scale=0.2, size=12)
        c *= 2.0 / max(2.0, np.sum(np.abs(c)))
        taps = c2mpir(c, 2048).taps
        grid = 4096
        omega = 2 * np.pi * np.arange(grid // 2 + 1) / grid
        measured = np.log(np.abs(np.fft.rfft(taps, grid)))
        expected = sum(cm * np.cos(m * omega) for m, cm in enumerate(c))
        assert np.max(np.abs(measured - expected)) < 1e-6

    def test_nonzero_warp_rejected(self):
        with pytest.raises(InvalidParameterError):
            c2mpir(np.zeros(3), 8, warp=0.4)

    def test_bad_length_rejected(self):
        with pytest.raises(InvalidParameterError):
            c2mpir(np.zeros(3), 0)


class TestSchedule:
    def test_hold_identical_frames(self):
        tr = track([[1.0, 2.0], [1.0, 2.0]], hop=8)
        sched = schedule(tr, 16, "hold")
        assert sched.segment_len == 8
        np.testing.assert_array_equal(sched.taps_per_segment[0], sched.taps_per_segment[1])

    def test_linear_steps_through_midpoints(self):
        tr = CepstralTrack(np.array([[0.0, 0.0], [1.0, 0.0]]), 0.0, 8)
        sched = schedule(tr, 16, "linear")  # default segment_len = hop // 4 = 2
        c0 = sched.taps_per_segment[:, 0]
        # segment centers 1,3,..,15 against frame centers 4 and 12
        expected = np.clip((np.arange(8) * 2 + 1 - 4) / 8.0, 0.0, 1.0)
        np.testing.assert_allclose(c0, expected, atol=1e-12)
        assert c0[0] == 0.0 and c0[-1] == 1.0

    def test_hold_equals_linear_for_constant_track(self, rng):
        frame = rng.normal(size=4)
        tr = CepstralTrack(np.tile(frame, (5, 1)), 0.3, 8)
        hold = schedule(tr, 40, "hold")
        lin = schedule(tr, 40, "linear")
        assert np.allclose(hold.taps_per_segment[0], frame)
        np.testing.assert_allclose(
            lin.taps_per_segment, np.tile(frame, (lin.num_segments, 1)), atol=1e-12
        )

    def test_segment_count_invariant(self, rng):
        tr = CepstralTrack(rng.normal(size=(7, 3)), 0.0, 10)
        for total in (61, 70, 65):
            sched = schedule(tr, total, "linear", segment_len=4)
            assert sched.num_segments == -(-total // 4)
            assert sched.total_len == total

    def test_empty_track_rejected(self):
        tr = CepstralTrack(np.zeros((0, 3)), 0.0, 10)
        with pytest.raises(InvalidInputError):
            schedule(tr, 10, "hold")

    def test_overlong_request_rejected(self, rng):
        tr = CepstralTrack(rng.normal(size=(2, 3)), 0.0, 10)
        with pytest.raises(InvalidInputError):
            schedule(tr, 21, "hold")

    def test_unknown_interp_rejected(self, rng):
        tr = CepstralTrack(rng.normal(size=(2, 3)), 0.0, 10)
        with pytest.raises(InvalidParameterError):
            schedule(tr, 20, "cubic")
