"""Command-line front end.

Subcommands: synth, pitch-shift, warp, loss, fit, spectrogram, gradcheck.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
divergence (or a failed gradient check).
"""

import argparse
import sys

import numpy as np

from . import bundleio
from .errors import DivergenceError, McsynthError
from .excitation import Signal, shift_semitones
from .filters import ExpFilterConfig, SynthesisInput, synthesize
from .gradients import fit_cepstra, gradcheck
from .losses import (
    LOG_EPS,
    DEFAULT_HOP_FRACTION,
    StftConfig,
    multi_res_stft_loss,
    stft_magnitude,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

GRADCHECK_COMPONENTS = ("tv_fir", "exp_filter", "zero_phase", "mixed", "loss", "chain")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _next_pow2(n):
    k = 1
    while k < n:
        k *= 2
    return k


def _windows_to_configs(spec: str):
    configs = []
    for part in spec.split(","):
        win = int(part)
        configs.append(StftConfig(win, max(1, int(round(win * DEFAULT_HOP_FRACTION))),
                                  _next_pow2(win)))
    return tuple(configs)


def _add_synth_flags(p):
    p.add_argument("--maclaurin-order", type=int, default=20, metavar="L",
                   help="exponential series truncation (default 20)")
    p.add_argument("--realization", choices=("cascade", "fir"), default="cascade",
                   help="cascade of L FIR stages or one long minimum-phase FIR")
    p.add_argument("--interp", choices=("hold", "linear"), default="hold",
                   help="coefficient switching between frames (default hold)")
    p.add_argument("--half-taps", type=int, default=256,
                   help="half width of the zero-phase aperiodicity filters (default 256)")
    p.add_argument("--seed", type=int, default=0, help="noise seed (default 0)")
    p.add_argument("--cepstrum-order", type=int, default=None, metavar="N",
                   help="warp-0 conversion order (default 4*env_order+3)")
    p.add_argument("--ir-length", type=int, default=4096,
                   help="tap count for the fir realization (default 4096)")
    p.add_argument("--bits", type=int, choices=(16, 32), default=32,
                   help="output WAV sample format (default 32-bit float)")


def _exp_config(args, env_order):
    order = args.cepstrum_order if args.cepstrum_order is not None else 4 * env_order + 3
    return ExpFilterConfig(
        cepstrum_order=order,
        maclaurin_order=args.maclaurin_order,
        realization="single_fir" if args.realization == "fir" else "cascade",
        ir_length=args.ir_length,
        interp=args.interp,
    )


def _synth_from_bundle(args, env, ap, f0):
    inp = SynthesisInput(env, ap, f0, noise_seed=args.seed)
    return synthesize(inp, _exp_config(args, env.order), args.half_taps)


def _cmd_synth(args):
    env, ap, f0, _ = bundleio.read_bundle(args.bundle)
    out = _synth_from_bundle(args, env, ap, f0)
    bundleio.write_wav(args.output, out, args.bits)
    return EXIT_OK


def _cmd_pitch_shift(args):
    env, ap, f0, _ = bundleio.read_bundle(args.bundle)
    out = _synth_from_bundle(args, env, ap, shift_semitones(f0, args.semitones))
    bundleio.write_wav(args.output, out, args.bits)
    return EXIT_OK


def _cmd_warp(args):
    env, ap, f0, _ = bundleio.read_bundle(args.bundle)
    out = _synth_from_bundle(args, env.with_warp(args.alpha), ap.with_warp(args.alpha), f0)
    bundleio.write_wav(args.output, out, args.bits)
    return EXIT_OK


def _cmd_loss(args):
    ref = bundleio.read_wav(args.reference)
    deg = bundleio.read_wav(args.degraded)
    report = multi_res_stft_loss(ref, deg, _windows_to_configs(args.windows))
    print(f"total={report.total:.6f}")
    for i, (sc, mag) in enumerate(report.per_resolution, 1):
        print(f"res{i}.sc={sc:.6f}")
        print(f"res{i}.mag={mag:.6f}")
    return EXIT_OK


def _write_history(path, history):
    with open(path, "w") as fh:
        for i, value in enumerate(history):
            fh.write(f"{i} {value:.8e}\n")


def _cmd_fit(args):
    target = bundleio.read_wav(args.target)
    env, ap, f0, _ = bundleio.read_bundle(args.bundle)
    if len(target) > env.total_samples:
        target = Signal(target.samples[: env.total_samples], target.sample_rate)
    inp = SynthesisInput(env, ap, f0, noise_seed=args.seed)
    history_path = args.history or (str(args.output) + "/history.txt")
    try:
        result = fit_cepstra(
            target, inp, args.iters, args.step,
            momentum=args.momentum,
            cfg=_exp_config(args, env.order),
            loss_configs=_windows_to_configs(args.windows),
            half_taps=args.half_taps,
        )
    except DivergenceError as exc:
        bundleio.write_bundle(args.output, env, ap, f0)
        if exc.history is not None:
            _write_history(history_path, exc.history)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    bundleio.write_bundle(args.output, result.envelope, result.aperiodicity, f0)
    _write_history(history_path, result.history)
    print(f"final_loss={result.history[-1]:.6f}")
    return EXIT_OK


def _cmd_spectrogram(args):
    sig = bundleio.read_wav(args.input)
    fft = args.fft_size or _next_pow2(args.window_len)
    cfg = StftConfig(args.window_len, args.hop, fft)
    mag = stft_magnitude(sig, cfg)
    log_mag = np.log(mag + LOG_EPS)
    with open(args.output, "w") as fh:
        fh.write(f"{log_mag.shape[0]} {log_mag.shape[1]} {cfg.hop} {cfg.fft_size}\n")
        np.savetxt(fh, log_mag, fmt="%.8e")
    return EXIT_OK


def _cmd_gradcheck(args):
    components = GRADCHECK_COMPONENTS if args.component == "all" else (args.component,)
    all_passed = True
    for name in components:
        report = gradcheck(name, seed=args.seed, threshold=args.threshold)
        status = "pass" if report.passed else "FAIL"
        print(f"component={name} max_rel={report.worst_relative_error:.3e} "
              f"threshold={report.threshold:g} status={status}")
        all_passed &= report.passed
    return EXIT_OK if all_passed else EXIT_NUMERIC


def build_parser():
    parser = _Parser(prog="mcsynth",
                     description="Differentiable mel-cepstral vocoder toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="resynthesize a feature bundle")
    p.add_argument("bundle")
    p.add_argument("output")
    _add_synth_flags(p)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("pitch-shift", help="resynthesize with shifted f0")
    p.add_argument("bundle")
    p.add_argument("output")
    p.add_argument("--semitones", type=float, required=True)
    _add_synth_flags(p)
    p.set_defaults(func=_cmd_pitch_shift)

    p = sub.add_parser("warp", help="resynthesize at a different warp parameter")
    p.add_argument("bundle")
    p.add_argument("output")
    p.add_argument("--alpha", type=float, required=True)
    _add_synth_flags(p)
    p.set_defaults(func=_cmd_warp)

    p = sub.add_parser("loss", help="multi-resolution STFT loss between two WAVs")
    p.add_argument("reference")
    p.add_argument("degraded")
    p.add_argument("--windows", default="600,1200,2400",
                   help="comma-separated STFT window lengths (default 600,1200,2400)")
    p.set_defaults(func=_cmd_loss)

    p = sub.add_parser("fit", help="fit bundle cepstra to a target waveform")
    p.add_argument("target")
    p.add_argument("bundle", help="initial feature bundle")
    p.add_argument("output", help="output bundle directory")
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--windows", default="600,1200,2400")
    p.add_argument("--history", default=None,
                   help="loss history file (default OUTPUT/history.txt)")
    _add_synth_flags(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("spectrogram", help="export a log-magnitude spectrogram as text")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--window-len", type=int, default=1024)
    p.add_argument("--hop", type=int, default=256)
    p.add_argument("--fft-size", type=int, default=None)
    p.set_defaults(func=_cmd_spectrogram)

    p = sub.add_parser("gradcheck", help="check adjoints against finite differences")
    p.add_argument("--component", choices=("all",) + GRADCHECK_COMPONENTS, default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=1e-4)
    p.set_defaults(func=_cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (McsynthError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
