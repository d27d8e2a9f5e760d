"""File formats: WAV audio, raw float32 feature files, and feature bundles.

A feature bundle is a directory holding::

    config.txt         flat key=value text (sample_rate, frame_hop, alpha,
                       env_order, ap_order)
    envelope.f32       raw little-endian float32, frame-major,
                       env_order+1 values per frame
    aperiodicity.f32   same layout, ap_order+1 values per frame
    f0.f32             one float32 per frame, Hz, 0 = unvoiced

Feature values are promoted to float64 on load.  WAV files are mono,
16-bit PCM or 32/64-bit IEEE float on read; written as 32-bit float by
default, or 16-bit PCM with seeded TPDF dither.
"""

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .cepstral import CepstralTrack
from .errors import InvalidInputError, InvalidParameterError
from .excitation import F0Track, Signal

CONFIG_NAME = "config.txt"
ENVELOPE_NAME = "envelope.f32"
APERIODICITY_NAME = "aperiodicity.f32"
F0_NAME = "f0.f32"

_DITHER_SEED = 0x5EED


@dataclass(frozen=True)
class BundleConfig:
    sample_rate: float
    frame_hop: int
    alpha: float
    env_order: int
    ap_order: int


def read_wav(path) -> Signal:
    try:
        rate, data = wavfile.read(os.fspath(path))
    except (OSError, ValueError) as exc:
        raise InvalidInputError(f"cannot read WAV file {path}: {exc}") from exc
    if data.ndim != 1:
        raise InvalidInputError(f"{path}: only mono WAV files are supported")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise InvalidInputError(
            f"{path}: unsupported WAV sample format {data.dtype}; "
            "use 16-bit PCM or 32-bit float"
        )
    return Signal(samples, float(rate))


def write_wav(path, signal: Signal, bits: int = 32) -> None:
    if bits == 32:
        wavfile.write(os.fspath(path), int(signal.sample_rate), signal.samples.astype("<f4"))
    elif bits == 16:
        gen = np.random.Generator(np.random.Philox(_DITHER_SEED))
        dither = gen.uniform(-0.5, 0.5, len(signal)) + gen.uniform(-0.5, 0.5, len(signal))
        scaled = np.clip(np.rint(signal.samples * 32767.0 + dither), -32768, 32767)
        wavfile.write(os.fspath(path), int(signal.sample_rate), scaled.astype("<i2"))
    else:
        raise InvalidParameterError(f"bits must be 16 or 32, got {bits}")


def read_feature_file(path, dim: int) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) % 4 != 0:
        raise InvalidInputError(f"{path}: size {len(raw)} is not a multiple of 4 bytes")
    flat = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    if dim < 1:
        raise InvalidParameterError(f"feature dimension must be >= 1, got {dim}")
    if flat.size % dim != 0:
        raise InvalidInputError(
            f"{path}: {flat.size} values do not divide into frames of dimension {dim}"
        )
    frames = flat.reshape(-1, dim)
    finite = np.isfinite(frames).all(axis=1)
    if not finite.all():
        raise InvalidInputError(
            f"{path}: non-finite value in frame {int(np.argmin(finite))}"
        )
    return frames


def write_feature_file(path, frames: np.ndarray) -> None:
    Path(path).write_bytes(np.ascontiguousarray(frames, dtype="<f4").tobytes())


def read_config(path) -> BundleConfig:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InvalidInputError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip()
    try:
        cfg = BundleConfig(
            sample_rate=float(values["sample_rate"]),
            frame_hop=int(values["frame_hop"]),
            alpha=float(values["alpha"]),
            env_order=int(values["env_order"]),
            ap_order=int(values["ap_order"]),
        )
    except KeyError as exc:
        raise InvalidInputError(f"{path}: missing config key {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise InvalidInputError(f"{path}: malformed config value: {exc}") from exc
    if not -1.0 < cfg.alpha < 1.0:
        raise InvalidParameterError(f"{path}: |alpha| must be < 1, got {cfg.alpha}")
    return cfg


def write_config(path, cfg: BundleConfig) -> None:
    Path(path).write_text(
        f"sample_rate={cfg.sample_rate:g}\n"
        f"frame_hop={cfg.frame_hop}\n"
        f"alpha={cfg.alpha!r}\n"
        f"env_order={cfg.env_order}\n"
        f"ap_order={cfg.ap_order}\n"
    )


def read_bundle(directory):
    """Load a feature bundle directory.

    Returns ``(envelope_track, aperiodicity_track, f0_track, config)``.
    Frame counts are validated across all three feature files.
    """
    d = Path(directory)
    if not d.is_dir():
        raise InvalidInputError(f"bundle {directory} is not a directory")
    cfg = read_config(d / CONFIG_NAME)
    env = read_feature_file(d / ENVELOPE_NAME, cfg.env_order + 1)
    ap = read_feature_file(d / APERIODICITY_NAME, cfg.ap_order + 1)
    f0 = read_feature_file(d / F0_NAME, 1)[:, 0]
    counts = {ENVELOPE_NAME: env.shape[0], APERIODICITY_NAME: ap.shape[0], F0_NAME: f0.shape[0]}
    if len(set(counts.values())) != 1:
        raise InvalidInputError(
            f"{directory}: frame counts differ across feature files: {counts}"
        )
    env_track = CepstralTrack(env, cfg.alpha, cfg.frame_hop)
    ap_track = CepstralTrack(ap, cfg.alpha, cfg.frame_hop)
    f0_track = F0Track(f0, cfg.frame_hop, cfg.sample_rate)
    return env_track, ap_track, f0_track, cfg


def write_bundle(directory, envelope: CepstralTrack, aperiodicity: CepstralTrack,
                 f0: F0Track) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    cfg = BundleConfig(
        sample_rate=f0.sample_rate,
        frame_hop=envelope.frame_hop,
        alpha=envelope.warp,
        env_order=envelope.order,
        ap_order=aperiodicity.order,
    )
    write_config(d / CONFIG_NAME, cfg)
    write_feature_file(d / ENVELOPE_NAME, envelope.frames)
    write_feature_file(d / APERIODICITY_NAME, aperiodicity.frames)
    write_feature_file(d / F0_NAME, f0.values[:, None])
