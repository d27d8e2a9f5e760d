"""mcsynth: a differentiable mel-cepstral vocoder.

Warped-cepstrum spectral model, mixed pulse/noise excitation, the
exponential synthesis filter as cascaded time-variant FIR stages, a
multi-resolution STFT loss, and exact reverse-mode gradients through the
whole chain.
"""

from .cepstral import (
    CepstralTrack,
    CoefficientSchedule,
    ImpulseResponse,
    c2mpir,
    freqt,
    freqt_matrix,
    schedule,
)
from .errors import (
    DivergenceError,
    InvalidInputError,
    InvalidParameterError,
    InvalidStateError,
    McsynthError,
    UndefinedReferenceError,
)
from .excitation import (
    F0Track,
    Signal,
    f0_per_sample,
    gaussian_noise,
    pulse_train,
    shift_semitones,
)
from .filters import (
    ExpFilterConfig,
    SynthesisInput,
    exp_filter,
    mixed_excitation,
    synthesize,
    tv_fir,
    zero_phase_filter,
)
from .gradients import (
    ChainGradients,
    FitResult,
    GradCheckReport,
    GradientTape,
    fit_cepstra,
    gradcheck,
    record_chain,
    vjp_chain,
    vjp_tv_fir,
)
from .losses import (
    LossReport,
    StftConfig,
    default_stft_configs,
    log_magnitude_loss,
    multi_res_stft_loss,
    spectral_convergence,
    stft_magnitude,
)

__version__ = "0.1.0"

__all__ = [
    "CepstralTrack",
    "CoefficientSchedule",
    "ImpulseResponse",
    "c2mpir",
    "freqt",
    "freqt_matrix",
    "schedule",
    "F0Track",
    "Signal",
    "f0_per_sample",
    "gaussian_noise",
    "pulse_train",
    "shift_semitones",
    "ExpFilterConfig",
    "SynthesisInput",
    "exp_filter",
    "mixed_excitation",
    "synthesize",
    "tv_fir",
    "zero_phase_filter",
    "GradientTape",
    "ChainGradients",
    "FitResult",
    "GradCheckReport",
    "fit_cepstra",
    "gradcheck",
    "record_chain",
    "vjp_chain",
    "vjp_tv_fir",
    "LossReport",
    "StftConfig",
    "default_stft_configs",
    "log_magnitude_loss",
    "multi_res_stft_loss",
    "spectral_convergence",
    "stft_magnitude",
    "McsynthError",
    "InvalidInputError",
    "InvalidParameterError",
    "InvalidStateError",
    "UndefinedReferenceError",
    "DivergenceError",
]
