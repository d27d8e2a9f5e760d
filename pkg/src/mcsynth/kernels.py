"""Active kernel set, bound at import time per ``backend.USE_NUMBA``."""

from . import backend
from . import _kernels_np

if backend.USE_NUMBA:
    from . import _kernels_nb as _active
else:
    _active = _kernels_np

BACKEND = _active.BACKEND

tv_fir_apply = _active.tv_fir_apply
tv_fir_input_grad = _active.tv_fir_input_grad
tv_fir_tap_grad = _active.tv_fir_tap_grad
freqt_frames = _active.freqt_frames
c2mpir = _active.c2mpir
pulse_train = _active.pulse_train

KERNEL_NAMES = (
    "tv_fir_apply",
    "tv_fir_input_grad",
    "tv_fir_tap_grad",
    "freqt_frames",
    "c2mpir",
    "pulse_train",
)


def implementations():
    """Map of backend name -> kernel module, for benchmarks and parity tests."""
    impls = {"numpy": _kernels_np}
    if backend.HAVE_NUMBA:
        from . import _kernels_nb

        impls["numba"] = _kernels_nb
    return impls
