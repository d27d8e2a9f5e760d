"""Kernel backend selection.

The hot inner loops live twice: as numba ``@njit`` functions in
``_kernels_nb`` and as vectorized numpy code in ``_kernels_np``.  The
numba path is the default whenever numba imports cleanly; setting the
environment variable ``MCSYNTH_DISABLE_NUMBA`` to ``1``/``true``/``yes``
forces the numpy fallback.  Both paths implement identical semantics and
are cross-checked by the test suite.
"""

import os

ENV_FLAG = "MCSYNTH_DISABLE_NUMBA"


def numba_disabled() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not numba_disabled()
