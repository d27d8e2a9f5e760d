import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mcsynth import kernels


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # Pay any JIT compilation cost before timed assertions run.
    x = np.zeros(4)
    taps = np.ones((1, 2))
    kernels.tv_fir_apply(x, taps, 4, 0)
    kernels.tv_fir_input_grad(x, taps, 4, 0)
    kernels.tv_fir_tap_grad(x, x, 1, 2, 4, 0)
    kernels.freqt_frames(np.zeros((1, 3)), 4, -0.5)
    kernels.c2mpir(np.zeros(3), 4)
    kernels.pulse_train(np.full(4, 100.0), 1000.0, 1e-9)
