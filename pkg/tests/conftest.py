import math

import numpy as np
import pytest

from nvdual import DriveConfig, EvolutionSettings, NvParameters


@pytest.fixture
def params_strained():
    return NvParameters(e_x=2e6)


@pytest.fixture
def drives_default():
    return DriveConfig()


@pytest.fixture
def fast_settings():
    """Short transient for unit tests; acceptance runs use realistic windows."""
    return EvolutionSettings(dt_max=4e-9, transient_time=2e-6, average_periods=2,
                             dephasing_rate=2 * math.pi * 0.3e6)


def two_level_lindblad_system(gamma=2.0e6):
    """Tiny amplitude-damping system used by several oracle tests."""
    h = 2 * math.pi * 1.0e6 * np.diag([0.0, 1.0]).astype(complex)
    l_op = np.zeros((2, 2), dtype=complex)
    l_op[0, 1] = math.sqrt(gamma)
    return h, [l_op]
