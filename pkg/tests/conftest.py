import numpy as np
import pytest

from centralspin import FieldConfig, SensorParams, hyperfine_set_from_site1
from centralspin import constants as C


@pytest.fixture
def sensor():
    return SensorParams(C.ZERO_FIELD_SPLITTING, C.GAMMA_Z, C.GAMMA_PERP)


@pytest.fixture
def sensor_strained():
    return SensorParams(C.ZERO_FIELD_SPLITTING, C.GAMMA_Z, C.GAMMA_PERP,
                        strain1=C.STRAIN_TOTAL)


@pytest.fixture
def hyperfine_echo():
    axx, ayy = C.HYPERFINE_BENCHMARKS["echo"]
    return hyperfine_set_from_site1(axx, ayy, 0.0, C.AZZ_N15, C.GAMMA_N15)


@pytest.fixture
def inplane_field():
    return FieldConfig(0.020, np.deg2rad(90.0), np.deg2rad(28.0))
