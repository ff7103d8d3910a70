import numpy as np
import pytest

from voxelcast import Volume, make_phantom


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def noise_volume16():
    r = np.random.default_rng(99)
    return Volume.from_array(r.integers(0, 4096, size=(16, 16, 16), dtype=np.uint16))


@pytest.fixture(scope="session")
def sphere16():
    return make_phantom("sphere", 16, radius=6)


@pytest.fixture(scope="session")
def ramp16():
    return make_phantom("ramp", 16)
