import numpy as np
import pytest

from polymer_lab import rw_kernel
from polymer_lab.disorder import DisorderSpec


@pytest.fixture(scope="session")
def table3():
    return rw_kernel.build_kernel_table(3, 16)


@pytest.fixture(scope="session")
def spec():
    return DisorderSpec("rademacher", 0.3, 1)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
