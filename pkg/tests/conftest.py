import math

import numpy as np
import pytest

from oncovirus import GridSpec


@pytest.fixture
def grid129():
    return GridSpec(math.pi, 129)


@pytest.fixture
def grid33():
    return GridSpec(math.pi, 33)


def sup(a):
    return float(np.max(np.abs(a)))
