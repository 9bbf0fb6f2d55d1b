import math

import numpy as np
import pytest
from hypothesis import strategies as st

from qubitsim import _core
from qubitsim.geometry import UnitVec3

SIGMA = 4.0


def random_unit(rng) -> UnitVec3:
    return UnitVec3.normalized(rng.normal(size=3))


def binomial_sigma(p, n):
    return math.sqrt(p * (1.0 - p) / n)


@st.composite
def unit_vectors(draw):
    v = draw(
        st.lists(st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False), min_size=3, max_size=3).filter(
            lambda a: np.linalg.norm(a) > 1e-3
        )
    )
    return UnitVec3.normalized(v)


angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False, allow_infinity=False)
bits = st.sampled_from([1, -1])


@pytest.fixture(params=_core.available_backends())
def backend(request):
    return request.param


@pytest.fixture
def nprng():
    return np.random.default_rng(20240611)
