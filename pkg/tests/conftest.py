import numpy as np
import pytest

from kickedtop.core import DickeState


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def random_state(rng, N: int) -> DickeState:
    amps = rng.standard_normal(N + 1) + 1j * rng.standard_normal(N + 1)
    return DickeState(amps, normalize=True)
