import numpy as np
import pytest

from texdesc.patchio import ImagePatch


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_patch(rng):
    return ImagePatch(rng.uniform(0.0, 1.0, size=(32, 32)))


def make_patch(rng, side=32):
    return ImagePatch(rng.uniform(0.0, 1.0, size=(side, side)))
