import numpy as np
import pytest

from eitshape.mesh import build_unit_square_mesh


@pytest.fixture(scope="session")
def mesh10():
    return build_unit_square_mesh(10)


@pytest.fixture(scope="session")
def mesh20():
    return build_unit_square_mesh(20)


@pytest.fixture(scope="session")
def mesh40():
    return build_unit_square_mesh(40)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
