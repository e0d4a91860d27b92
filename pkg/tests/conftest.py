import numpy as np
import pytest

from smalekit import logscale, models

CAT = np.array([[2, 1], [1, 1]])


@pytest.fixture(scope="session")
def cat():
    return models.ToralSystem(matrix=CAT, bracket_radius=0.1)


@pytest.fixture(scope="session")
def torus4():
    m = np.zeros((4, 4), dtype=int)
    m[:2, :2] = [[2, 1], [1, 1]]
    m[2:, 2:] = [[3, 1], [2, 1]]
    return models.ToralSystem(matrix=m)


@pytest.fixture(scope="session")
def full_shift():
    return models.ShiftSystem(alphabet_size=2, transitions=np.ones((2, 2), dtype=int))


@pytest.fixture(scope="session")
def golden_shift():
    return models.ShiftSystem(
        alphabet_size=2, transitions=np.array([[1, 1], [1, 0]])
    )


@pytest.fixture()
def cfg():
    return logscale.LogScaleConfig(epsilon0=0.05, n_max=40)
