import numpy as np
import pytest

from v2xsim import l2s


@pytest.fixture(scope="session")
def mcs_table():
    return l2s.McsTable.default()


@pytest.fixture(scope="session")
def fer_model(mcs_table):
    return l2s.FerModel.default(mcs_table)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
