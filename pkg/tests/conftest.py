import numpy as np
import pytest

import gposmc as g


@pytest.fixture(scope="session")
def lgss():
    return g.lgss_model()


@pytest.fixture(scope="session")
def hullwhite():
    return g.hullwhite_model()


@pytest.fixture(scope="session")
def lgss_data(lgss):
    """T=250 series simulated at the reference parameter 0.5."""
    _, obs = g.simulate(lgss, [0.5], 250, seed=7)
    return np.asarray(obs)


@pytest.fixture(scope="session")
def lgss_data_short(lgss):
    """T=3 series for exact small-horizon comparisons."""
    _, obs = g.simulate(lgss, [0.5], 3, seed=11)
    return np.asarray(obs)
