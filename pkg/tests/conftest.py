import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import make_oracles  # noqa: E402

from geocert.surfaces import builtin_surface  # noqa: E402


@pytest.fixture(scope="session")
def oracles():
    return make_oracles()


@pytest.fixture(scope="session")
def gallery():
    return {
        "plane": builtin_surface("plane"),
        "cone": builtin_surface("cone", {"beta": np.pi / 3}),
        "catenoid": builtin_surface("catenoid"),
        "helicoid": builtin_surface("helicoid"),
        "paraboloid": builtin_surface("paraboloid"),
        "enneper": builtin_surface("enneper"),
    }


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
