"""Shared fixtures: the period-doubling survey used by several tests."""
import warnings

import numpy as np
import pytest

from ddlab import renorm
from ddlab.maps import HenonMap

warnings.filterwarnings("ignore")

CASCADE_B = 0.1
CASCADE_CS = [float(c) for c in np.linspace(-1.46, -1.30, 10)]


@pytest.fixture(scope="session")
def cascade_trees():
    """(map, certified tree, orbit census) at ten doubling-regime parameters."""
    out = []
    for c in CASCADE_CS:
        f = HenonMap(CASCADE_B, c)
        cert, orbits = renorm.root_trap(f, max_period=8)
        tree = renorm.cascade(f, cert, max_period=32)
        out.append((f, tree, orbits))
    return out
