import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from otmtr import geometry


@pytest.fixture(scope="session")
def small_grid():
    """6x8 unit grid mesh with costs and a 4-label partition."""
    mesh = geometry.grid_mesh(6, 8, spacing=1.0)
    geo = geometry.Geometry(mesh)
    geo.labels = geometry.make_label_partition(mesh, 4, seed=5)
    return geo


@pytest.fixture(scope="session")
def two_point_kernel():
    M = np.array([[0.0, 1.0], [1.0, 0.0]])
    return geometry.gibbs_kernel(M, 0.5)
