import os

import numpy as np
import pytest

from rggcast import SimDomain
from rggcast.percolation import estimate_theta_curve, read_theta_table, write_theta_table
from rggcast.pointproc import PointSet

CACHE_DIR = os.path.join(os.path.dirname(__file__), "_cache")

FAST_TABLE_SEED = 424242


def hand_point_set(coords, source_index=0, side_m=20.0, lam=1.0, r=1.0) -> PointSet:
    """Deterministic point set for hand-checked graph tests."""
    coords = np.asarray(coords, float)
    coords.setflags(write=False)
    domain = SimDomain(side_m=side_m, intensity_lambda=lam, radius_r=r)
    return PointSet(domain=domain, coords=coords, source_index=source_index)


def path_points(n, spacing=0.9):
    """n points in a line, consecutive ones adjacent, no skips."""
    return hand_point_set([[i * spacing, 0.0] for i in range(n)])


def tee_points():
    """Path source-a-b-c with an extra leaf d hanging off a."""
    return hand_point_set(
        [[0.0, 0.0], [0.9, 0.0], [1.8, 0.0], [2.7, 0.0], [0.9, 0.95]]
    )


def star_points():
    """Hub at origin with 4 leaves; leaves are pairwise non-adjacent."""
    return hand_point_set(
        [[0.0, 0.0], [0.95, 0.0], [-0.95, 0.0], [0.0, 0.95], [0.0, -0.95]]
    )


@pytest.fixture(scope="session")
def fast_theta_table():
    """Fast-preset percolation curve, cached on disk across test runs."""
    os.makedirs(CACHE_DIR, exist_ok=True)
    path = os.path.join(CACHE_DIR, f"theta_fast_{FAST_TABLE_SEED}.csv")
    if os.path.exists(path):
        return read_theta_table(path)
    table = estimate_theta_curve(1.0, 5.0, 0.05, 101.0, 20, FAST_TABLE_SEED)
    write_theta_table(table, path)
    return table
