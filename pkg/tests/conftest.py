"""Shared builders for the test suite.

The two-mode builder makes binary datasets whose positive class splits into
two orthogonal planted sub-clusters; training sets that miss one sub-cluster
produce models that misclassify it, which several workflow tests rely on.
"""

import numpy as np
import pytest

from milt.data import Bag, MilDataset, rng_for


def two_mode_dataset(
    seed: int,
    n_pos: int = 40,
    n_neg: int = 40,
    d: int = 8,
    radius: float = 4.5,
    mode_noise: float = 0.5,
    bg_noise: float = 1.0,
) -> MilDataset:
    """Binary corpus with two orthogonal positive sub-clusters.

    Even-indexed positive bags plant an instance near radius * u_even, odd
    ones near radius * u_odd; backgrounds are standard normal around the
    origin. Both sub-clusters are linearly separable from the background,
    but only together do they pin down the full positive region.
    """
    rng = rng_for(seed)
    u_a = np.zeros(d)
    u_a[0::2] = 1.0
    u_b = np.zeros(d)
    u_b[1::2] = 1.0
    bags = []
    for i in range(n_pos):
        n = int(rng.integers(4, 9))
        feats = rng.normal(0, bg_noise, (n, d))
        j = int(rng.integers(n))
        u = u_a if i % 2 == 0 else u_b
        feats[j] = radius * u + rng.normal(0, mode_noise, d)
        bags.append(Bag(f"p{i:03d}", 1, feats))
    for i in range(n_neg):
        n = int(rng.integers(4, 9))
        feats = rng.normal(0, bg_noise, (n, d))
        bags.append(Bag(f"n{i:03d}", 0, feats))
    return MilDataset(f"twomode{seed}", bags)


@pytest.fixture
def small_binary() -> MilDataset:
    """Tiny fixed dataset: two separable classes, mixed bag sizes."""
    bags = [
        Bag("a0", 1, np.array([[5.0, 5.0], [5.5, 4.5], [0.2, -0.1]])),
        Bag("a1", 1, np.array([[4.8, 5.2], [0.0, 0.3]])),
        Bag("b0", 0, np.array([[-0.2, 0.1], [0.3, -0.4], [0.1, 0.2]])),
        Bag("b1", 0, np.array([[0.4, 0.0], [-0.3, -0.2]])),
    ]
    return MilDataset("small-binary", bags)
