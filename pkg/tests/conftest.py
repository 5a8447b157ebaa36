import numpy as np
import pytest

import cachecraft as cc


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def uniform_k4n6m3():
    return cc.uniform_config(4, 6, 3.0)


@pytest.fixture
def graded_catalog():
    return cc.graded_catalog_config(cache_size=1.0)


def random_popularity(rng, n, floor=0.02):
    w = rng.random(n) + floor
    return tuple((w / w.sum()).tolist())
