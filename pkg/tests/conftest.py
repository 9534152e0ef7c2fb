import numpy as np
import pytest

from htype.group import GroupPoint, GroupSpec

ADMISSIBLE = [(1, 1), (2, 1), (2, 2), (2, 3), (4, 7), (3, 1), (4, 4), (8, 8)]


@pytest.fixture(scope="session")
def heis():
    return GroupSpec.build(1, 1)


@pytest.fixture(scope="session", params=[(1, 1), (2, 1), (2, 3)], ids=lambda p: f"n{p[0]}m{p[1]}")
def group(request):
    return GroupSpec.build(*request.param)


def random_point(G, rng, scale=1.0):
    return GroupPoint(scale * rng.normal(size=2 * G.n), scale * rng.normal(size=G.m))


def random_rows(G, rng, k, scale=1.0):
    return scale * rng.normal(size=(k, 2 * G.n)), scale * rng.normal(size=(k, G.m))
