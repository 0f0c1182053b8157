from fractions import Fraction

import pytest

from thinflow.netmodel import Network
from thinflow.pwfn import PiecewiseConstantFn


def two_route_network() -> Network:
    return Network.build(
        [("a", "s", "r", 1, 1), ("b", "r", "t", 1, 1), ("c", "r", "t", 1, 2)],
        "s",
        "t",
    )


def two_route_inflow() -> PiecewiseConstantFn:
    return PiecewiseConstantFn.from_pieces([(0, 2), (1, 0), (2, 1)])


def parallel_network() -> Network:
    return Network.build([("e1", "s", "t", 1, 1), ("e2", "s", "t", 2, 1)], "s", "t")


@pytest.fixture
def two_route():
    return two_route_network(), two_route_inflow()


@pytest.fixture
def parallel():
    return parallel_network()


F = Fraction
