import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nba.generate import GenSpec, generate  # noqa: E402
from nba.model import AllocationPlan, BillingConfig, Instance, Network, SlotDemand, Source  # noqa: E402

TRIANGLE_EDGES = frozenset({(1, 2), (2, 1), (1, 3), (3, 1), (2, 3), (3, 2)})


def make_triangle(p: int = 1, w=1, cap=10) -> Instance:
    net = Network(3, [1, 1, 1], [cap] * 3, [cap] * 3, TRIANGLE_EDGES)
    demands = tuple(
        SlotDemand(t, TRIANGLE_EDGES, (Source(1, Fraction(w), frozenset({2, 3})),)) for t in range(1, p + 1)
    )
    return Instance(net, BillingConfig(p, Fraction(19, 20)), demands)


def tiny_spec(seed: int, **overrides) -> GenSpec:
    """Desk-scale generic instances: n <= 4, p <= 2, at most two sources per slot."""
    knobs = dict(
        seed=seed,
        n=3 + seed % 2,
        p=1 + (seed // 2) % 2,
        density="1/2",
        sources=(1, 2),
        dests=(1, 2),
        weights=(1, 4),
        prices=(1, 3),
        capacities=(3, 8),
    )
    knobs.update(overrides)
    return GenSpec(**knobs)


def tiny_instance(seed: int, **overrides) -> Instance:
    return generate(tiny_spec(seed, **overrides))


@pytest.fixture
def triangle() -> Instance:
    return make_triangle()


@pytest.fixture
def chain_plan() -> AllocationPlan:
    return AllocationPlan({(1, 1): [(1, 2), (2, 3)]})


@pytest.fixture
def star_plan() -> AllocationPlan:
    return AllocationPlan({(1, 1): [(1, 2), (1, 3)]})
