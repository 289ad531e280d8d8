import numpy as np
import pytest

from vetoshield.fixtures import tent_example
from vetoshield.model import (
    InformationStructure,
    OutcomeSpace,
    TypeSpace,
    UtilityTable,
)


@pytest.fixture(scope="session")
def tent():
    return tent_example()


@pytest.fixture
def two_by_two_space():
    return TypeSpace((("a", "b"), ("c", "d")))


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def make_uniform(space: TypeSpace) -> InformationStructure:
    return InformationStructure.uniform(space)


@pytest.fixture
def small_outcomes():
    return OutcomeSpace(("z0", "z1"))


def random_utilities(rng, space, outcomes) -> UtilityTable:
    return UtilityTable(
        space, outcomes, rng.uniform(size=(space.n_players, outcomes.n_outcomes) + space.sizes)
    )
