import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vetoshield.errors import (
    DimensionError,
    InvalidDistributionError,
    InvalidWeightsError,
    UndefinedConditionalError,
)
from vetoshield.model import (
    DecisionRule,
    InformationStructure,
    OutcomeSpace,
    TypeSpace,
    UtilityTable,
    expected_utility,
    mix_decision_rules,
    validate_information_structure,
)


# -- independent oracles ------------------------------------------------------

def loop_mixture(rules, weights):
    """Per-row convex combination computed with plain loops."""
    space = rules[0].space
    out = np.zeros_like(rules[0].table)
    for profile in space.profiles():
        for k, rule in enumerate(rules):
            out[profile] += weights[profile + (k,)] * rule.table[profile]
    return out


def loop_expected_utility(rule, utilities, structure, player, type_index, report):
    """Exhaustive nested-loop interim utility."""
    space = rule.space
    marginal = structure.marginal(player)[type_index]
    total = 0.0
    for co in space.co_profiles(player):
        full = list(co)
        full.insert(player, type_index)
        joint = structure.table[tuple(full)]
        if joint == 0.0:
            continue
        reported = list(co)
        reported.insert(player, report)
        for z in range(rule.outcomes.n_outcomes):
            total += (
                joint
                / marginal
                * rule.table[tuple(reported) + (z,)]
                * utilities.u(player, z, full)
            )
    return total


# -- construction and validation ---------------------------------------------

def test_type_space_requires_two_players():
    with pytest.raises(DimensionError):
        TypeSpace((("a",),))


def test_type_space_rejects_duplicates():
    with pytest.raises(DimensionError):
        TypeSpace((("a", "a"), ("b",)))


def test_structure_must_normalize(two_by_two_space):
    table = np.full((2, 2), 0.2)
    with pytest.raises(InvalidDistributionError):
        InformationStructure(two_by_two_space, table)


def test_structure_rejects_negative_mass(two_by_two_space):
    table = np.array([[0.6, 0.5], [-0.1, 0.0]])
    with pytest.raises(InvalidDistributionError):
        InformationStructure(two_by_two_space, table)


def test_validate_self_is_absolutely_continuous(two_by_two_space):
    prior = InformationStructure.uniform(two_by_two_space)
    assert validate_information_structure(prior, prior).ok


def test_validate_flags_support_escape(two_by_two_space):
    prior = InformationStructure(two_by_two_space, np.array([[0.5, 0.5], [0.0, 0.0]]))
    candidate = InformationStructure(
        two_by_two_space, np.array([[0.45, 0.45], [0.1, 0.0]])
    )
    report = validate_information_structure(candidate, prior)
    assert not report.ok
    assert any("outside prior support" in v for v in report.violations)


def test_validate_accepts_point_mass_inside_support(two_by_two_space):
    prior = InformationStructure.uniform(two_by_two_space)
    point = InformationStructure.point_mass(two_by_two_space, (1, 0))
    assert validate_information_structure(point, prior).ok


def test_validate_mismatched_spaces_raise(two_by_two_space):
    other = TypeSpace((("x", "y", "z"), ("c", "d")))
    with pytest.raises(DimensionError):
        validate_information_structure(
            InformationStructure.uniform(other),
            InformationStructure.uniform(two_by_two_space),
        )


def test_mutual_validation_implies_equal_support(two_by_two_space, rng):
    for _ in range(25):
        a = rng.uniform(size=(2, 2)) * (rng.uniform(size=(2, 2)) > 0.4)
        b = rng.uniform(size=(2, 2)) * (rng.uniform(size=(2, 2)) > 0.4)
        if a.sum() == 0 or b.sum() == 0:
            continue
        first = InformationStructure(two_by_two_space, a / a.sum())
        second = InformationStructure(two_by_two_space, b / b.sum())
        both = (
            validate_information_structure(first, second).ok
            and validate_information_structure(second, first).ok
        )
        if both:
            assert np.array_equal(first.support(), second.support())


# -- mixing -------------------------------------------------------------------

def test_identity_mixture(two_by_two_space, small_outcomes, rng):
    rule = DecisionRule(
        two_by_two_space, small_outcomes, rng.dirichlet(np.ones(2), size=(2, 2))
    )
    mixed = mix_decision_rules([rule], np.ones((2, 2, 1)))
    assert np.allclose(mixed.table, rule.table)


def test_symmetric_mixture_of_deterministic_rules(two_by_two_space, small_outcomes):
    first = DecisionRule.deterministic(two_by_two_space, small_outcomes, 0)
    second = DecisionRule.deterministic(two_by_two_space, small_outcomes, 1)
    mixed = mix_decision_rules([first, second], np.array([0.5, 0.5]))
    assert np.allclose(mixed.table, 0.5)


def test_state_dependent_selection_matches_loop_oracle(two_by_two_space, small_outcomes, rng):
    rules = [
        DecisionRule(two_by_two_space, small_outcomes, rng.dirichlet(np.ones(2), size=(2, 2)))
        for _ in range(2)
    ]
    weights = np.zeros((2, 2, 2))
    for profile in itertools.product(range(2), range(2)):
        pick = int(rng.integers(0, 2))
        weights[profile + (pick,)] = 1.0
    mixed = mix_decision_rules(rules, weights)
    assert np.allclose(mixed.table, loop_mixture(rules, weights), atol=1e-12)


def test_invalid_weights_rejected(two_by_two_space, small_outcomes):
    rule = DecisionRule.deterministic(two_by_two_space, small_outcomes, 0)
    with pytest.raises(InvalidWeightsError):
        mix_decision_rules([rule, rule], np.full((2, 2, 2), 0.4))


@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_mixture_composition_is_row_wise_linear(data):
    space = TypeSpace((("a", "b"), ("c", "d")))
    outcomes = OutcomeSpace(("z0", "z1", "z2"))
    seed = data.draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    rules = [
        DecisionRule(space, outcomes, rng.dirichlet(np.ones(3), size=(2, 2)))
        for _ in range(3)
    ]
    lam = rng.dirichlet(np.ones(2), size=(2, 2))
    mu = rng.dirichlet(np.ones(2), size=(2, 2))
    inner = mix_decision_rules(rules[:2], lam)
    nested = mix_decision_rules([inner, rules[2]], mu)
    composed = np.zeros((2, 2, 3))
    composed[..., 0] = mu[..., 0] * lam[..., 0]
    composed[..., 1] = mu[..., 0] * lam[..., 1]
    composed[..., 2] = mu[..., 1]
    flat = mix_decision_rules(rules, composed)
    assert np.allclose(nested.table, flat.table, atol=1e-12)


# -- expected utility ----------------------------------------------------------

def test_constant_outcome_constant_utility(two_by_two_space, small_outcomes):
    rule = DecisionRule.deterministic(two_by_two_space, small_outcomes, 1)
    utilities = UtilityTable(
        two_by_two_space, small_outcomes, np.full((2, 2, 2, 2), 3.25)
    )
    structure = InformationStructure.uniform(two_by_two_space)
    for report in range(2):
        value = expected_utility(rule, utilities, structure, 0, 0, report)
        assert value == pytest.approx(3.25, abs=1e-12)


def test_single_opponent_type_reads_cell(two_by_two_space, small_outcomes, rng):
    utilities = UtilityTable(two_by_two_space, small_outcomes, rng.uniform(size=(2, 2, 2, 2)))
    structure = InformationStructure.independent(two_by_two_space, [[0.3, 0.7], [1.0, 0.0]])
    rule = DecisionRule.deterministic(two_by_two_space, small_outcomes, 0)
    value = expected_utility(rule, utilities, structure, 0, 1, 1)
    assert value == pytest.approx(utilities.u(0, 0, (1, 0)), abs=1e-12)


def test_expected_utility_matches_loop_oracle(two_by_two_space, small_outcomes, rng):
    utilities = UtilityTable(two_by_two_space, small_outcomes, rng.uniform(size=(2, 2, 2, 2)))
    structure = InformationStructure.uniform(two_by_two_space)
    rule = DecisionRule(two_by_two_space, small_outcomes, rng.dirichlet(np.ones(2), size=(2, 2)))
    for player, t, report in itertools.product(range(2), range(2), range(2)):
        value = expected_utility(rule, utilities, structure, player, t, report)
        oracle = loop_expected_utility(rule, utilities, structure, player, t, report)
        assert value == pytest.approx(oracle, abs=1e-12)


def test_zero_probability_conditional_raises(two_by_two_space, small_outcomes):
    utilities = UtilityTable(two_by_two_space, small_outcomes, np.zeros((2, 2, 2, 2)))
    structure = InformationStructure.independent(two_by_two_space, [[1.0, 0.0], [0.5, 0.5]])
    rule = DecisionRule.deterministic(two_by_two_space, small_outcomes, 0)
    with pytest.raises(UndefinedConditionalError):
        expected_utility(rule, utilities, structure, 0, 1, 0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), lam=st.floats(0.0, 1.0))
def test_expected_utility_linear_in_rule(seed, lam):
    space = TypeSpace((("a", "b"), ("c", "d")))
    outcomes = OutcomeSpace(("z0", "z1"))
    rng = np.random.default_rng(seed)
    utilities = UtilityTable(space, outcomes, rng.uniform(size=(2, 2, 2, 2)))
    structure = InformationStructure.uniform(space)
    first = DecisionRule(space, outcomes, rng.dirichlet(np.ones(2), size=(2, 2)))
    second = DecisionRule(space, outcomes, rng.dirichlet(np.ones(2), size=(2, 2)))
    mixed = mix_decision_rules([first, second], np.array([lam, 1.0 - lam]))
    for player, t in itertools.product(range(2), range(2)):
        direct = expected_utility(mixed, utilities, structure, player, t, t)
        split = lam * expected_utility(first, utilities, structure, player, t, t) + (
            1.0 - lam
        ) * expected_utility(second, utilities, structure, player, t, t)
        assert direct == pytest.approx(split, abs=1e-10)


def test_rule_rows_always_normalized(two_by_two_space, small_outcomes, rng):
    for _ in range(20):
        rule = DecisionRule(
            two_by_two_space, small_outcomes, rng.dirichlet(np.ones(2), size=(2, 2))
        )
        assert np.all(np.abs(rule.table.sum(axis=-1) - 1.0) <= 1e-12)
