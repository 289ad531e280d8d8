import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vetoshield.belief import (
    PosteriorLottery,
    SignalingDevice,
    check_bayes_plausible,
    condition_on_type,
    device_to_lottery,
    lottery_to_device,
    product_device,
    update_on_signal,
)
from vetoshield.errors import (
    DimensionError,
    ImpossibleSignalError,
    InfeasibleSplittingError,
    UndefinedConditionalError,
)
from vetoshield.model import InformationStructure, TypeSpace


def three_player_space():
    return TypeSpace((("a", "b"), ("c", "d"), ("e", "f")))


# -- conditioning ---------------------------------------------------------------

def test_independent_prior_conditional_is_product():
    space = three_player_space()
    marginals = [[0.3, 0.7], [0.6, 0.4], [0.2, 0.8]]
    prior = InformationStructure.independent(space, marginals)
    belief = condition_on_type(prior, 0, 1)
    expected = np.outer([0.6, 0.4], [0.2, 0.8])
    assert np.allclose(belief, expected, atol=1e-12)


def test_degenerate_prior_conditions_to_point_mass(two_by_two_space):
    prior = InformationStructure.point_mass(two_by_two_space, (1, 0))
    belief = condition_on_type(prior, 0, 1)
    assert np.allclose(belief, [1.0, 0.0])


def test_correlated_conditional_matches_division(two_by_two_space):
    table = np.array([[0.4, 0.1], [0.2, 0.3]])
    prior = InformationStructure(two_by_two_space, table)
    belief = condition_on_type(prior, 0, 0)
    assert np.allclose(belief, table[0] / table[0].sum(), atol=1e-12)
    with pytest.raises(UndefinedConditionalError):
        condition_on_type(
            InformationStructure(two_by_two_space, np.array([[0.5, 0.5], [0.0, 0.0]])), 0, 1
        )


# -- updating --------------------------------------------------------------------

def test_babbling_update_returns_base(two_by_two_space):
    base = InformationStructure(two_by_two_space, np.array([[0.4, 0.1], [0.2, 0.3]]))
    device = SignalingDevice.babbling(two_by_two_space, (0, 1))
    post = update_on_signal(base, device, 0)
    assert np.allclose(post.table, base.table, atol=1e-15)


def test_fully_revealing_update_gives_point_marginal(two_by_two_space):
    base = InformationStructure.uniform(two_by_two_space)
    device = SignalingDevice.fully_revealing(two_by_two_space, 0)
    post = update_on_signal(base, device, 1)
    assert np.allclose(post.marginal(0), [0.0, 1.0], atol=1e-15)


def test_binary_signal_bayes_hand_computation(two_by_two_space):
    # Pr(1|r)=0.8, Pr(1|l)=0.2, uniform base: posterior on r after "1" is 0.8
    base = InformationStructure.uniform(two_by_two_space)
    device = SignalingDevice.binary_channel(two_by_two_space, 0, [0.2, 0.8])
    post = update_on_signal(base, device, 1)
    assert post.marginal(0)[1] == pytest.approx(0.8, abs=1e-12)


def test_zero_probability_signal_raises(two_by_two_space):
    base = InformationStructure.uniform(two_by_two_space)
    device = SignalingDevice.binary_channel(two_by_two_space, 0, [0.0, 0.0])
    with pytest.raises(ImpossibleSignalError):
        update_on_signal(base, device, 1)


def test_deviator_marginal_is_pasted_exactly(two_by_two_space):
    base = InformationStructure.uniform(two_by_two_space)
    device = SignalingDevice.binary_channel(two_by_two_space, 0, [0.2, 0.8])
    q = np.array([0.35, 0.65])
    post = update_on_signal(base, device, 1, deviator_marginal=q, deviator=1)
    # the table factorizes exactly: outer product of q with the co-block
    co_block = post.co_marginal(1)
    assert np.array_equal(post.table, np.outer(co_block, q))
    for co in two_by_two_space.co_profiles(1):
        assert np.allclose(post.deviator_conditional(1, co), q, atol=1e-15, rtol=0)


# -- device/lottery correspondence ----------------------------------------------

def test_babbling_device_gives_single_atom(two_by_two_space):
    base = InformationStructure(two_by_two_space, np.array([[0.4, 0.1], [0.2, 0.3]]))
    device = SignalingDevice.babbling(two_by_two_space, (0,))
    lottery = device_to_lottery(base, device)
    assert len(lottery.atoms) == 1
    weight, post = lottery.atoms[0]
    assert weight == pytest.approx(1.0)
    assert np.allclose(post.table, base.table)


def test_full_revelation_splits_uniform_base(two_by_two_space):
    base = InformationStructure.independent(two_by_two_space, [[0.5, 0.5], [0.3, 0.7]])
    device = SignalingDevice.fully_revealing(two_by_two_space, 0)
    lottery = device_to_lottery(base, device)
    assert len(lottery.atoms) == 2
    for weight, post in lottery.atoms:
        assert weight == pytest.approx(0.5, abs=1e-12)
        marg = post.marginal(0)
        assert set(np.round(marg, 12)) == {0.0, 1.0}


def test_merged_signals_with_identical_posteriors(two_by_two_space):
    base = InformationStructure.uniform(two_by_two_space)
    # two signals with identical columns: posteriors coincide and merge
    kernel = np.array([[0.3, 0.3, 0.4], [0.3, 0.3, 0.4]])
    device = SignalingDevice(two_by_two_space, (0,), ("x", "y", "z"), kernel)
    lottery = device_to_lottery(base, device)
    assert len(lottery.atoms) == 1


def test_plausibility_examples(two_by_two_space):
    base = InformationStructure.independent(two_by_two_space, [[0.5, 0.5], [0.5, 0.5]])
    single = PosteriorLottery(((1.0, base),))
    report = check_bayes_plausible(single, base)
    assert report.ok and report.max_deviation == 0.0

    left = InformationStructure.independent(two_by_two_space, [[1.0, 0.0], [0.5, 0.5]])
    right = InformationStructure.independent(two_by_two_space, [[0.0, 1.0], [0.5, 0.5]])
    halves = PosteriorLottery(((0.5, left), (0.5, right)))
    assert check_bayes_plausible(halves, base).ok

    skewed = PosteriorLottery(((0.6, left), (0.4, right)))
    report = check_bayes_plausible(skewed, base)
    assert not report.ok
    assert report.max_deviation == pytest.approx(0.05, abs=1e-12)
    assert np.max(np.abs(skewed.mean_table().sum(axis=1) - [0.5, 0.5])) == pytest.approx(
        0.1, abs=1e-12
    )


def test_lottery_to_device_round_trip_single_atom(two_by_two_space):
    base = InformationStructure.uniform(two_by_two_space)
    lottery = PosteriorLottery(((1.0, base),))
    device = lottery_to_device(lottery, base)
    assert device.n_signals == 1


def test_lottery_to_device_two_point_split(two_by_two_space):
    base = InformationStructure.independent(two_by_two_space, [[0.5, 0.5], [0.4, 0.6]])
    left = InformationStructure.independent(two_by_two_space, [[1.0, 0.0], [0.4, 0.6]])
    right = InformationStructure.independent(two_by_two_space, [[0.0, 1.0], [0.4, 0.6]])
    lottery = PosteriorLottery(((0.5, left), (0.5, right)))
    device = lottery_to_device(lottery, base)
    round_trip = device_to_lottery(base, device)
    assert len(round_trip.atoms) == 2
    for (w1, p1), (w2, p2) in zip(
        sorted(round_trip.atoms, key=lambda a: a[1].marginal(0)[0]),
        sorted(lottery.atoms, key=lambda a: a[1].marginal(0)[0]),
    ):
        assert w1 == pytest.approx(w2, abs=1e-12)
        assert np.allclose(p1.table, p2.table, atol=1e-12)


def test_infeasible_splitting_rejected(two_by_two_space):
    base = InformationStructure.uniform(two_by_two_space)
    left = InformationStructure.independent(two_by_two_space, [[1.0, 0.0], [0.5, 0.5]])
    right = InformationStructure.independent(two_by_two_space, [[0.0, 1.0], [0.5, 0.5]])
    with pytest.raises(InfeasibleSplittingError):
        lottery_to_device(PosteriorLottery(((0.7, left), (0.3, right))), base)


def _random_plausible_lottery(rng, base, n_atoms):
    """Random lottery averaging to the base, by random splitting weights."""
    space = base.space
    shape = base.table.shape
    raw = rng.uniform(0.2, 1.0, size=(n_atoms,) + shape)
    # column-normalize so that sum_k w_k post_k = base exactly
    weights = rng.dirichlet(np.ones(n_atoms))
    mix = np.einsum("k,k...->...", weights, raw)
    scaled = raw * base.table / np.where(mix > 0, mix, 1.0)
    atoms = []
    for k in range(n_atoms):
        table = scaled[k]
        total = table.sum()
        atoms.append((weights[k] * total, InformationStructure(space, table / total)))
    total_w = sum(w for w, _ in atoms)
    return PosteriorLottery(tuple((w / total_w, p) for w, p in atoms))


def test_random_three_atom_round_trip(two_by_two_space, rng):
    base = InformationStructure(two_by_two_space, np.array([[0.3, 0.2], [0.25, 0.25]]))
    for _ in range(25):
        lottery = _random_plausible_lottery(rng, base, 3)
        assert check_bayes_plausible(lottery, base).ok
        device = lottery_to_device(lottery, base)
        again = device_to_lottery(base, device)
        mean_gap = np.max(np.abs(again.mean_table() - lottery.mean_table()))
        assert mean_gap <= 1e-9
        matched = 0
        for w, post in again.atoms:
            for w2, post2 in lottery.atoms:
                if abs(w - w2) <= 1e-9 and np.max(np.abs(post.table - post2.table)) <= 1e-9:
                    matched += 1
                    break
        assert matched == len(again.atoms)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_signals=st.integers(1, 4))
def test_martingale_property_random_devices(seed, n_signals):
    space = TypeSpace((("a", "b"), ("c", "d", "e")))
    rng = np.random.default_rng(seed)
    table = rng.uniform(0.05, 1.0, size=(2, 3))
    base = InformationStructure(space, table / table.sum())
    domain = [(0,), (1,), (0, 1)][seed % 3]
    sizes = tuple(space.sizes[i] for i in domain)
    kernel = rng.dirichlet(np.ones(n_signals), size=sizes)
    device = SignalingDevice(space, domain, tuple(f"s{k}" for k in range(n_signals)), kernel)
    lottery = device_to_lottery(base, device)
    report = check_bayes_plausible(lottery, base)
    assert report.ok
    assert report.max_deviation <= 1e-9


def test_babbling_never_changes_any_structure(rng):
    space = TypeSpace((("a", "b"), ("c", "d")))
    for _ in range(20):
        table = rng.uniform(0.01, 1.0, size=(2, 2))
        base = InformationStructure(space, table / table.sum())
        for domain in ((0,), (1,), (0, 1)):
            device = SignalingDevice.babbling(space, domain)
            lottery = device_to_lottery(base, device)
            assert len(lottery.atoms) == 1
            assert np.allclose(lottery.atoms[0][1].table, base.table, atol=1e-15)


def test_product_device_composes_kernels(two_by_two_space):
    first = SignalingDevice.binary_channel(two_by_two_space, 0, [0.2, 0.8])
    second = SignalingDevice.binary_channel(two_by_two_space, 1, [0.5, 0.1])
    joint = product_device([first, second])
    assert joint.domain == (0, 1)
    assert joint.n_signals == 4
    # P(sigma=(1,0) | types (1, 0)) = 0.8 * 0.5
    idx = joint.signals.index("1|0")
    assert joint.kernel[1, 0, idx] == pytest.approx(0.4, abs=1e-12)


def test_channel_alphabet_size_enforced():
    space = TypeSpace((("a", "b", "c"), ("d",)))
    with pytest.raises(DimensionError):
        SignalingDevice(space, (0,), ("0", "1"), np.array([[1, 0], [1, 0], [0, 1]]), channel_of=0)
    padded = SignalingDevice.binary_channel(space, 0, [0.1, 0.5, 0.9])
    assert padded.n_signals == 3  # padded to the type count
