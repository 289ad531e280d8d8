"""Bayesian updating, signaling devices, and posterior lotteries.

A signaling device reads some players' type reports and emits a public
signal; updating a base structure on a realization yields a posterior, and
sweeping all realizations yields a Bayes-plausible lottery over posteriors.
The inverse direction (splitting a base into a target lottery) recovers a
device from any plausible lottery.

When a deviator is designated, that player's one-player belief is pasted
onto the co-players' posterior as an independent factor, so no realization
reveals anything about the deviator.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .config import TOL_EQ, TOL_NORM
from .errors import (
    BeliefSupportError,
    DimensionError,
    ImpossibleSignalError,
    InfeasibleSplittingError,
)
from .model import (
    InformationStructure,
    TypeSpace,
    _check_distribution,
    _frozen,
    validate_information_structure,
)


def condition_on_type(structure: InformationStructure, player: int, type_index: int) -> np.ndarray:
    """Belief over co-profiles for a player of the given type."""
    return structure.conditional(player, type_index)


@dataclass(frozen=True, eq=False)
class SignalingDevice:
    """Kernel from a subset of players' type reports to public signals.

    ``domain`` lists the players whose reports the device reads, in player
    order; ``kernel[*domain_profile, signal]`` is a distribution over the
    joint alphabet ``signals``.  ``channel_of`` marks a single-player channel
    that covers that player's full report, in which case the alphabet must be
    at least as large as the player's type set (padding labels may carry zero
    mass everywhere).
    """

    space: TypeSpace
    domain: tuple[int, ...]
    signals: tuple[str, ...]
    kernel: np.ndarray
    channel_of: int | None = None

    def __post_init__(self):
        domain = tuple(sorted(self.domain))
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "signals", tuple(self.signals))
        if not domain or any(i < 0 or i >= self.space.n_players for i in domain):
            raise DimensionError(f"invalid device domain {domain}")
        if len(set(domain)) != len(domain):
            raise DimensionError("duplicate players in device domain")
        if not self.signals:
            raise DimensionError("empty signal alphabet")
        kernel = np.array(self.kernel, dtype=float)
        expected = self.domain_sizes + (len(self.signals),)
        if kernel.shape != expected:
            raise DimensionError(f"kernel shape {kernel.shape} != {expected}")
        if np.any(kernel < -TOL_NORM) or not np.all(np.isfinite(kernel)):
            raise DimensionError("kernel rows must be finite and nonnegative")
        kernel[kernel < 0] = 0.0
        if np.any(np.abs(kernel.sum(axis=-1) - 1.0) > TOL_NORM):
            raise DimensionError("kernel rows must sum to one")
        if self.channel_of is not None:
            i = self.channel_of
            if self.domain != (i,):
                raise DimensionError("a channel reads exactly its own player")
            if len(self.signals) < self.space.sizes[i]:
                raise DimensionError(
                    f"channel alphabet {len(self.signals)} smaller than player {i}'s type set"
                )
        object.__setattr__(self, "kernel", _frozen(kernel))

    @property
    def domain_sizes(self) -> tuple[int, ...]:
        return tuple(self.space.sizes[i] for i in self.domain)

    @property
    def n_signals(self) -> int:
        return len(self.signals)

    def project(self, profile: Sequence[int]) -> tuple[int, ...]:
        """Restrict a full type profile to the device's domain."""
        return tuple(profile[i] for i in self.domain)

    def likelihood_table(self) -> np.ndarray:
        """Signal likelihoods broadcast over full profiles: (*sizes, n_signals)."""
        shape = [1] * self.space.n_players
        for i, s in zip(self.domain, self.domain_sizes):
            shape[i] = s
        return np.broadcast_to(
            self.kernel.reshape(tuple(shape) + (self.n_signals,)),
            self.space.sizes + (self.n_signals,),
        )

    # -- canonical constructors ---------------------------------------------

    @classmethod
    def babbling(cls, space: TypeSpace, domain: Sequence[int]) -> "SignalingDevice":
        sizes = tuple(space.sizes[i] for i in sorted(domain))
        kernel = np.ones(sizes + (1,))
        return cls(space, tuple(domain), ("*",), kernel)

    @classmethod
    def fully_revealing(cls, space: TypeSpace, player: int) -> "SignalingDevice":
        n = space.sizes[player]
        return cls(space, (player,), space.labels[player], np.eye(n), channel_of=player)

    @classmethod
    def binary_channel(cls, space: TypeSpace, player: int, prob_one: Sequence[float]) -> "SignalingDevice":
        """Per-type probability of emitting signal "1", signal "0" otherwise.

        The alphabet is padded with unused labels when the player has more
        than two types, so the channel still covers the full report.
        """
        p = np.asarray(prob_one, dtype=float)
        n = space.sizes[player]
        if p.shape != (n,):
            raise DimensionError("one emission probability per type required")
        if np.any(p < 0) or np.any(p > 1):
            raise DimensionError("emission probabilities must lie in [0, 1]")
        n_sig = max(2, n)
        kernel = np.zeros((n, n_sig))
        kernel[:, 0] = 1.0 - p
        kernel[:, 1] = p
        labels = ("0", "1") + tuple(f"pad{k}" for k in range(2, n_sig))
        return cls(space, (player,), labels, kernel, channel_of=player)


def product_device(devices: Sequence[SignalingDevice]) -> SignalingDevice:
    """Combine channels with disjoint domains into one joint device.

    Joint signals are tuples of component signals, labelled ``"a|b|..."``;
    the kernel is the product of the component kernels.
    """
    if not devices:
        raise DimensionError("no devices to combine")
    if len(devices) == 1:
        return devices[0]
    space = devices[0].space
    players: list[int] = []
    for dev in devices:
        if dev.space != space:
            raise DimensionError("devices live on different type spaces")
        players.extend(dev.domain)
    if len(set(players)) != len(players):
        raise DimensionError("device domains overlap")
    domain = tuple(sorted(players))
    domain_sizes = tuple(space.sizes[i] for i in domain)
    pos = {i: k for k, i in enumerate(domain)}
    n_signals = int(np.prod([d.n_signals for d in devices]))
    kernel = np.zeros(domain_sizes + (n_signals,))
    labels = []
    combos = list(itertools.product(*(range(d.n_signals) for d in devices)))
    for profile in itertools.product(*(range(s) for s in domain_sizes)):
        for sig_idx, combo in enumerate(combos):
            prob = 1.0
            for dev, s in zip(devices, combo):
                sub = tuple(profile[pos[i]] for i in dev.domain)
                prob *= dev.kernel[sub + (s,)]
            kernel[profile + (sig_idx,)] = prob
    for combo in combos:
        labels.append("|".join(dev.signals[s] for dev, s in zip(devices, combo)))
    return SignalingDevice(space, domain, tuple(labels), kernel)


@dataclass(frozen=True, eq=False)
class PosteriorLottery:
    """Finite lottery over information structures: ``atoms = ((weight, posterior), ...)``."""

    atoms: tuple[tuple[float, InformationStructure], ...]

    def __post_init__(self):
        if not self.atoms:
            raise DimensionError("a lottery needs at least one atom")
        space = self.atoms[0][1].space
        weights = np.array([w for w, _ in self.atoms], dtype=float)
        _check_distribution(weights, "lottery weights")
        for _, post in self.atoms:
            if post.space != space:
                raise DimensionError("lottery atoms live on different type spaces")
        object.__setattr__(self, "atoms", tuple((float(w), p) for w, p in self.atoms))

    @property
    def space(self) -> TypeSpace:
        return self.atoms[0][1].space

    def mean_table(self) -> np.ndarray:
        return sum(w * post.table for w, post in self.atoms)


class PlausibilityReport(NamedTuple):
    ok: bool
    max_deviation: float
    opacity_deviation: float | None = None


def _signal_probabilities(base: InformationStructure, device: SignalingDevice) -> np.ndarray:
    domain_marginal = base.table
    for axis in reversed(range(base.space.n_players)):
        if axis not in device.domain:
            domain_marginal = domain_marginal.sum(axis=axis)
    flat = domain_marginal.reshape(-1)
    kern = device.kernel.reshape(-1, device.n_signals)
    return flat @ kern


def update_on_signal(
    base: InformationStructure,
    device: SignalingDevice,
    realization: int,
    deviator_marginal: np.ndarray | None = None,
    deviator: int | None = None,
) -> InformationStructure:
    """Posterior after publicly observing one signal realization.

    Without a deviator, every cell is rescaled by the likelihood ratio of
    the realization.  With ``deviator_marginal`` supplied, only the
    co-players' block is updated and the deviator's one-player belief is
    pasted back as an independent factor, so the conditional about the
    deviator is untouched at every co-profile.
    """
    if device.space != base.space:
        raise DimensionError("device and base live on different type spaces")
    if not 0 <= realization < device.n_signals:
        raise DimensionError(f"no signal index {realization}")
    if deviator_marginal is None:
        lik = device.likelihood_table()[..., realization]
        prob = float(np.sum(base.table * lik))
        if prob <= TOL_NORM:
            raise ImpossibleSignalError(f"signal {device.signals[realization]!r} has zero probability")
        post = InformationStructure(base.space, base.table * lik / prob)
    else:
        if deviator is None:
            raise DimensionError("deviator index required with deviator_marginal")
        if deviator in device.domain:
            raise DimensionError("punishment devices cannot read the deviator's report")
        q = _check_distribution(np.asarray(deviator_marginal, dtype=float), "deviator belief")
        co_base = base.co_marginal(deviator)
        co_players = base.space.co_players(deviator)
        lik = device.likelihood_table()[..., realization]
        co_lik = np.take(lik, 0, axis=deviator)  # likelihood is deviator-independent
        prob = float(np.sum(co_base * co_lik))
        if prob <= TOL_NORM:
            raise ImpossibleSignalError(f"signal {device.signals[realization]!r} has zero probability")
        co_post = co_base * co_lik / prob
        post = InformationStructure.from_factors(base.space, deviator, q, co_post)
    report = validate_information_structure(post, base)
    if not report.ok:
        raise BeliefSupportError("; ".join(report.violations))
    return post


def device_to_lottery(
    base: InformationStructure,
    device: SignalingDevice,
    deviator_marginal: np.ndarray | None = None,
    deviator: int | None = None,
    merge_tol: float = TOL_NORM,
) -> PosteriorLottery:
    """Lottery over posteriors induced by a device, one atom per realization.

    Zero-probability realizations are dropped; realizations with identical
    posteriors are merged into a single atom (the posterior, not the label,
    is payoff relevant).
    """
    probs = _signal_probabilities(base, device)
    atoms: list[tuple[float, InformationStructure]] = []
    for s, p in enumerate(probs):
        if p <= merge_tol:
            continue
        post = update_on_signal(base, device, s, deviator_marginal, deviator)
        for k, (w, existing) in enumerate(atoms):
            if np.max(np.abs(existing.table - post.table)) <= merge_tol:
                merged = (w * existing.table + p * post.table) / (w + p)
                atoms[k] = (w + p, InformationStructure(base.space, merged))
                break
        else:
            atoms.append((float(p), post))
    total = sum(w for w, _ in atoms)
    atoms = [(w / total, post) for w, post in atoms]
    return PosteriorLottery(tuple(atoms))


def check_bayes_plausible(
    lottery: PosteriorLottery,
    base: InformationStructure,
    deviator: int | None = None,
    tol: float = TOL_EQ,
) -> PlausibilityReport:
    """Martingale check: the weighted average of atoms must equal the base.

    With a designated deviator, additionally require that every atom's
    conditional about the deviator matches the base's wherever both put
    positive mass on the co-profile (no realization may reveal the deviator).
    """
    if lottery.space != base.space:
        raise DimensionError("lottery and base live on different type spaces")
    deviation = float(np.max(np.abs(lottery.mean_table() - base.table)))
    opacity = None
    if deviator is not None:
        opacity = 0.0
        for _, post in lottery.atoms:
            base_co = base.co_marginal(deviator)
            post_co = post.co_marginal(deviator)
            for co in base.space.co_profiles(deviator):
                if base_co[co] <= 0.0 or post_co[co] <= 0.0:
                    continue
                gap = np.max(
                    np.abs(
                        post.deviator_conditional(deviator, co)
                        - base.deviator_conditional(deviator, co)
                    )
                )
                opacity = max(opacity, float(gap))
    ok = deviation <= tol and (opacity is None or opacity <= tol)
    return PlausibilityReport(ok=ok, max_deviation=deviation, opacity_deviation=opacity)


def lottery_to_device(
    lottery: PosteriorLottery,
    base: InformationStructure,
    deviator: int | None = None,
) -> SignalingDevice:
    """Device implementing a Bayes-plausible lottery, one signal per atom.

    The kernel at a supported profile is ``weight * posterior / base``; off
    the base's support the row defaults to the atom weights (uninformative).
    A round trip through :func:`device_to_lottery` reproduces the lottery up
    to atom merging and reordering.
    """
    report = check_bayes_plausible(lottery, base, deviator=deviator)
    if not report.ok:
        raise InfeasibleSplittingError(
            f"lottery is not Bayes plausible (deviation {report.max_deviation:.3g},"
            f" opacity {report.opacity_deviation})"
        )
    weights = np.array([w for w, _ in lottery.atoms])
    if deviator is None:
        ref = base.table
        posts = [post.table for _, post in lottery.atoms]
        domain = tuple(range(base.space.n_players))
    else:
        ref = base.co_marginal(deviator)
        posts = [post.co_marginal(deviator) for _, post in lottery.atoms]
        domain = base.space.co_players(deviator)
    kernel = np.empty(ref.shape + (len(posts),))
    kernel[...] = weights
    supported = ref > 0.0
    for k, (w, post) in enumerate(zip(weights, posts)):
        kernel[supported, k] = w * post[supported] / ref[supported]
    kernel /= kernel.sum(axis=-1, keepdims=True)
    labels = tuple(f"s{k}" for k in range(len(posts)))
    return SignalingDevice(base.space, domain, labels, kernel)
