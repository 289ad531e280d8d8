"""Core domain objects and their algebra.

Finite type spaces, outcome spaces, joint information structures, utility
tables, and decision rules.  Everything is immutable after construction and
all operations are pure, so parallel evaluation needs no synchronization.

Conventions: players, types, and outcomes are integer indices everywhere in
this package; labels exist only for IO.  An information structure is a dense
probability array over full type profiles, one axis per player.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .config import TOL_EQ, TOL_NORM
from .errors import (
    DimensionError,
    InvalidDistributionError,
    InvalidWeightsError,
    UndefinedConditionalError,
)


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.flags.writeable = False
    return out


def _check_distribution(vec: np.ndarray, what: str, tol: float = TOL_NORM) -> np.ndarray:
    """Validate and lightly clean a probability vector/table."""
    vec = np.array(vec, dtype=float)
    if not np.all(np.isfinite(vec)):
        raise InvalidDistributionError(f"{what}: non-finite entries")
    if np.any(vec < -tol):
        raise InvalidDistributionError(f"{what}: negative mass {vec.min():.3g}")
    vec[vec < 0] = 0.0  # only sub-tolerance rounding noise reaches this point
    total = vec.sum()
    if abs(total - 1.0) > tol:
        raise InvalidDistributionError(f"{what}: total mass {total!r} != 1")
    return vec


@dataclass(frozen=True)
class TypeSpace:
    """Per-player finite ordered type sets.

    ``labels[i]`` lists player i's types; ``values[i]`` are their real-valued
    indices, strictly increasing so the label order is the numeric order.
    """

    labels: tuple[tuple[str, ...], ...]
    values: tuple[tuple[float, ...], ...] = None  # defaults to 0,1,2,...

    def __post_init__(self):
        if len(self.labels) < 2:
            raise DimensionError("a type space needs at least two players")
        labels = tuple(tuple(row) for row in self.labels)
        object.__setattr__(self, "labels", labels)
        for i, row in enumerate(labels):
            if not row:
                raise DimensionError(f"player {i} has an empty type set")
            if len(set(row)) != len(row):
                raise DimensionError(f"player {i} has duplicate type labels")
        if self.values is None:
            values = tuple(tuple(float(k) for k in range(len(row))) for row in labels)
        else:
            values = tuple(tuple(float(v) for v in row) for row in self.values)
            if tuple(len(r) for r in values) != tuple(len(r) for r in labels):
                raise DimensionError("values shape does not match labels")
            for i, row in enumerate(values):
                if any(b <= a for a, b in zip(row, row[1:])):
                    raise DimensionError(f"player {i}: type values must increase")
        object.__setattr__(self, "values", values)

    @property
    def n_players(self) -> int:
        return len(self.labels)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(row) for row in self.labels)

    @property
    def n_profiles(self) -> int:
        return int(np.prod(self.sizes))

    def profiles(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(n) for n in self.sizes))

    def co_players(self, player: int) -> tuple[int, ...]:
        return tuple(j for j in range(self.n_players) if j != player)

    def co_sizes(self, player: int) -> tuple[int, ...]:
        return tuple(self.sizes[j] for j in self.co_players(player))

    def co_profiles(self, player: int) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(n) for n in self.co_sizes(player)))

    def index_of(self, player: int, label: str) -> int:
        try:
            return self.labels[player].index(label)
        except ValueError:
            raise DimensionError(f"player {player} has no type {label!r}") from None

    def label_profile(self, profile: Sequence[int]) -> tuple[str, ...]:
        return tuple(self.labels[i][t] for i, t in enumerate(profile))


@dataclass(frozen=True)
class OutcomeSpace:
    """Finite set of basic outcomes; ``dimension`` is metadata only."""

    labels: tuple[str, ...]
    dimension: int = 1

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise DimensionError("outcome space is empty")
        if len(set(labels)) != len(labels):
            raise DimensionError("duplicate outcome labels")

    @property
    def n_outcomes(self) -> int:
        return len(self.labels)

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DimensionError(f"no outcome {label!r}") from None


@dataclass(frozen=True, eq=False)
class InformationStructure:
    """Joint probability table over full type profiles.

    The table has one axis per player.  Marginals and conditionals are
    derived on demand; a conditional is defined only where the conditioning
    type has positive marginal probability.
    """

    space: TypeSpace
    table: np.ndarray

    def __post_init__(self):
        table = np.asarray(self.table, dtype=float)
        if table.shape != self.space.sizes:
            raise DimensionError(
                f"table shape {table.shape} != type-space sizes {self.space.sizes}"
            )
        table = _check_distribution(table, "information structure")
        object.__setattr__(self, "table", _frozen(table))

    # -- constructors -------------------------------------------------------

    @classmethod
    def independent(cls, space: TypeSpace, marginals: Sequence[Sequence[float]]) -> "InformationStructure":
        """Product structure from per-player marginals."""
        if len(marginals) != space.n_players:
            raise DimensionError("one marginal per player required")
        table = np.ones(space.sizes)
        for i, marg in enumerate(marginals):
            m = _check_distribution(np.asarray(marg, dtype=float), f"marginal {i}")
            shape = [1] * space.n_players
            shape[i] = space.sizes[i]
            table = table * m.reshape(shape)
        return cls(space, table)

    @classmethod
    def uniform(cls, space: TypeSpace) -> "InformationStructure":
        return cls(space, np.full(space.sizes, 1.0 / space.n_profiles))

    @classmethod
    def point_mass(cls, space: TypeSpace, profile: Sequence[int]) -> "InformationStructure":
        table = np.zeros(space.sizes)
        table[tuple(profile)] = 1.0
        return cls(space, table)

    @classmethod
    def from_factors(
        cls, space: TypeSpace, player: int, own_marginal: np.ndarray, co_table: np.ndarray
    ) -> "InformationStructure":
        """Product of a one-player marginal with a joint table over the others.

        Used to pin a designated player's belief while the co-players' block
        varies: the conditional about ``player`` equals ``own_marginal`` at
        every co-profile by construction.
        """
        q = np.asarray(own_marginal, dtype=float)
        co = np.asarray(co_table, dtype=float)
        if q.shape != (space.sizes[player],) or co.shape != space.co_sizes(player):
            raise DimensionError("factor shapes do not match the type space")
        joint = np.multiply.outer(q, co)
        joint = np.moveaxis(joint, 0, player)
        return cls(space, joint)

    # -- derived quantities -------------------------------------------------

    def marginal(self, player: int) -> np.ndarray:
        axes = tuple(j for j in range(self.space.n_players) if j != player)
        return self.table.sum(axis=axes)

    def co_marginal(self, player: int) -> np.ndarray:
        """Joint marginal over all players except ``player``."""
        return self.table.sum(axis=player)

    def conditional(self, player: int, type_index: int) -> np.ndarray:
        """Belief over co-profiles held by ``player`` with type ``type_index``."""
        mass = self.marginal(player)[type_index]
        if mass <= 0.0:
            raise UndefinedConditionalError(
                f"player {player} type {type_index} has zero marginal probability"
            )
        slice_ = np.take(self.table, type_index, axis=player)
        return slice_ / mass

    def deviator_conditional(self, player: int, co_profile: tuple[int, ...]) -> np.ndarray:
        """Belief about ``player`` held at a specific co-profile.

        Defined only where the co-profile has positive mass.
        """
        idx: list = list(co_profile)
        idx.insert(player, slice(None))
        vec = np.asarray(self.table[tuple(idx)], dtype=float).reshape(-1)
        total = vec.sum()
        if total <= 0.0:
            raise UndefinedConditionalError(f"co-profile {co_profile} has zero mass")
        return vec / total

    def support(self) -> np.ndarray:
        return self.table > 0.0

    def is_close_to(self, other: "InformationStructure", tol: float = TOL_EQ) -> bool:
        return self.space == other.space and float(np.max(np.abs(self.table - other.table))) <= tol


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...] = ()


def validate_information_structure(
    candidate: InformationStructure, prior: InformationStructure
) -> ValidationReport:
    """Check that ``candidate`` is a distribution supported inside ``prior``.

    A structure can arise from the prior by updating on some signal exactly
    when its support is contained in the prior's support.
    """
    if candidate.space != prior.space:
        raise DimensionError("candidate and prior live on different type spaces")
    violations = []
    total = candidate.table.sum()
    if abs(total - 1.0) > TOL_NORM:
        violations.append(f"total mass {total!r} != 1")
    escaped = candidate.support() & ~prior.support()
    for profile in np.argwhere(escaped):
        labels = candidate.space.label_profile(tuple(int(t) for t in profile))
        violations.append(f"mass {candidate.table[tuple(profile)]:.6g} outside prior support at {labels}")
    return ValidationReport(ok=not violations, violations=tuple(violations))


@dataclass(frozen=True, eq=False)
class UtilityTable:
    """Bernoulli utilities ``values[player, outcome, *profile]``."""

    space: TypeSpace
    outcomes: OutcomeSpace
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        expected = (self.space.n_players, self.outcomes.n_outcomes) + self.space.sizes
        if values.shape != expected:
            raise DimensionError(f"utility shape {values.shape} != {expected}")
        if not np.all(np.isfinite(values)):
            raise InvalidDistributionError("utilities must be finite")
        object.__setattr__(self, "values", _frozen(values))

    def u(self, player: int, outcome: int, profile: Sequence[int]) -> float:
        return float(self.values[(player, outcome) + tuple(profile)])

    def type_slice(self, player: int, type_index: int) -> np.ndarray:
        """Utilities of ``player`` at own type, shape (n_outcomes, *co_sizes)."""
        return np.take(self.values[player], type_index, axis=1 + player)


@dataclass(frozen=True, eq=False)
class DecisionRule:
    """Mapping from type profiles to outcome distributions.

    ``table[*profile, outcome]``; every profile row is a distribution.
    """

    space: TypeSpace
    outcomes: OutcomeSpace
    table: np.ndarray

    def __post_init__(self):
        table = np.array(self.table, dtype=float)
        expected = self.space.sizes + (self.outcomes.n_outcomes,)
        if table.shape != expected:
            raise DimensionError(f"rule shape {table.shape} != {expected}")
        if not np.all(np.isfinite(table)):
            raise InvalidDistributionError("rule has non-finite entries")
        if np.any(table < -TOL_NORM):
            raise InvalidDistributionError("rule has negative probabilities")
        table[table < 0] = 0.0
        sums = table.sum(axis=-1)
        if np.any(np.abs(sums - 1.0) > TOL_NORM):
            worst = float(np.max(np.abs(sums - 1.0)))
            raise InvalidDistributionError(f"rule rows off normalization by {worst:.3g}")
        object.__setattr__(self, "table", _frozen(table))

    @classmethod
    def constant(cls, space: TypeSpace, outcomes: OutcomeSpace, dist: Sequence[float]) -> "DecisionRule":
        row = _check_distribution(np.asarray(dist, dtype=float), "outcome distribution")
        table = np.broadcast_to(row, space.sizes + (outcomes.n_outcomes,))
        return cls(space, outcomes, table)

    @classmethod
    def deterministic(cls, space: TypeSpace, outcomes: OutcomeSpace, outcome: int) -> "DecisionRule":
        row = np.zeros(outcomes.n_outcomes)
        row[outcome] = 1.0
        return cls.constant(space, outcomes, row)

    def row(self, profile: Sequence[int]) -> np.ndarray:
        return self.table[tuple(profile)]

    def report_slice(self, player: int, report: int) -> np.ndarray:
        """Outcome lotteries when ``player`` reports ``report``: (*co_sizes, n_outcomes)."""
        return np.take(self.table, report, axis=player)


def mix_decision_rules(rules: Sequence[DecisionRule], weights: np.ndarray) -> DecisionRule:
    """Profile-wise convex combination of decision rules.

    ``weights`` has shape ``(*sizes, len(rules))`` (or ``(len(rules),)`` for a
    profile-independent mixture); each profile row must be a convex weighting.
    """
    if not rules:
        raise InvalidWeightsError("no rules to mix")
    space, outcomes = rules[0].space, rules[0].outcomes
    for r in rules[1:]:
        if r.space != space or r.outcomes != outcomes:
            raise DimensionError("rules live on different spaces")
    w = np.asarray(weights, dtype=float)
    if w.shape == (len(rules),):
        w = np.broadcast_to(w, space.sizes + (len(rules),))
    if w.shape != space.sizes + (len(rules),):
        raise InvalidWeightsError(f"weights shape {w.shape} invalid")
    if np.any(w < -TOL_NORM):
        raise InvalidWeightsError("negative mixture weights")
    if np.any(np.abs(w.sum(axis=-1) - 1.0) > TOL_NORM):
        raise InvalidWeightsError("weight rows must sum to one")
    stacked = np.stack([r.table for r in rules], axis=-1)  # (*sizes, Z, k)
    mixed = np.einsum("...zk,...k->...z", stacked, w)
    return DecisionRule(space, outcomes, mixed)


def expected_utility(
    rule: DecisionRule,
    utilities: UtilityTable,
    structure: InformationStructure,
    player: int,
    type_index: int,
    report: int,
) -> float:
    """Interim expected utility of ``player`` with ``type_index`` reporting ``report``.

    Averages over opponents' types with the conditional belief derived from
    ``structure`` and over outcomes with the rule's row at the report.
    """
    if rule.space != structure.space or rule.space != utilities.space:
        raise DimensionError("rule, utilities, and structure must share spaces")
    belief = structure.conditional(player, type_index)
    return expected_utility_given_belief(rule, utilities, player, type_index, report, belief)


def expected_utility_given_belief(
    rule: DecisionRule,
    utilities: UtilityTable,
    player: int,
    type_index: int,
    report: int,
    co_belief: np.ndarray,
) -> float:
    """Like :func:`expected_utility` with an explicit belief over co-profiles."""
    co_belief = np.asarray(co_belief, dtype=float)
    lotteries = rule.report_slice(player, report)            # (*co, Z)
    utils = utilities.type_slice(player, type_index)          # (Z, *co)
    utils = np.moveaxis(utils, 0, -1)                         # (*co, Z)
    per_profile = np.sum(lotteries * utils, axis=-1)          # (*co,)
    return float(np.sum(co_belief * per_profile))


def best_report_value(
    rule: DecisionRule,
    utilities: UtilityTable,
    player: int,
    type_index: int,
    co_belief: np.ndarray,
) -> float:
    """Max over reports of interim expected utility at a given belief."""
    return max(
        expected_utility_given_belief(rule, utilities, player, type_index, m, co_belief)
        for m in range(rule.space.sizes[player])
    )
