"""Opportunistic signal designers: alignment, unraveling pressure, and
immunity verdicts.

The designer's type is the information she holds about the participating
players.  Alignment asks whether every designer type ranks belief
distributions the same way under first-order stochastic dominance; the
immunity test is decisive only under full support and alignment, so failing
either hypothesis yields "indeterminate" rather than a verdict.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .config import DEFAULT_CONFIG, TOL_EQ, RunConfig
from .defaultgame import Game, ReducedFormGame, evaluate_reduced_form, outside_option_value
from .errors import DimensionError
from .model import InformationStructure, TypeSpace
from .punishment import simplex_grid


class Immunity(Enum):
    IMMUNE = "immune"
    NOT_IMMUNE = "not_immune"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True, eq=False)
class DesignerTypeSpace:
    """Designer types and their payoff over beliefs about the designated player.

    ``payoff(designer_type, distribution)`` evaluates one designer type's
    value when the public belief about the designated player is the given
    distribution over her ordered types.  ``full_support`` records whether
    the underlying prior has full support, a hypothesis of the immunity test.
    """

    space: TypeSpace
    designated: int
    n_designer_types: int
    payoff: Callable[[int, np.ndarray], float]
    full_support: bool
    type_labels: tuple[str, ...] = ()


def designer_space_from_reduced_form(
    game: ReducedFormGame, prior: InformationStructure
) -> DesignerTypeSpace:
    """Decentralized case: the designated player designs her own signal."""
    d = game.designated

    def payoff(designer_type: int, dist: np.ndarray) -> float:
        return evaluate_reduced_form(game, d, designer_type, float(dist[1]))

    return DesignerTypeSpace(
        space=game.space,
        designated=d,
        n_designer_types=game.space.sizes[d],
        payoff=payoff,
        full_support=bool(np.all(prior.table > 0.0)),
        type_labels=game.space.labels[d],
    )


def designer_space_from_strategic(
    game, prior: InformationStructure, deviator: int, designated: int,
    offpath_belief: np.ndarray,
) -> DesignerTypeSpace:
    """Designer identified with the designated player's elicited type; her
    payoff is her continuation value when the public belief about her is F
    and the deviator carries the pinned off-path belief."""
    if designated == deviator:
        raise DimensionError("the designer holds the non-deviators' information")

    def payoff(designer_type: int, dist: np.ndarray) -> float:
        structure = InformationStructure.from_factors(
            game.space, deviator, np.asarray(offpath_belief, dtype=float),
            np.asarray(dist, dtype=float),
        )
        return outside_option_value(game, structure, designated, designer_type)

    return DesignerTypeSpace(
        space=game.space,
        designated=designated,
        n_designer_types=game.space.sizes[designated],
        payoff=payoff,
        full_support=bool(np.all(prior.table > 0.0)),
        type_labels=game.space.labels[designated],
    )


@dataclass(frozen=True, eq=False)
class AlignmentWitness:
    prefers_dominant: int | None
    prefers_dominated: int
    dominant: np.ndarray
    dominated: np.ndarray


@dataclass(frozen=True, eq=False)
class AlignmentReport:
    aligned: bool
    witness: AlignmentWitness | None = None


def _fosd_pairs(grid: np.ndarray, tol: float) -> list[tuple[int, int]]:
    """Indices (a, b) where grid[a] strictly dominates grid[b] first-order."""
    cdf = np.cumsum(grid, axis=1)
    pairs = []
    for a, b in itertools.permutations(range(grid.shape[0]), 2):
        diff = cdf[a] - cdf[b]
        if np.all(diff <= tol) and np.any(diff < -tol):
            pairs.append((a, b))
    return pairs


def check_aligned(
    designer: DesignerTypeSpace,
    grid_resolution: int = 10,
    tol: float = TOL_EQ,
) -> AlignmentReport:
    """Do all designer types weakly prefer dominant belief distributions?

    Verified over every dominance-ordered pair of grid distributions (all
    point masses are grid points).  On failure the witness carries a type
    that strictly prefers the dominated distribution and, when one exists, a
    type strictly preferring the dominant one.
    """
    n = designer.space.sizes[designer.designated]
    grid = simplex_grid(n, grid_resolution)
    values = np.array(
        [
            [designer.payoff(t, dist) for dist in grid]
            for t in range(designer.n_designer_types)
        ]
    )
    for a, b in _fosd_pairs(grid, tol):
        gains = values[:, a] - values[:, b]
        violators = np.flatnonzero(gains < -tol)
        if violators.size:
            supporters = np.flatnonzero(gains > tol)
            return AlignmentReport(
                aligned=False,
                witness=AlignmentWitness(
                    prefers_dominant=int(supporters[0]) if supporters.size else None,
                    prefers_dominated=int(violators[0]),
                    dominant=grid[a],
                    dominated=grid[b],
                ),
            )
    return AlignmentReport(aligned=True)


def _device_posteriors(
    device_kernel: np.ndarray, base: np.ndarray
) -> list[tuple[int, float, np.ndarray]]:
    """(signal, probability, posterior) triples with positive probability."""
    probs = base @ device_kernel
    out = []
    for s, p in enumerate(probs):
        if p <= 0.0:
            continue
        out.append((s, float(p), base * device_kernel[:, s] / p))
    return out


def check_unraveling_pressure(
    designer: DesignerTypeSpace,
    device_kernel: np.ndarray,
    base: np.ndarray,
    tol: float = TOL_EQ,
) -> np.ndarray:
    """Per designer type: does she strictly prefer verifying her type?

    The device reads the designer's type; her lottery mixes the public
    posteriors with her own row's emission probabilities.  Verification is
    the degenerate posterior on her true type.
    """
    base = np.asarray(base, dtype=float)
    kernel = np.asarray(device_kernel, dtype=float)
    n = designer.n_designer_types
    if kernel.shape[0] != n or base.shape != (n,):
        raise DimensionError("device and base must live on the designer's types")
    posteriors = _device_posteriors(kernel, base)
    pressured = np.zeros(n, dtype=bool)
    for t in range(n):
        lottery_value = sum(
            kernel[t, s] * designer.payoff(t, post) for s, _, post in posteriors
        )
        verification = designer.payoff(t, np.eye(n)[t])
        pressured[t] = verification > lottery_value + tol
    return pressured


@dataclass(frozen=True, eq=False)
class ImmunityReport:
    verdict: Immunity
    pressured: np.ndarray | None = None
    alignment: AlignmentReport | None = None
    reason: str = ""


def check_immunity(
    designer: DesignerTypeSpace,
    device_kernel: np.ndarray,
    base: np.ndarray,
    grid_resolution: int = 10,
    config: RunConfig = DEFAULT_CONFIG,
) -> ImmunityReport:
    """Immunity verdict for a device under an opportunistic designer.

    The absence-of-pressure test characterizes immunity only under full
    support and aligned preferences; outside those hypotheses no verdict is
    claimed either way.
    """
    if not designer.full_support:
        return ImmunityReport(
            verdict=Immunity.INDETERMINATE,
            reason="prior lacks full support",
        )
    alignment = check_aligned(designer, grid_resolution, config.tol_eq)
    if not alignment.aligned:
        return ImmunityReport(
            verdict=Immunity.INDETERMINATE,
            alignment=alignment,
            reason="designer preferences are misaligned",
        )
    pressured = check_unraveling_pressure(designer, device_kernel, base, config.tol_eq)
    if pressured.any():
        return ImmunityReport(
            verdict=Immunity.NOT_IMMUNE,
            pressured=pressured,
            alignment=alignment,
            reason="some designer type strictly prefers verifying her type",
        )
    return ImmunityReport(
        verdict=Immunity.IMMUNE, pressured=pressured, alignment=alignment
    )


@dataclass(frozen=True, eq=False)
class WeakImmunityReport:
    verdict: Immunity
    worst_realization: int | None = None
    reason: str = ""


def check_weak_immunity(
    designer: DesignerTypeSpace,
    device_kernel: np.ndarray,
    base: np.ndarray,
    grid_resolution: int = 10,
    config: RunConfig = DEFAULT_CONFIG,
) -> WeakImmunityReport:
    """Immunity when the designer commits to the device but not to disclosure.

    Under full support and alignment every type shares a worst realization;
    concealment is deterred by concentrating the off-path belief on it, so
    the verdict is immune whenever the hypotheses hold.
    """
    if not designer.full_support:
        return WeakImmunityReport(Immunity.INDETERMINATE, reason="prior lacks full support")
    alignment = check_aligned(designer, grid_resolution, config.tol_eq)
    if not alignment.aligned:
        return WeakImmunityReport(
            Immunity.INDETERMINATE, reason="designer preferences are misaligned"
        )
    base = np.asarray(base, dtype=float)
    kernel = np.asarray(device_kernel, dtype=float)
    posteriors = _device_posteriors(kernel, base)
    worst_sets = []
    for t in range(designer.n_designer_types):
        values = {s: designer.payoff(t, post) for s, _, post in posteriors}
        floor = min(values.values())
        worst_sets.append({s for s, v in values.items() if v <= floor + config.tol_eq})
    common = set.intersection(*worst_sets)
    if not common:
        # cannot happen under alignment with mutually comparable posteriors
        raise DimensionError("aligned designer types disagree on the worst realization")
    return WeakImmunityReport(Immunity.IMMUNE, worst_realization=min(common))
