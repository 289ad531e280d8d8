"""The status quo: finite Bayesian games, equilibrium computation, and the
interim outside-option values they induce.

Equilibria of two-player games are found exactly by support enumeration:
for every assignment of supports to type-agents, the opponent-side mixing
that makes all supported actions indifferent (and unsupported ones weakly
inferior) is a linear feasibility problem, solved with the deterministic
simplex.  Games with three or more players fall back to pure-strategy
enumeration.  Every accepted profile is re-verified by an independent
best-response sweep.

Reduced-form games bypass equilibrium computation entirely: they carry
piecewise-linear interim values over the belief about one designated
player and are evaluated by interpolation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .config import TOL_EQM, TOL_NORM
from .errors import (
    DimensionError,
    DomainError,
    InvalidDistributionError,
    ResolutionExhaustedError,
)
from .lp import solve_lp
from .errors import LPInfeasibleError, LPUnboundedError
from .model import (
    DecisionRule,
    InformationStructure,
    OutcomeSpace,
    TypeSpace,
    UtilityTable,
    _frozen,
    best_report_value,
    expected_utility,
)

SELECTION_KINDS = ("deviator_worst", "designer_worst", "lexicographic_first")


@dataclass(frozen=True)
class SelectionPolicy:
    """Which equilibrium to report when several exist.

    ``deviator_worst`` minimizes the focus player's (optionally weighted)
    interim value, matching a punishment objective; ``designer_worst``
    minimizes total ex-ante welfare; ``lexicographic_first`` takes the first
    equilibrium in the deterministic enumeration order.
    """

    kind: str = "lexicographic_first"
    focus_player: int | None = None
    focus_weights: tuple[float, ...] | None = None
    tie_tol: float = 1e-10

    def __post_init__(self):
        if self.kind not in SELECTION_KINDS:
            raise DimensionError(f"unknown selection policy {self.kind!r}")
        if self.kind == "deviator_worst" and self.focus_player is None:
            raise DimensionError("deviator_worst needs a focus player")
        if self.focus_weights is not None:
            object.__setattr__(self, "focus_weights", tuple(float(w) for w in self.focus_weights))

    def cache_key(self) -> tuple:
        return (self.kind, self.focus_player, self.focus_weights, self.tie_tol)


@dataclass(frozen=True, eq=False)
class StrategicBayesianGame:
    """Finite-action incomplete-information game played if the mechanism fails.

    ``outcome_map[*action_profile, outcome]`` pushes action profiles into
    lotteries over the basic outcome set shared with the mechanism side.
    """

    space: TypeSpace
    outcomes: OutcomeSpace
    action_labels: tuple[tuple[str, ...], ...]
    outcome_map: np.ndarray
    utilities: UtilityTable

    def __post_init__(self):
        if len(self.action_labels) != self.space.n_players:
            raise DimensionError("one action set per player required")
        object.__setattr__(self, "action_labels", tuple(tuple(a) for a in self.action_labels))
        om = np.asarray(self.outcome_map, dtype=float)
        expected = self.action_sizes + (self.outcomes.n_outcomes,)
        if om.shape != expected:
            raise DimensionError(f"outcome_map shape {om.shape} != {expected}")
        if np.any(om < -TOL_NORM) or np.any(np.abs(om.sum(axis=-1) - 1.0) > TOL_NORM):
            raise InvalidDistributionError("outcome_map rows must be distributions")
        om = om.copy()
        om[om < 0] = 0.0
        object.__setattr__(self, "outcome_map", _frozen(om))
        if self.utilities.space != self.space or self.utilities.outcomes != self.outcomes:
            raise DimensionError("utilities live on different spaces")
        # payoffs[i, *actions, *types]: action-profile cell values
        pay = np.stack(
            [
                np.tensordot(self.outcome_map, self.utilities.values[i], axes=([-1], [0]))
                for i in range(self.space.n_players)
            ]
        )
        object.__setattr__(self, "_payoffs", _frozen(pay))
        object.__setattr__(self, "_bne_cache", {})

    @property
    def action_sizes(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.action_labels)

    def payoffs(self) -> np.ndarray:
        return self._payoffs


@dataclass(frozen=True, eq=False)
class ReducedFormGame:
    """Piecewise-linear interim values over the belief about one player.

    ``curves[(player, type)]`` is a breakpoint list ``[[p, v], ...]`` with
    ``p`` the probability of the designated player's *second* type, covering
    [0, 1].  Restricted to two players and a two-type designated player,
    which is exactly the shape of the worked technology-choice fixture.
    """

    space: TypeSpace
    designated: int
    curves: Mapping[tuple[int, int], np.ndarray]

    def __post_init__(self):
        if self.space.n_players != 2:
            raise DimensionError("reduced-form games are two-player objects")
        if self.space.sizes[self.designated] != 2:
            raise DimensionError("the designated player must have exactly two types")
        curves = {}
        for i in range(self.space.n_players):
            for t in range(self.space.sizes[i]):
                if (i, t) not in self.curves:
                    raise DimensionError(f"missing value curve for player {i} type {t}")
        for key, pts in self.curves.items():
            arr = np.asarray(pts, dtype=float)
            if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
                raise DimensionError(f"curve {key}: need a (k, 2) breakpoint array")
            if not np.all(np.isfinite(arr)):
                raise DimensionError(f"curve {key}: non-finite breakpoints")
            if abs(arr[0, 0]) > TOL_NORM or abs(arr[-1, 0] - 1.0) > TOL_NORM:
                raise DomainError(f"curve {key}: breakpoints must span [0, 1]")
            if np.any(np.diff(arr[:, 0]) < 0):
                raise DomainError(f"curve {key}: breakpoints out of order")
            curves[key] = _frozen(arr)
        object.__setattr__(self, "curves", curves)


Game = StrategicBayesianGame | ReducedFormGame


def evaluate_reduced_form(game: ReducedFormGame, player: int, type_index: int, belief: float) -> float:
    """Interpolate the interim value at a belief point in [0, 1]."""
    if not -TOL_NORM <= belief <= 1.0 + TOL_NORM:
        raise DomainError(f"belief {belief!r} outside [0, 1]")
    belief = min(max(belief, 0.0), 1.0)
    pts = game.curves[(player, type_index)]
    return float(np.interp(belief, pts[:, 0], pts[:, 1]))


@dataclass(frozen=True, eq=False)
class BNEProfile:
    """Mixed strategies per (player, type) plus the verified deviation slack."""

    strategies: tuple[np.ndarray, ...]
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "strategies", tuple(_frozen(s) for s in self.strategies))

    def key(self) -> tuple:
        return tuple(tuple(np.round(s.ravel(), 9)) for s in self.strategies)


def _active_types(structure: InformationStructure) -> list[list[int]]:
    return [
        [t for t in range(structure.space.sizes[i]) if structure.marginal(i)[t] > 0.0]
        for i in range(structure.space.n_players)
    ]


def _interim_action_values(
    game: StrategicBayesianGame,
    structure: InformationStructure,
    player: int,
    type_index: int,
    strategies: Sequence[np.ndarray],
) -> np.ndarray:
    """Expected payoff of each pure action against the others' strategies."""
    space = game.space
    cond = structure.conditional(player, type_index)
    pay = game.payoffs()[player]
    n_actions = game.action_sizes[player]
    values = np.zeros(n_actions)
    co_players = space.co_players(player)
    for co_profile in space.co_profiles(player):
        w = cond[tuple(co_profile)]
        if w == 0.0:
            continue
        for co_actions in itertools.product(*(range(game.action_sizes[j]) for j in co_players)):
            prob = 1.0
            for j, (pl, a) in enumerate(zip(co_players, co_actions)):
                prob *= strategies[pl][co_profile[j], a]
            if prob == 0.0:
                continue
            for a in range(n_actions):
                actions = list(co_actions)
                actions.insert(player, a)
                types = list(co_profile)
                types.insert(player, type_index)
                values[a] += w * prob * pay[tuple(actions) + tuple(types)]
    return values


def best_response_slack(
    game: StrategicBayesianGame,
    structure: InformationStructure,
    strategies: Sequence[np.ndarray],
) -> float:
    """Largest gain any supported type can get from a pure deviation."""
    worst = 0.0
    for i, active in enumerate(_active_types(structure)):
        for t in active:
            values = _interim_action_values(game, structure, i, t, strategies)
            current = float(strategies[i][t] @ values)
            worst = max(worst, float(values.max()) - current)
    return worst


def _support_assignments(n_actions: int) -> list[tuple[int, ...]]:
    out = []
    for size in range(1, n_actions + 1):
        out.extend(itertools.combinations(range(n_actions), size))
    return out


def _two_player_coefficients(
    game: StrategicBayesianGame, structure: InformationStructure, player: int, active_other: list[int]
) -> dict[int, np.ndarray]:
    """EU of (type, action) of ``player`` as linear forms in the other's strategy.

    Returns per active own-type a matrix (n_own_actions, n_vars) where the
    variables are the other player's (type, action) pairs in row-major order
    over ``active_other`` types.
    """
    other = 1 - player
    n_own = game.action_sizes[player]
    n_oth = game.action_sizes[other]
    pay = game.payoffs()[player]
    coeffs = {}
    for t in range(structure.space.sizes[player]):
        if structure.marginal(player)[t] <= 0.0:
            continue
        cond = structure.conditional(player, t)  # over other player's types
        mat = np.zeros((n_own, len(active_other) * n_oth))
        for a in range(n_own):
            for k, s in enumerate(active_other):
                for b in range(n_oth):
                    if player == 0:
                        cell = pay[a, b, t, s]
                    else:
                        cell = pay[b, a, s, t]
                    mat[a, k * n_oth + b] = cond[s] * cell
        coeffs[t] = mat
    return coeffs


def _solve_side(
    coeffs: dict[int, np.ndarray],
    own_supports: dict[int, tuple[int, ...]],
    other_supports: dict[int, tuple[int, ...]],
    active_other: list[int],
    n_oth_actions: int,
    objective: np.ndarray | None,
) -> np.ndarray | None:
    """Find the other side's mixing that rationalizes ``own_supports``.

    Variables are the other player's full (active type, action) grid;
    off-support entries are pinned to zero by equality rows.
    """
    n_vars = len(active_other) * n_oth_actions
    a_eq, b_eq, a_ub, b_ub = [], [], [], []
    for k, s in enumerate(active_other):
        row = np.zeros(n_vars)
        row[[k * n_oth_actions + b for b in other_supports[s]]] = 1.0
        a_eq.append(row)
        b_eq.append(1.0)
        for b in range(n_oth_actions):
            if b not in other_supports[s]:
                row = np.zeros(n_vars)
                row[k * n_oth_actions + b] = 1.0
                a_eq.append(row)
                b_eq.append(0.0)
    for t, mat in coeffs.items():
        sup = own_supports[t]
        ref = sup[0]
        for a in sup[1:]:
            a_eq.append(mat[a] - mat[ref])
            b_eq.append(0.0)
        for a in range(mat.shape[0]):
            if a not in sup:
                a_ub.append(mat[a] - mat[ref])
                b_ub.append(0.0)
    c = np.zeros(n_vars) if objective is None else objective
    try:
        res = solve_lp(
            c,
            np.array(a_eq),
            np.array(b_eq),
            np.array(a_ub) if a_ub else None,
            np.array(b_ub) if b_ub else None,
        )
    except (LPInfeasibleError, LPUnboundedError):
        return None
    return res.x


def _assemble_strategies(
    game: StrategicBayesianGame,
    active: list[list[int]],
    x_vec: np.ndarray,
    y_vec: np.ndarray,
) -> tuple[np.ndarray, ...]:
    strategies = []
    for i, (vec, acts) in enumerate(((x_vec, active[0]), (y_vec, active[1]))):
        n_a = game.action_sizes[i]
        strat = np.full((game.space.sizes[i], n_a), 1.0 / n_a)
        for k, t in enumerate(acts):
            row = np.clip(vec[k * n_a : (k + 1) * n_a], 0.0, None)
            strat[t] = row / row.sum()
        strategies.append(strat)
    return tuple(strategies)


def _enumerate_two_player(
    game: StrategicBayesianGame,
    structure: InformationStructure,
    policy: SelectionPolicy,
    tol: float,
) -> list[BNEProfile]:
    active = _active_types(structure)
    coeffs0 = _two_player_coefficients(game, structure, 0, active[1])
    coeffs1 = _two_player_coefficients(game, structure, 1, active[0])
    per_agent0 = {t: _support_assignments(game.action_sizes[0]) for t in active[0]}
    per_agent1 = {t: _support_assignments(game.action_sizes[1]) for t in active[1]}

    combos = []
    for sup0 in itertools.product(*(per_agent0[t] for t in active[0])):
        for sup1 in itertools.product(*(per_agent1[t] for t in active[1])):
            size = sum(len(s) for s in sup0) + sum(len(s) for s in sup1)
            combos.append((size, sup0, sup1))
    combos.sort(key=lambda rec: (rec[0], rec[1], rec[2]))

    focus_obj0 = focus_obj1 = None
    if policy.kind == "deviator_worst":
        w = policy.focus_weights
        i = policy.focus_player
        weights = (
            np.asarray(w, dtype=float)
            if w is not None
            else structure.marginal(i)
        )
        if i == 0:
            focus_obj0 = weights  # objective lives on the y-side LP
        else:
            focus_obj1 = weights

    found: list[BNEProfile] = []
    seen = set()
    for _, sup0, sup1 in combos:
        s0 = dict(zip(active[0], sup0))
        s1 = dict(zip(active[1], sup1))
        obj_y = None
        if focus_obj0 is not None:
            obj_y = np.zeros(len(active[1]) * game.action_sizes[1])
            for t in active[0]:
                obj_y += focus_obj0[t] * coeffs0[t][s0[t][0]]
        y = _solve_side(coeffs0, s0, s1, active[1], game.action_sizes[1], obj_y)
        if y is None:
            continue
        obj_x = None
        if focus_obj1 is not None:
            obj_x = np.zeros(len(active[0]) * game.action_sizes[0])
            for s in active[1]:
                obj_x += focus_obj1[s] * coeffs1[s][s1[s][0]]
        x = _solve_side(coeffs1, s1, s0, active[0], game.action_sizes[0], obj_x)
        if x is None:
            continue
        strategies = _assemble_strategies(game, active, x, y)
        slack = best_response_slack(game, structure, strategies)
        if slack > tol:
            continue
        profile = BNEProfile(strategies, epsilon=slack)
        if profile.key() in seen:
            continue
        seen.add(profile.key())
        found.append(profile)
    return found


def _enumerate_pure(
    game: StrategicBayesianGame,
    structure: InformationStructure,
    tol: float,
) -> list[BNEProfile]:
    active = _active_types(structure)
    agents = [(i, t) for i in range(game.space.n_players) for t in active[i]]
    options = [range(game.action_sizes[i]) for i, _ in agents]
    found = []
    for assignment in itertools.product(*options):
        strategies = []
        for i in range(game.space.n_players):
            n_a = game.action_sizes[i]
            strat = np.full((game.space.sizes[i], n_a), 1.0 / n_a)
            for (j, t), a in zip(agents, assignment):
                if j == i:
                    strat[t] = 0.0
                    strat[t, a] = 1.0
            strategies.append(strat)
        slack = best_response_slack(game, structure, strategies)
        if slack <= tol:
            found.append(BNEProfile(tuple(strategies), epsilon=slack))
    return found


def _profile_interim_values(
    game: StrategicBayesianGame,
    structure: InformationStructure,
    profile: BNEProfile,
) -> dict[tuple[int, int], float]:
    values = {}
    for i, active in enumerate(_active_types(structure)):
        for t in active:
            action_values = _interim_action_values(game, structure, i, t, profile.strategies)
            values[(i, t)] = float(profile.strategies[i][t] @ action_values)
    return values


def solve_bne(
    game: StrategicBayesianGame,
    structure: InformationStructure,
    policy: SelectionPolicy = SelectionPolicy(),
    tol: float = TOL_EQM,
) -> BNEProfile:
    """Equilibrium of the default game at a structure, chosen by ``policy``.

    Types with zero marginal probability play uniformly and are excluded
    from the equilibrium conditions.  Raises ``ResolutionExhaustedError``
    when the enumeration finds nothing at the finest support size.
    """
    if game.space != structure.space:
        raise DimensionError("game and structure live on different type spaces")
    key = (structure.table.tobytes(), policy.cache_key(), tol)
    cached = game._bne_cache.get(key)
    if cached is not None:
        return cached

    if game.space.n_players == 2:
        found = _enumerate_two_player(game, structure, policy, tol)
    else:
        found = _enumerate_pure(game, structure, tol)
    if not found:
        max_support = max(game.action_sizes) if game.space.n_players == 2 else 1
        raise ResolutionExhaustedError(
            f"no equilibrium at support sizes up to {max_support}", max_support=max_support
        )

    if policy.kind == "lexicographic_first":
        choice = found[0]
    else:
        def score(profile: BNEProfile) -> float:
            values = _profile_interim_values(game, structure, profile)
            if policy.kind == "deviator_worst":
                i = policy.focus_player
                weights = (
                    np.asarray(policy.focus_weights, dtype=float)
                    if policy.focus_weights is not None
                    else structure.marginal(i)
                )
                return sum(weights[t] * v for (j, t), v in values.items() if j == i)
            return sum(structure.marginal(i)[t] * v for (i, t), v in values.items())

        scores = [score(p) for p in found]
        best = min(scores)
        choice = found[next(k for k, s in enumerate(scores) if s <= best + policy.tie_tol)]
    game._bne_cache[key] = choice
    return choice


def induced_decision_rule(game: StrategicBayesianGame, profile: BNEProfile) -> DecisionRule:
    """Push the equilibrium's mixed action profile through the outcome map."""
    space = game.space
    table = np.zeros(space.sizes + (game.outcomes.n_outcomes,))
    for t_profile in space.profiles():
        weights = np.ones(game.action_sizes)
        for i, t in enumerate(t_profile):
            shape = [1] * space.n_players
            shape[i] = game.action_sizes[i]
            weights = weights * profile.strategies[i][t].reshape(shape)
        table[t_profile] = np.tensordot(weights, game.outcome_map, axes=space.n_players)
    return DecisionRule(space, game.outcomes, table)


def interim_value(
    rule: DecisionRule,
    utilities: UtilityTable,
    structure: InformationStructure,
    player: int,
    type_index: int,
) -> float:
    """Truthful interim expected utility under a rule."""
    return expected_utility(rule, utilities, structure, player, type_index, type_index)


def outside_option_value(
    game: Game,
    structure: InformationStructure,
    player: int,
    type_index: int,
    policy: SelectionPolicy = SelectionPolicy(),
) -> float:
    """Continuation value of a type if the default game is played at ``structure``.

    Strategic games: the truthful interim value of the selected equilibrium's
    induced rule; types outside the structure's support get their best-report
    value against the co-players' joint marginal.  Reduced-form games: the
    piecewise-linear value at the implied belief about the designated player.
    """
    if isinstance(game, ReducedFormGame):
        d = game.designated
        if player == d:
            belief = structure.marginal(d)[1]
        elif structure.marginal(player)[type_index] > 0.0:
            belief = structure.conditional(player, type_index)[1]
        else:
            belief = structure.co_marginal(player)[1]
        return evaluate_reduced_form(game, player, type_index, float(belief))
    profile = solve_bne(game, structure, policy)
    rule = induced_decision_rule(game, profile)
    if structure.marginal(player)[type_index] > 0.0:
        return interim_value(rule, game.utilities, structure, player, type_index)
    co_belief = structure.co_marginal(player)
    return best_report_value(rule, game.utilities, player, type_index, co_belief)
