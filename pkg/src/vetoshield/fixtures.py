"""Bundled fixtures: the two-player technology-choice example and seeded
random generators for games, veto equilibria, and pooling scenarios.

The random veto-equilibrium generator does rejection sampling: it draws a
game and a deterministic veto pattern, builds all Bayes-consistent
structures and continuation rules, and keeps the draw only if every type's
veto/accept choice is exactly optimal against the implied continuation
values.  Everything downstream (full-participation replication, refinement
checks, the brute-force harness) is entitled to genuine equilibria, not just
Bayes-consistent bookkeeping.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .defaultgame import (
    ReducedFormGame,
    SelectionPolicy,
    StrategicBayesianGame,
    induced_decision_rule,
    solve_bne,
)
from .errors import ConstructionPreconditionError
from .mechanism import (
    VetoEquilibrium,
    VetoEvent,
    check_veq_consistency,
    continuation_value,
    rule_interim_value,
    veto_lottery,
)
from .belief import SignalingDevice
from .model import (
    DecisionRule,
    InformationStructure,
    OutcomeSpace,
    TypeSpace,
    UtilityTable,
    best_report_value,
)

_EXACT = 1e-10


# ---------------------------------------------------------------------------
# the worked two-player example
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TentExample:
    """Reduced-form duopoly-entry fixture plus its mechanism-stage companion.

    Player 0 privately knows which technology (l or r) is demanded; player 1
    enters and best-responds to her belief about it.  Player 1's default
    value is the tent min(p, 1-p) over the belief p that the type is r; both
    of player 0's types gain when believed to be the opposite type.
    """

    space: TypeSpace
    prior: InformationStructure
    game: ReducedFormGame
    mech_outcomes: OutcomeSpace
    mech_utilities: UtilityTable
    mech_objective: np.ndarray
    unpunished_bound: float = 0.5
    punished_bound: float = 0.0


def tent_example() -> TentExample:
    space = TypeSpace((("l", "r"), ("o",)))
    prior = InformationStructure.independent(space, [[0.5, 0.5], [1.0]])
    game = ReducedFormGame(
        space,
        designated=0,
        curves={
            (0, 0): np.array([[0.0, 0.0], [0.5, 0.5], [1.0, 0.5]]),
            (0, 1): np.array([[0.0, 0.5], [0.5, 0.5], [1.0, 0.0]]),
            (1, 0): np.array([[0.0, 0.0], [0.5, 0.5], [1.0, 0.0]]),
        },
    )
    # Mechanism stage: outcome A is the designer's target and worthless to
    # player 1, outcome B pays her 1; player 0 is indifferent, so the only
    # force in the program is player 1's participation bound.
    outcomes = OutcomeSpace(("A", "B"))
    u = np.zeros((2, 2, 2, 1))
    u[0, :, :, :] = 0.3
    u[1, 1, :, :] = 1.0
    utilities = UtilityTable(space, outcomes, u)
    objective = np.zeros((2, 1, 2))
    objective[:, :, 0] = 1.0
    return TentExample(
        space=space,
        prior=prior,
        game=game,
        mech_outcomes=outcomes,
        mech_utilities=utilities,
        mech_objective=objective,
    )


# ---------------------------------------------------------------------------
# random primitives
# ---------------------------------------------------------------------------

def random_strategic_game(
    rng: np.random.Generator,
    n_types: tuple[int, int] = (2, 2),
    n_actions: tuple[int, int] = (2, 2),
    n_outcomes: int = 2,
) -> StrategicBayesianGame:
    space = TypeSpace(tuple(tuple(f"t{k}" for k in range(n)) for n in n_types))
    outcomes = OutcomeSpace(tuple(f"z{k}" for k in range(n_outcomes)))
    utilities = UtilityTable(
        space, outcomes, rng.uniform(0.0, 1.0, size=(2, n_outcomes) + space.sizes)
    )
    outcome_map = rng.dirichlet(np.ones(n_outcomes), size=n_actions).reshape(
        n_actions + (n_outcomes,)
    )
    actions = tuple(tuple(f"a{k}" for k in range(n)) for n in n_actions)
    return StrategicBayesianGame(space, outcomes, actions, outcome_map, utilities)


def random_independent_prior(
    rng: np.random.Generator, space: TypeSpace, low: float = 0.25, high: float = 0.75
) -> InformationStructure:
    marginals = []
    for n in space.sizes:
        raw = rng.uniform(low, high, size=n)
        marginals.append(raw / raw.sum())
    return InformationStructure.independent(space, marginals)


def random_decision_rule(
    rng: np.random.Generator, space: TypeSpace, outcomes: OutcomeSpace
) -> DecisionRule:
    table = rng.dirichlet(np.ones(outcomes.n_outcomes), size=space.sizes)
    return DecisionRule(space, outcomes, table)


def random_device(
    rng: np.random.Generator, space: TypeSpace, domain: tuple[int, ...], n_signals: int
) -> SignalingDevice:
    sizes = tuple(space.sizes[i] for i in domain)
    kernel = rng.dirichlet(np.ones(n_signals), size=sizes)
    labels = tuple(f"s{k}" for k in range(n_signals))
    return SignalingDevice(space, domain, labels, kernel)


# ---------------------------------------------------------------------------
# veto-equilibrium generators
# ---------------------------------------------------------------------------

def _bayes_structures(
    prior: InformationStructure, veto_probs: tuple[np.ndarray, ...]
) -> tuple[list[tuple[tuple[int, ...], float, InformationStructure]], InformationStructure | None, float]:
    """All positive-probability veto events and the acceptance structure."""
    space = prior.space
    factors = []
    for i, xi in enumerate(veto_probs):
        shape = [1] * space.n_players
        shape[i] = space.sizes[i]
        factors.append(np.asarray(xi).reshape(shape))
    accept_w = np.ones(space.sizes)
    for f in factors:
        accept_w = accept_w * (1.0 - f)
    accept_mass = float(np.sum(prior.table * accept_w))
    events = []
    veto_mass = 1.0 - accept_mass
    for size in range(1, space.n_players + 1):
        for players in itertools.combinations(range(space.n_players), size):
            w = np.ones(space.sizes)
            for i, f in enumerate(factors):
                w = w * (f if i in players else (1.0 - f))
            mass = float(np.sum(prior.table * w))
            if mass <= 1e-12:
                continue
            structure = InformationStructure(space, prior.table * w / mass)
            events.append((players, mass / veto_mass, structure))
    acceptance = (
        InformationStructure(space, prior.table * accept_w / accept_mass)
        if accept_mass > 1e-12
        else None
    )
    return events, acceptance, accept_mass


def _acceptance_rule_candidates(
    rng: np.random.Generator,
    game: StrategicBayesianGame,
    acceptance_structure: InformationStructure,
) -> DecisionRule:
    """A mechanism rule that is truthful at the acceptance structure."""
    policy = SelectionPolicy()
    choice = int(rng.integers(0, 3))
    if choice == 0:
        return induced_decision_rule(game, solve_bne(game, acceptance_structure, policy))
    if choice == 1:
        z = int(rng.integers(0, game.outcomes.n_outcomes))
        return DecisionRule.deterministic(game.space, game.outcomes, z)
    dist = rng.dirichlet(np.ones(game.outcomes.n_outcomes))
    return DecisionRule.constant(game.space, game.outcomes, dist)


def build_veto_equilibrium(
    game: StrategicBayesianGame,
    prior: InformationStructure,
    veto_probs: tuple[np.ndarray, ...],
    acceptance_rule: DecisionRule | None,
    offpath_beliefs: dict[int, np.ndarray],
) -> VetoEquilibrium:
    """Bayes-consistent bookkeeping for a veto pattern (no optimality check)."""
    events, acceptance_structure, accept_mass = _bayes_structures(prior, veto_probs)
    policy = SelectionPolicy()
    records = tuple(
        VetoEvent(
            players=players,
            prob=prob,
            structure=structure,
            rule=induced_decision_rule(game, solve_bne(game, structure, policy)),
        )
        for players, prob, structure in events
    )
    acceptance = None
    if acceptance_structure is not None:
        rule = acceptance_rule
        if rule is None:
            rule = induced_decision_rule(game, solve_bne(game, acceptance_structure, policy))
        acceptance = (acceptance_structure, rule)
    return VetoEquilibrium(
        prior=prior,
        veto_probs=veto_probs,
        events=records,
        acceptance=acceptance,
        offpath_beliefs=offpath_beliefs,
    )


def _branch_values(
    game: StrategicBayesianGame,
    veq: VetoEquilibrium,
    player: int,
    belief: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-type veto and accept payoffs against the equilibrium continuation.

    The veto branch is the punishment lottery a unilateral vetoer faces
    (others keep their on-path behavior); the accept branch splits between
    the mechanism when nobody else vetoes and the stored continuations when
    somebody does.
    """
    space = veq.space
    prior = veq.prior
    channels = tuple(
        SignalingDevice.binary_channel(space, j, veq.veto_probs[j])
        for j in range(space.n_players)
    )
    records = tuple((e.structure, e.rule) for e in veq.events)
    lottery = veto_lottery(channels, prior, player, belief)
    n_types = space.sizes[player]
    veto_vals = np.zeros(n_types)
    for t in range(n_types):
        veto_vals[t] = sum(
            w * continuation_value(game, post, player, t, records)
            for w, post in lottery.atoms
        )

    co_players = space.co_players(player)
    accept_vals = np.zeros(n_types)
    for t in range(n_types):
        cond = prior.conditional(player, t)
        total = 0.0
        for subset_size in range(0, len(co_players) + 1):
            for others in itertools.combinations(co_players, subset_size):
                w = np.ones(space.co_sizes(player))
                for k, j in enumerate(co_players):
                    xi = veq.veto_probs[j]
                    shape = [1] * len(co_players)
                    shape[k] = space.sizes[j]
                    f = np.asarray(xi).reshape(shape)
                    w = w * (f if j in others else (1.0 - f))
                mass = float(np.sum(cond * w))
                if mass <= 1e-14:
                    continue
                event_belief = cond * w / mass
                if not others:
                    if veq.acceptance is None:
                        raise ConstructionPreconditionError(
                            "acceptance branch reached but no acceptance rule stored"
                        )
                    value = best_report_value(
                        veq.acceptance[1], game.utilities, player, t, event_belief
                    )
                else:
                    rule = next(
                        (e.rule for e in veq.events if e.players == others), None
                    )
                    if rule is not None:
                        value = best_report_value(
                            rule, game.utilities, player, t, event_belief
                        )
                    else:
                        co_table = prior.co_marginal(player) * w
                        co_table /= co_table.sum()
                        structure = InformationStructure.from_factors(
                            space, player, belief, co_table
                        )
                        value = continuation_value(game, structure, player, t, ())
                total += mass * value
        accept_vals[t] = total
    return veto_vals, accept_vals


def _belief_candidates(
    prior: InformationStructure, player: int
) -> list[np.ndarray]:
    n = prior.space.sizes[player]
    candidates = [np.eye(n)[t] for t in range(n)]
    candidates.append(prior.marginal(player))
    return candidates


@dataclass(frozen=True, eq=False)
class VeqFixture:
    game: StrategicBayesianGame
    veq: VetoEquilibrium
    veto_values: dict[int, np.ndarray]
    accept_values: dict[int, np.ndarray]


def random_equilibrium_veq(
    rng: np.random.Generator,
    max_attempts: int = 400,
) -> VeqFixture:
    """Draw a genuine veto equilibrium on a 2x2-type, 2-action, 2-outcome game.

    Veto patterns are deterministic per type (no indifference to hit), each
    player keeps at least one accepting type, and every veto/accept choice is
    verified exactly optimal before the draw is accepted.
    """
    for _ in range(max_attempts):
        game = random_strategic_game(rng)
        prior = random_independent_prior(rng, game.space)
        patterns = [
            (np.array(p0, dtype=float), np.array(p1, dtype=float))
            for p0 in ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0))
            for p1 in ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0))
            if any(p0) or any(p1)
        ]
        veto_probs = patterns[int(rng.integers(0, len(patterns)))]
        events, acceptance_structure, _ = _bayes_structures(prior, veto_probs)
        if acceptance_structure is None:
            continue
        acceptance_rule = _acceptance_rule_candidates(rng, game, acceptance_structure)

        probe = build_veto_equilibrium(game, prior, veto_probs, acceptance_rule, {})
        beliefs: dict[int, np.ndarray] = {}
        stored_events = {players for players, _, _ in events}
        feasible = True
        chosen: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        for i in range(game.space.n_players):
            if (i,) in stored_events:
                options: list[np.ndarray | None] = [None]
            else:
                options = list(_belief_candidates(prior, i))
            best = None
            for q in options:
                belief = (
                    q
                    if q is not None
                    else next(e for e in probe.events if e.players == (i,)).structure.marginal(i)
                )
                veto_vals, accept_vals = _branch_values(game, probe, i, belief)
                xi = veto_probs[i]
                slack = min(
                    (accept_vals[t] - veto_vals[t]) if xi[t] == 0.0 else (veto_vals[t] - accept_vals[t])
                    for t in range(game.space.sizes[i])
                )
                if best is None or slack > best[0]:
                    best = (slack, q, veto_vals, accept_vals)
            if best is None or best[0] < -_EXACT:
                feasible = False
                break
            slack, q, veto_vals, accept_vals = best
            if q is not None:
                beliefs[i] = q
            chosen[i] = (veto_vals, accept_vals)
        if not feasible:
            continue
        veq = build_veto_equilibrium(game, prior, veto_probs, acceptance_rule, beliefs)
        report = check_veq_consistency(veq)
        if not report.ok:
            continue
        return VeqFixture(
            game=game,
            veq=veq,
            veto_values={i: chosen[i][0] for i in chosen},
            accept_values={i: chosen[i][1] for i in chosen},
        )
    raise ConstructionPreconditionError(
        f"no equilibrium veto pattern found in {max_attempts} attempts"
    )


def indifferent_interior_veq(prob: float = 0.5) -> tuple[StrategicBayesianGame, VetoEquilibrium]:
    """Interior mixing fixture: constant payoffs make every type exactly
    indifferent, so any veto probability is equilibrium behavior."""
    space = TypeSpace((("l", "r"), ("o",)))
    outcomes = OutcomeSpace(("z0", "z1"))
    u = np.zeros((2, 2, 2, 1))
    u[0, :, :, :] = 0.4
    u[1, :, :, :] = 0.6
    utilities = UtilityTable(space, outcomes, u)
    outcome_map = np.array([[[1.0, 0.0], [0.0, 1.0]], [[0.0, 1.0], [1.0, 0.0]]])
    game = StrategicBayesianGame(space, outcomes, (("a", "b"), ("a", "b")), outcome_map, utilities)
    prior = InformationStructure.independent(space, [[0.5, 0.5], [1.0]])
    veto_probs = (np.array([0.0, prob]), np.array([0.0]))
    veq = build_veto_equilibrium(
        game, prior, veto_probs, None,
        offpath_beliefs={1: np.array([1.0])},
    )
    return game, veq


def zero_veto_veq(
    rng: np.random.Generator,
) -> tuple[StrategicBayesianGame, VetoEquilibrium]:
    """Degenerate fixture: nobody ever vetoes; beliefs are free and stored."""
    game = random_strategic_game(rng)
    prior = random_independent_prior(rng, game.space)
    veto_probs = tuple(np.zeros(n) for n in game.space.sizes)
    acceptance_rule = _acceptance_rule_candidates(rng, game, prior)
    beliefs = {i: _belief_candidates(prior, i)[-1] for i in range(game.space.n_players)}
    veq = build_veto_equilibrium(game, prior, veto_probs, acceptance_rule, beliefs)
    return game, veq


# ---------------------------------------------------------------------------
# informed-principal fixtures
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PrincipalFixture:
    game: StrategicBayesianGame
    prior: InformationStructure
    proposal_probs: np.ndarray
    rules: tuple[DecisionRule, ...]
    labels: tuple[str, ...]


def random_principal_fixture(
    rng: np.random.Generator, max_attempts: int = 200
) -> PrincipalFixture:
    """Separate-and-veto fixture with full acceptance of every proposal.

    Player 0 (the principal) proposes by type; each proposal is a constant
    rule, so it is truthful anywhere, and the draw is kept only when each
    agent type prefers every proposal to her punished unilateral veto and
    each principal type prefers her own proposal.
    """
    for _ in range(max_attempts):
        game = random_strategic_game(rng)
        prior = random_independent_prior(rng, game.space)
        rules = tuple(
            DecisionRule.constant(game.space, game.outcomes, rng.dirichlet(np.ones(game.outcomes.n_outcomes)))
            for _ in range(2)
        )
        proposal_probs = np.eye(2)
        ok = True
        # principal types prefer their own proposal under the prior
        for t0 in range(2):
            own = rule_interim_value(rules[t0], game.utilities, prior, 0, t0)
            other = rule_interim_value(rules[1 - t0], game.utilities, prior, 0, t0)
            if own < other - _EXACT:
                ok = False
                break
        if not ok:
            continue
        # agents accept each proposal against the post-proposal belief
        for k in range(2):
            proposal_prior = InformationStructure.from_factors(
                game.space, 0, np.eye(2)[k], prior.co_marginal(0)
            )
            for t1 in range(game.space.sizes[1]):
                inside = rule_interim_value(rules[k], game.utilities, proposal_prior, 1, t1)
                outside = continuation_value(
                    game, proposal_prior, 1, t1, ()
                )
                if inside < outside - _EXACT:
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            continue
        return PrincipalFixture(
            game=game,
            prior=prior,
            proposal_probs=proposal_probs,
            rules=rules,
            labels=("mechA", "mechB"),
        )
    raise ConstructionPreconditionError(
        f"no acceptable principal fixture in {max_attempts} attempts"
    )
