"""Brute-force oracle over the grand game on tiny instances.

Candidate strategy profiles put veto probabilities on a 1/G grid, reports
are pure, off-path beliefs about a unilateral vetoer come from a belief
grid, and continuation play after any veto is resolved by the default-game
solver at the realized structure.  A profile is kept when no type gains
more than the PBE tolerance from any single-stage deviation.  A found
profile is a certificate; an empty result means "none at this resolution".

Signal reports are truthful by default: in every construction the device is
on-path payoff-irrelevant and a deviator's own realization is disregarded,
so truthful reporting is a best response there.  Instances can opt into
strategic signal reports, which enlarges the enumeration accordingly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .belief import SignalingDevice
from .config import DEFAULT_CONFIG, RunConfig
from .defaultgame import (
    Game,
    ReducedFormGame,
    SelectionPolicy,
    StrategicBayesianGame,
    evaluate_reduced_form,
    induced_decision_rule,
    solve_bne,
)
from .errors import DimensionError, InstanceTooLargeError
from .mechanism import (
    FullParticipationMechanism,
    VetoEquilibrium,
    VetoEvent,
    construct_full_participation,
)
from .model import (
    DecisionRule,
    InformationStructure,
    TypeSpace,
    best_report_value,
)
from .punishment import simplex_grid


@dataclass(frozen=True, eq=False)
class GrandGameInstance:
    """One proposed mechanism plus device against a default game.

    ``mechanism`` is a decision rule for strategic games; reduced-form games
    instead carry per-player arrays of interim payoffs promised to each type
    on acceptance.  ``channels`` are per-player signaling devices, or None
    when informational punishment is absent.
    """

    game: Game
    prior: InformationStructure
    mechanism: DecisionRule | tuple[np.ndarray, ...]
    channels: tuple[SignalingDevice, ...] | None = None
    strategy_grid: int = 10
    belief_grid: int = 10
    cap: int = 10_000_000
    sigma_truthful: bool = True

    def __post_init__(self):
        if self.strategy_grid < 2 or self.belief_grid < 2:
            raise DimensionError("grids must have at least two steps")
        if isinstance(self.game, ReducedFormGame):
            values = tuple(np.asarray(v, dtype=float) for v in self.mechanism)
            if tuple(v.shape[0] for v in values) != self.prior.space.sizes:
                raise DimensionError("one mechanism payoff per (player, type) required")
            object.__setattr__(self, "mechanism", values)
        elif not isinstance(self.mechanism, DecisionRule):
            raise DimensionError("strategic instances need a decision-rule mechanism")

    @property
    def space(self) -> TypeSpace:
        return self.prior.space


@dataclass(frozen=True, eq=False)
class Profile:
    """One grid candidate: veto mixing plus pure report maps."""

    veto_probs: tuple[np.ndarray, ...]
    sigma_reports: tuple[tuple[int, ...], ...] | None = None  # None = truthful
    mech_reports: tuple[tuple[int, ...], ...] | None = None   # None = truthful


@dataclass(frozen=True, eq=False)
class HarnessEquilibrium:
    profile: Profile
    offpath_beliefs: dict[int, np.ndarray]
    slack: float
    marginal: bool
    veq: VetoEquilibrium | None


def _sigma_row(instance: GrandGameInstance, player: int, report: int) -> np.ndarray:
    return instance.channels[player].kernel[report]


def _event_structure(
    instance: GrandGameInstance,
    profile: Profile,
    vetoers: tuple[int, ...],
    signals: tuple[int, ...] | None,
    deviator: int | None,
    deviator_belief: np.ndarray | None,
) -> InformationStructure | None:
    """Public structure after observing the veto set and signal realizations.

    Blocks of players acting on path follow Bayes through their veto and
    report behavior; when the whole event is publicly impossible, the
    deviator's block is replaced by the assigned off-path belief (her own
    signal is disregarded) while the co-players' blocks stay Bayesian.
    Returns None when even the co-players' part of the event is impossible.
    """
    space = instance.space
    factors = []
    for j in range(space.n_players):
        xi = profile.veto_probs[j]
        f = xi if j in vetoers else 1.0 - xi
        if signals is not None:
            reports = (
                profile.sigma_reports[j]
                if profile.sigma_reports is not None
                else tuple(range(space.sizes[j]))
            )
            lik = np.array([_sigma_row(instance, j, reports[t])[signals[j]] for t in range(space.sizes[j])])
            f = f * lik
        factors.append(f)
    table = instance.prior.table.copy()
    for j, f in enumerate(factors):
        shape = [1] * space.n_players
        shape[j] = space.sizes[j]
        table = table * f.reshape(shape)
    mass = table.sum()
    if mass > 0.0:
        return InformationStructure(space, table / mass)
    if deviator is None or deviator_belief is None:
        return None
    co_table = instance.prior.co_marginal(deviator)
    for k, j in enumerate(space.co_players(deviator)):
        shape = [1] * (space.n_players - 1)
        shape[k] = space.sizes[j]
        co_table = co_table * factors[j].reshape(shape)
    co_mass = co_table.sum()
    if co_mass <= 0.0:
        return None
    return InformationStructure.from_factors(space, deviator, deviator_belief, co_table / co_mass)


def _continuation_value(
    instance: GrandGameInstance,
    structure: InformationStructure,
    player: int,
    type_index: int,
    private_belief: np.ndarray,
    policy: SelectionPolicy,
) -> float:
    """A type's payoff when the default game is played at a public structure.

    Behavior comes from the solved equilibrium at the public structure; the
    evaluated type best-responds under her private belief about co-types.
    Reduced-form games read the value curves instead: the designated player
    is priced by the public belief about her, everyone else by her own.
    """
    game = instance.game
    if isinstance(game, ReducedFormGame):
        d = game.designated
        if player == d:
            return evaluate_reduced_form(game, player, type_index, float(structure.marginal(d)[1]))
        return evaluate_reduced_form(game, player, type_index, float(private_belief[1]))
    profile = solve_bne(game, structure, policy)
    rule = induced_decision_rule(game, profile)
    return best_report_value(rule, game.utilities, player, type_index, private_belief)


def _mechanism_payoff(
    instance: GrandGameInstance,
    player: int,
    type_index: int,
    own_report: int | None,
    co_belief: np.ndarray,
    profile: Profile,
) -> float:
    """Interim payoff from unanimous acceptance given everyone's reports."""
    game = instance.game
    if isinstance(game, ReducedFormGame):
        return float(instance.mechanism[player][type_index])
    space = instance.space
    rule: DecisionRule = instance.mechanism
    total = 0.0
    for co_profile in space.co_profiles(player):
        w = co_belief[co_profile]
        if w == 0.0:
            continue
        reports = []
        for k, j in enumerate(space.co_players(player)):
            m = (
                profile.mech_reports[j][co_profile[k]]
                if profile.mech_reports is not None
                else co_profile[k]
            )
            reports.append(m)
        reports.insert(player, own_report)
        types = list(co_profile)
        types.insert(player, type_index)
        row = rule.table[tuple(reports)]
        total += w * float(
            sum(row[z] * game.utilities.u(player, z, types) for z in range(game.outcomes.n_outcomes))
        )
    return total


def _stage_payoff(
    instance: GrandGameInstance,
    profile: Profile,
    player: int,
    type_index: int,
    veto: bool,
    sigma_report: int | None,
    mech_report: int | None,
    offpath_beliefs: dict[int, np.ndarray],
    policy: SelectionPolicy,
) -> float:
    """Expected payoff of one type fixing her own choices, others on path."""
    space = instance.space
    cond = instance.prior.conditional(player, type_index)
    co_players = space.co_players(player)
    n_co = len(co_players)
    total = 0.0

    # others' veto patterns partition the co-space
    for others in itertools.chain.from_iterable(
        itertools.combinations(co_players, k) for k in range(n_co + 1)
    ):
        weight = cond.copy()
        for k, j in enumerate(co_players):
            xi = profile.veto_probs[j]
            f = xi if j in others else 1.0 - xi
            shape = [1] * n_co
            shape[k] = space.sizes[j]
            weight = weight * f.reshape(shape)
        mass = float(weight.sum())
        if mass <= 0.0:
            continue
        if not others and not veto:
            total += mass * _mechanism_payoff(
                instance, player, type_index, mech_report, weight / mass, profile
            )
            continue
        vetoers = tuple(sorted(others + ((player,) if veto else ())))
        if instance.channels is None:
            value = _event_value(
                instance, profile, player, type_index, vetoers, None, weight / mass,
                offpath_beliefs, policy,
            )
            total += mass * value
            continue
        # signals realize for every player; own signal follows the chosen report
        own_report = sigma_report if sigma_report is not None else type_index
        for signals in itertools.product(*(range(ch.n_signals) for ch in instance.channels)):
            own_lik = float(_sigma_row(instance, player, own_report)[signals[player]])
            if own_lik == 0.0:
                continue
            sig_weight = weight.copy()
            for k, j in enumerate(co_players):
                reports = (
                    profile.sigma_reports[j]
                    if profile.sigma_reports is not None
                    else tuple(range(space.sizes[j]))
                )
                lik = np.array(
                    [_sigma_row(instance, j, reports[t])[signals[j]] for t in range(space.sizes[j])]
                )
                shape = [1] * n_co
                shape[k] = space.sizes[j]
                sig_weight = sig_weight * lik.reshape(shape)
            sig_mass = float(sig_weight.sum())
            if sig_mass * own_lik <= 0.0:
                continue
            value = _event_value(
                instance, profile, player, type_index, vetoers, signals,
                sig_weight / sig_mass, offpath_beliefs, policy,
            )
            total += mass * own_lik * sig_mass * value
    return total


def _event_value(
    instance: GrandGameInstance,
    profile: Profile,
    player: int,
    type_index: int,
    vetoers: tuple[int, ...],
    signals: tuple[int, ...] | None,
    private_belief: np.ndarray,
    offpath_beliefs: dict[int, np.ndarray],
    policy: SelectionPolicy,
) -> float:
    belief = offpath_beliefs.get(player)
    structure = _event_structure(instance, profile, vetoers, signals, player, belief)
    if structure is None:
        return 0.0
    return _continuation_value(instance, structure, player, type_index, private_belief, policy)


def best_deviation_slack(
    instance: GrandGameInstance,
    profile: Profile,
    offpath_beliefs: dict[int, np.ndarray],
    config: RunConfig = DEFAULT_CONFIG,
) -> float:
    """Largest one-stage gain any type has against the candidate profile."""
    space = instance.space
    policy = SelectionPolicy()
    worst = 0.0
    strategic = isinstance(instance.game, StrategicBayesianGame)
    for i in range(space.n_players):
        if instance.prior.marginal(i).max() <= 0.0:
            continue
        for t in range(space.sizes[i]):
            if instance.prior.marginal(i)[t] <= 0.0:
                continue
            xi = float(profile.veto_probs[i][t])
            cur_sigma = (
                profile.sigma_reports[i][t] if profile.sigma_reports is not None else None
            )
            cur_mech = (
                profile.mech_reports[i][t] if profile.mech_reports is not None else t
            ) if strategic else None

            def payoff(veto: bool, sig: int | None, mech: int | None) -> float:
                return _stage_payoff(
                    instance, profile, i, t, veto, sig, mech, offpath_beliefs, policy
                )

            current = (1.0 - xi) * payoff(False, cur_sigma, cur_mech)
            if xi > 0.0:
                current += xi * payoff(True, cur_sigma, cur_mech)

            sigma_options = (
                [cur_sigma]
                if instance.sigma_truthful or instance.channels is None
                else list(range(space.sizes[i]))
            )
            mech_options = list(range(space.sizes[i])) if strategic else [None]
            best = -np.inf
            for sig in sigma_options:
                for veto in (False, True):
                    if veto:
                        best = max(best, payoff(True, sig, None))
                    else:
                        for mech in mech_options:
                            best = max(best, payoff(False, sig, mech))
            worst = max(worst, best - current)
    return float(worst)


def _belief_grid(n_types: int, resolution: int) -> list[np.ndarray]:
    return [np.asarray(row) for row in simplex_grid(n_types, resolution)]


def _extract_veq(
    instance: GrandGameInstance,
    profile: Profile,
    offpath_beliefs: dict[int, np.ndarray],
    policy: SelectionPolicy,
) -> VetoEquilibrium | None:
    """Package an accepted profile as a veto-equilibrium record.

    Only available without a device: with one, the continuation lottery is
    signal-refined and does not reduce to per-veto-set rules.
    """
    if instance.channels is not None:
        return None
    space = instance.space
    strategic = isinstance(instance.game, StrategicBayesianGame)
    events = []
    prior = instance.prior
    for size in range(1, space.n_players + 1):
        for players in itertools.combinations(range(space.n_players), size):
            structure = _event_structure(instance, profile, players, None, None, None)
            if structure is None:
                continue
            w = np.ones(space.sizes)
            for j in range(space.n_players):
                xi = profile.veto_probs[j]
                f = xi if j in players else 1.0 - xi
                shape = [1] * space.n_players
                shape[j] = space.sizes[j]
                w = w * f.reshape(shape)
            mass = float(np.sum(prior.table * w))
            if mass <= 0.0:
                continue
            rule = (
                induced_decision_rule(instance.game, solve_bne(instance.game, structure, policy))
                if strategic
                else None
            )
            events.append((players, mass, structure, rule))
    veto_mass = sum(mass for _, mass, _, _ in events)
    acc_w = np.ones(space.sizes)
    for j in range(space.n_players):
        shape = [1] * space.n_players
        shape[j] = space.sizes[j]
        acc_w = acc_w * (1.0 - profile.veto_probs[j]).reshape(shape)
    acc_mass = float(np.sum(prior.table * acc_w))
    acceptance = None
    if acc_mass > 0.0:
        acc_structure = InformationStructure(space, prior.table * acc_w / acc_mass)
        if strategic:
            table = np.zeros(space.sizes + (instance.game.outcomes.n_outcomes,))
            for t_profile in space.profiles():
                reports = tuple(
                    profile.mech_reports[j][t_profile[j]]
                    if profile.mech_reports is not None
                    else t_profile[j]
                    for j in range(space.n_players)
                )
                table[t_profile] = instance.mechanism.table[reports]
            acc_rule = DecisionRule(space, instance.game.outcomes, table)
        else:
            acc_rule = None
        acceptance = (acc_structure, acc_rule)
    return VetoEquilibrium(
        prior=prior,
        veto_probs=profile.veto_probs,
        events=tuple(
            VetoEvent(players=p, prob=m / veto_mass if veto_mass > 0 else 0.0, structure=s, rule=r)
            for p, m, s, r in events
        ),
        acceptance=acceptance,
        offpath_beliefs=dict(offpath_beliefs),
    )


def enumerate_veto_equilibria(
    instance: GrandGameInstance,
    config: RunConfig = DEFAULT_CONFIG,
) -> list[HarnessEquilibrium]:
    """All grid profiles plus belief assignments that survive the sweep."""
    space = instance.space
    g = instance.strategy_grid
    agents = [(i, t) for i in range(space.n_players) for t in range(space.sizes[i])]
    veto_options = [k / g for k in range(g + 1)]
    strategic = isinstance(instance.game, StrategicBayesianGame)

    sigma_maps: list[tuple[tuple[int, ...], ...] | None]
    if instance.channels is not None and not instance.sigma_truthful:
        per_player = [
            list(itertools.product(range(space.sizes[i]), repeat=space.sizes[i]))
            for i in range(space.n_players)
        ]
        sigma_maps = [tuple(combo) for combo in itertools.product(*per_player)]
    else:
        sigma_maps = [None]
    if strategic:
        per_player = [
            list(itertools.product(range(space.sizes[i]), repeat=space.sizes[i]))
            for i in range(space.n_players)
        ]
        mech_maps: list[tuple[tuple[int, ...], ...] | None] = [
            tuple(combo) for combo in itertools.product(*per_player)
        ]
    else:
        mech_maps = [None]

    belief_options = {
        i: _belief_grid(space.sizes[i], instance.belief_grid) for i in range(space.n_players)
    }
    estimated = (
        (g + 1) ** len(agents)
        * len(sigma_maps)
        * len(mech_maps)
        * int(np.prod([len(belief_options[i]) for i in range(space.n_players)]))
    )
    if estimated > instance.cap:
        raise InstanceTooLargeError(
            f"{estimated} candidate profiles exceed the cap {instance.cap}"
        )

    results = []
    policy = SelectionPolicy()
    for assignment in itertools.product(veto_options, repeat=len(agents)):
        veto_probs = []
        pos = 0
        for i in range(space.n_players):
            n = space.sizes[i]
            veto_probs.append(np.array(assignment[pos : pos + n]))
            pos += n
        veto_probs = tuple(veto_probs)
        # a belief must be assigned wherever a unilateral deviation can reach
        # a publicly impossible node: always possible with a device, and for
        # never-vetoing players without one
        if instance.channels is not None:
            offpath_players = list(range(space.n_players))
        else:
            offpath_players = [
                i
                for i in range(space.n_players)
                if float(instance.prior.marginal(i) @ veto_probs[i]) == 0.0
            ]
        for sigma in sigma_maps:
            for mech in mech_maps:
                profile = Profile(veto_probs, sigma, mech)
                for beliefs in itertools.product(
                    *(belief_options[i] for i in offpath_players)
                ):
                    assigned = dict(zip(offpath_players, beliefs))
                    slack = best_deviation_slack(instance, profile, assigned, config)
                    if slack <= config.tol_pbe:
                        results.append(
                            HarnessEquilibrium(
                                profile=profile,
                                offpath_beliefs=assigned,
                                slack=slack,
                                marginal=slack > config.tol_pbe / 10.0,
                                veq=_extract_veq(instance, profile, assigned, policy),
                            )
                        )
    return results


def has_veto_equilibrium(results: list[HarnessEquilibrium]) -> bool:
    return any(max(float(x.max()) for x in r.profile.veto_probs) > 0.0 for r in results)


@dataclass(frozen=True)
class ReplicationReport:
    found: bool
    slack: float
    outcome_deviation: float
    marginal: bool


def replicate_check(
    veq: VetoEquilibrium,
    game: StrategicBayesianGame,
    config: RunConfig = DEFAULT_CONFIG,
    strategy_grid: int | None = None,
) -> ReplicationReport:
    """Confirm the full-participation replication inside the grand game.

    Builds the replacement mechanism and device, then re-derives the
    deviation slacks of the all-accept profile from the raw game tree and
    compares the implemented outcome distribution against an independent
    recomputation of the source equilibrium's.
    """
    mechanism = construct_full_participation(veq, game, config)
    g = strategy_grid if strategy_grid is not None else config.strategy_grid
    instance = GrandGameInstance(
        game=game,
        prior=veq.prior,
        mechanism=mechanism.rule,
        channels=mechanism.channels,
        strategy_grid=g,
        belief_grid=g,
    )
    profile = Profile(
        veto_probs=tuple(np.zeros(n) for n in veq.space.sizes),
        sigma_reports=None,
        mech_reports=None,
    )
    beliefs = {i: mechanism.offpath_beliefs[i] for i in range(veq.space.n_players)}
    slack = best_deviation_slack(instance, profile, beliefs, config)

    # independent recomputation of the source outcome distribution
    space = veq.space
    deviation = 0.0
    for t_profile in space.profiles():
        mixture = np.zeros(mechanism.rule.outcomes.n_outcomes)
        accept = 1.0
        for j, t in enumerate(t_profile):
            accept *= 1.0 - veq.veto_probs[j][t]
        for event in veq.events:
            w = 1.0
            for j, t in enumerate(t_profile):
                xi = veq.veto_probs[j][t]
                w *= xi if j in event.players else 1.0 - xi
            mixture += w * event.rule.table[t_profile]
        if veq.acceptance is not None:
            mixture += accept * veq.acceptance[1].table[t_profile]
        elif accept > 0.0:
            mixture += accept * mechanism.rule.table[t_profile]
        deviation = max(
            deviation, float(np.max(np.abs(mechanism.rule.table[t_profile] - mixture)))
        )
    return ReplicationReport(
        found=slack <= config.tol_pbe,
        slack=slack,
        outcome_deviation=deviation,
        marginal=slack > config.tol_pbe / 10.0,
    )


# ---------------------------------------------------------------------------
# opportunistic-designer continuation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OpportunismScan:
    surviving: tuple[tuple[float, float], ...]
    all_uninformative: bool


def enumerate_opportunism_devices(
    game: ReducedFormGame,
    prior: InformationStructure,
    device_grid: int = 10,
    config: RunConfig = DEFAULT_CONFIG,
) -> OpportunismScan:
    """Which binary devices the informed designer can credibly announce.

    After the uninformed player's veto, the designated player picks a binary
    device (emission probabilities per type on a 1/G grid).  Pooling on a
    device survives when, for every deviation device, some off-path belief
    assignment per realization deters every designer type at once.  The scan
    reports the surviving devices and whether they are all uninformative
    (identical rows, posterior equal to the base belief).
    """
    d = game.designated
    eps = config.tol_pbe
    p0 = float(prior.marginal(d)[1])
    g = device_grid
    grid = np.array([k / g for k in range(g + 1)])
    v = np.empty((2, grid.size))
    for t in range(2):
        v[t] = [evaluate_reduced_form(game, d, t, b) for b in grid]

    def value(t: int, belief: float) -> float:
        return evaluate_reduced_form(game, d, t, belief)

    def eq_payoffs(a: float, b: float) -> np.ndarray:
        # a, b: emission probs of signal "1" for type 0 (low) and type 1 (high)
        pr1 = (1.0 - p0) * a + p0 * b
        pr0 = 1.0 - pr1
        out = np.zeros(2)
        post1 = p0 * b / pr1 if pr1 > 0 else None
        post0 = p0 * (1.0 - b) / pr0 if pr0 > 0 else None
        rows = ((1.0 - a, a), (1.0 - b, b))
        for t in range(2):
            total = 0.0
            if rows[t][0] > 0 and post0 is not None:
                total += rows[t][0] * value(t, post0)
            if rows[t][1] > 0 and post1 is not None:
                total += rows[t][1] * value(t, post1)
            out[t] = total
        return out

    def deviation_deterred(eq: np.ndarray, a2: float, b2: float) -> bool:
        rows = np.array([[1.0 - a2, a2], [1.0 - b2, b2]])
        # allowed off-path beliefs per realization: types emitting it with
        # positive probability cannot be excluded by the support restriction
        allowed = []
        for s in (0, 1):
            if rows[0, s] > 0 and rows[1, s] > 0:
                allowed.append(grid)
            elif rows[0, s] > 0:
                allowed.append(np.array([0.0]))
            elif rows[1, s] > 0:
                allowed.append(np.array([1.0]))
            else:
                allowed.append(np.array([np.nan]))  # unreachable realization
        # gain[t] for belief pair (u, w): rows[t,0] v(t,u) + rows[t,1] v(t,w) - eq[t]
        v0 = {s: np.array([0.0 if np.isnan(b) else value(0, b) for b in allowed[s]]) for s in (0, 1)}
        v1 = {s: np.array([0.0 if np.isnan(b) else value(1, b) for b in allowed[s]]) for s in (0, 1)}
        gain0 = rows[0, 0] * v0[0][:, None] + rows[0, 1] * v0[1][None, :] - eq[0]
        gain1 = rows[1, 0] * v1[0][:, None] + rows[1, 1] * v1[1][None, :] - eq[1]
        worst = np.maximum(gain0, gain1)
        return bool(worst.min() <= eps)

    surviving = []
    pairs = [(a, b) for a in grid for b in grid]
    for a, b in pairs:
        eq = eq_payoffs(a, b)
        if all(deviation_deterred(eq, a2, b2) for a2, b2 in pairs if (a2, b2) != (a, b)):
            surviving.append((float(a), float(b)))
    all_uninformative = all(abs(a - b) <= 1e-12 for a, b in surviving)
    return OpportunismScan(
        surviving=tuple(surviving), all_uninformative=all_uninformative
    )
