"""Mechanism-side machinery: incentive and participation verification, the
optimal-mechanism program, full-participation construction from veto
equilibria, the refinement check, and informed-principal pooling.

The construction mirrors the replication argument: mix the veto
equilibrium's continuation rules into one decision rule, hand every player a
binary channel that garbles exactly like her equilibrium veto behavior, and
attach the unilateral-veto belief to any player who vetoes.  A veto then
faces the same lottery over information structures as in the source
equilibrium, so nobody gains by vetoing.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .belief import (
    PosteriorLottery,
    SignalingDevice,
    device_to_lottery,
    product_device,
)
from .config import DEFAULT_CONFIG, TOL_EQ, TOL_NORM, RunConfig
from .errors import (
    ConstructionPreconditionError,
    DimensionError,
    InfeasibleMechanismError,
    LPInfeasibleError,
)
from .lp import solve_lp
from .defaultgame import (
    Game,
    ReducedFormGame,
    SelectionPolicy,
    StrategicBayesianGame,
    outside_option_value,
)
from .model import (
    DecisionRule,
    InformationStructure,
    UtilityTable,
    _check_distribution,
    best_report_value,
    expected_utility,
    mix_decision_rules,
)


# ---------------------------------------------------------------------------
# incentive compatibility
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ICReport:
    ok: bool
    worst_violation: float
    witness: tuple[int, int, int] | None = None  # (player, type, report)


def check_ic(
    rule: DecisionRule,
    structure: InformationStructure,
    utilities: UtilityTable,
    tol: float = TOL_EQ,
) -> ICReport:
    """Truth-telling check for every supported type against every misreport."""
    worst, witness = 0.0, None
    for i in range(rule.space.n_players):
        marginal = structure.marginal(i)
        for t in range(rule.space.sizes[i]):
            if marginal[t] <= 0.0:
                continue
            truthful = expected_utility(rule, utilities, structure, i, t, t)
            for m in range(rule.space.sizes[i]):
                if m == t:
                    continue
                gain = expected_utility(rule, utilities, structure, i, t, m) - truthful
                if gain > worst:
                    worst, witness = gain, (i, t, m)
    return ICReport(ok=worst <= tol, worst_violation=worst, witness=witness)


def rule_interim_value(
    rule: DecisionRule,
    utilities: UtilityTable,
    structure: InformationStructure,
    player: int,
    type_index: int,
) -> float:
    """Truthful interim value; unsupported types report best against the
    co-players' joint marginal."""
    if structure.marginal(player)[type_index] > 0.0:
        return expected_utility(rule, utilities, structure, player, type_index, type_index)
    return best_report_value(
        rule, utilities, player, type_index, structure.co_marginal(player)
    )


# ---------------------------------------------------------------------------
# optimal mechanism program
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MechanismLP:
    """Linear mechanism-design problem over decision-rule probabilities.

    Maximizes ``sum objective[*profile, z] * rule[*profile, z]`` subject to
    per-profile simplex rows, truth-telling at the prior, and interim
    participation bounds ``bounds[(player, type)] = v``.
    """

    objective: np.ndarray
    bounds: dict[tuple[int, int], float] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class MechanismSolution:
    rule: DecisionRule
    value: float
    participation_multipliers: dict[tuple[int, int], float]
    participation_slacks: dict[tuple[int, int], float]
    ic_worst: float


def _mechanism_rows(
    spec: MechanismLP,
    prior: InformationStructure,
    utilities: UtilityTable,
) -> tuple:
    """Assemble the constraint system over flattened rule variables."""
    space, outcomes = prior.space, utilities.outcomes
    profiles = list(space.profiles())
    profile_pos = {p: k for k, p in enumerate(profiles)}
    n_z = outcomes.n_outcomes
    n_vars = len(profiles) * n_z

    def var(profile: tuple[int, ...], z: int) -> int:
        return profile_pos[profile] * n_z + z

    a_eq = np.zeros((len(profiles), n_vars))
    for k in range(len(profiles)):
        a_eq[k, k * n_z : (k + 1) * n_z] = 1.0
    b_eq = np.ones(len(profiles))

    a_ub, b_ub, row_tags = [], [], []
    for i in range(space.n_players):
        if space.sizes[i] < 2:
            continue
        marginal = prior.marginal(i)
        for t in range(space.sizes[i]):
            if marginal[t] <= 0.0:
                continue
            cond = prior.conditional(i, t)
            for m in range(space.sizes[i]):
                if m == t:
                    continue
                row = np.zeros(n_vars)
                for co in space.co_profiles(i):
                    w = cond[co]
                    if w == 0.0:
                        continue
                    truthful = list(co)
                    truthful.insert(i, t)
                    lying = list(co)
                    lying.insert(i, m)
                    for z in range(n_z):
                        u = utilities.u(i, z, truthful)
                        row[var(tuple(lying), z)] += w * u
                        row[var(tuple(truthful), z)] -= w * u
                a_ub.append(row)
                b_ub.append(0.0)
                row_tags.append(("ic", i, t, m))

    for (i, t), bound in sorted(spec.bounds.items()):
        if prior.marginal(i)[t] <= 0.0:
            continue
        cond = prior.conditional(i, t)
        row = np.zeros(n_vars)
        for co in space.co_profiles(i):
            w = cond[co]
            if w == 0.0:
                continue
            profile = list(co)
            profile.insert(i, t)
            for z in range(n_z):
                row[var(tuple(profile), z)] -= w * utilities.u(i, z, profile)
        a_ub.append(row)
        b_ub.append(-float(bound))
        row_tags.append(("part", i, t))

    obj = np.asarray(spec.objective, dtype=float)
    if obj.shape != space.sizes + (n_z,):
        raise DimensionError("objective shape does not match profiles x outcomes")
    c = -np.array([obj[p + (z,)] for p in profiles for z in range(n_z)])
    return c, a_eq, b_eq, np.array(a_ub) if a_ub else None, np.array(b_ub) if b_ub else None, row_tags, profiles, n_z


def solve_optimal_mechanism(
    spec: MechanismLP,
    prior: InformationStructure,
    utilities: UtilityTable,
    config: RunConfig = DEFAULT_CONFIG,
) -> MechanismSolution:
    """Solve the mechanism program; on infeasibility, report the smallest
    uniform relaxation of all participation bounds that restores it."""
    c, a_eq, b_eq, a_ub, b_ub, tags, profiles, n_z = _mechanism_rows(spec, prior, utilities)
    try:
        res = solve_lp(c, a_eq, b_eq, a_ub, b_ub)
    except LPInfeasibleError:
        delta = _relaxation_delta(c, a_eq, b_eq, a_ub, b_ub, tags)
        raise InfeasibleMechanismError(
            f"mechanism program infeasible; uniform participation relaxation {delta:.6g} restores it",
            relaxation=delta,
        ) from None
    table = res.x.reshape(prior.space.sizes + (n_z,))
    table = np.clip(table, 0.0, None)
    table /= table.sum(axis=-1, keepdims=True)
    rule = DecisionRule(prior.space, utilities.outcomes, table)
    multipliers, slacks = {}, {}
    for row, tag in enumerate(tags):
        if tag[0] != "part":
            continue
        _, i, t = tag
        multipliers[(i, t)] = float(-res.duals_ub[row])
        achieved = float(-(a_ub[row] @ res.x))
        slacks[(i, t)] = achieved - float(-b_ub[row])
    ic = check_ic(rule, prior, utilities)
    return MechanismSolution(
        rule=rule,
        value=float(-res.value),
        participation_multipliers=multipliers,
        participation_slacks=slacks,
        ic_worst=ic.worst_violation,
    )


def _relaxation_delta(c, a_eq, b_eq, a_ub, b_ub, tags) -> float:
    """min delta >= 0 easing every participation row by delta."""
    n = c.size
    c2 = np.concatenate([np.zeros(n), [1.0]])
    a_eq2 = np.hstack([a_eq, np.zeros((a_eq.shape[0], 1))])
    cols = np.array([-1.0 if tag[0] == "part" else 0.0 for tag in tags]).reshape(-1, 1)
    a_ub2 = np.hstack([a_ub, cols])
    res = solve_lp(c2, a_eq2, b_eq, a_ub2, b_ub)
    return float(res.value)


# ---------------------------------------------------------------------------
# veto equilibria
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class VetoEvent:
    """One positive-probability veto set with its structure and continuation."""

    players: tuple[int, ...]
    prob: float
    structure: InformationStructure
    rule: DecisionRule | None

    def __post_init__(self):
        object.__setattr__(self, "players", tuple(sorted(self.players)))
        if not self.players:
            raise DimensionError("a veto event needs at least one vetoing player")


@dataclass(frozen=True, eq=False)
class VetoEquilibrium:
    """Bookkeeping of a grand-game equilibrium with on-path vetoes.

    ``veto_probs[i][t]`` is the chance that player i's type t vetoes;
    ``events`` lists the veto sets that occur with positive probability,
    with probabilities conditional on some veto; ``acceptance`` carries the
    no-veto structure and the decision rule the accepted mechanism
    implements.  ``offpath_beliefs[i]`` is the belief attached to player i
    after a unilateral veto that never happens on path.
    """

    prior: InformationStructure
    veto_probs: tuple[np.ndarray, ...]
    events: tuple[VetoEvent, ...]
    acceptance: tuple[InformationStructure, DecisionRule | None] | None
    offpath_beliefs: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        space = self.prior.space
        probs = tuple(np.asarray(x, dtype=float) for x in self.veto_probs)
        if len(probs) != space.n_players:
            raise DimensionError("one veto-probability vector per player required")
        for i, xi in enumerate(probs):
            if xi.shape != (space.sizes[i],):
                raise DimensionError(f"player {i}: veto probabilities shape mismatch")
            if np.any(xi < -TOL_NORM) or np.any(xi > 1 + TOL_NORM):
                raise DimensionError(f"player {i}: veto probabilities outside [0, 1]")
        object.__setattr__(self, "veto_probs", tuple(np.clip(xi, 0.0, 1.0) for xi in probs))
        beliefs = {
            int(i): _check_distribution(np.asarray(q, dtype=float), f"off-path belief {i}")
            for i, q in self.offpath_beliefs.items()
        }
        object.__setattr__(self, "offpath_beliefs", beliefs)

    @property
    def space(self):
        return self.prior.space

    def event_weights(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-profile probabilities of each stored event plus acceptance."""
        space = self.space
        factors = []
        for i, xi in enumerate(self.veto_probs):
            shape = [1] * space.n_players
            shape[i] = space.sizes[i]
            factors.append(xi.reshape(shape))
        accept = np.ones(space.sizes)
        for f in factors:
            accept = accept * (1.0 - f)
        weights = []
        for event in self.events:
            w = np.ones(space.sizes)
            for i, f in enumerate(factors):
                w = w * (f if i in event.players else (1.0 - f))
            weights.append(w)
        return (np.stack(weights, axis=-1) if weights else np.zeros(space.sizes + (0,))), accept


@dataclass(frozen=True)
class ConsistencyReport:
    ok: bool
    issues: tuple[str, ...] = ()


def check_veq_consistency(veq: VetoEquilibrium, tol: float = TOL_EQ) -> ConsistencyReport:
    """Bayes consistency of every stored structure with the veto behavior."""
    issues: list[str] = []
    space = veq.space
    prior = veq.prior.table
    weights, accept_w = veq.event_weights()
    accept_mass = float(np.sum(prior * accept_w))
    veto_mass = 1.0 - accept_mass

    seen = set()
    for k, event in enumerate(veq.events):
        if event.players in seen:
            issues.append(f"duplicate event {event.players}")
        seen.add(event.players)
        mass = float(np.sum(prior * weights[..., k]))
        if mass <= tol:
            issues.append(f"event {event.players} stored but has zero probability")
            continue
        if veto_mass > tol and abs(event.prob - mass / veto_mass) > tol:
            issues.append(
                f"event {event.players}: stored prob {event.prob:.6g} != {mass / veto_mass:.6g}"
            )
        implied = prior * weights[..., k] / mass
        gap = float(np.max(np.abs(event.structure.table - implied)))
        if gap > tol:
            issues.append(f"event {event.players}: structure off Bayes by {gap:.3g}")

    # every positive-probability veto set must be stored
    for subset_size in range(1, space.n_players + 1):
        for players in itertools.combinations(range(space.n_players), subset_size):
            if players in seen:
                continue
            w = np.ones(space.sizes)
            for i, xi in enumerate(veq.veto_probs):
                shape = [1] * space.n_players
                shape[i] = space.sizes[i]
                f = xi.reshape(shape)
                w = w * (f if i in players else (1.0 - f))
            mass = float(np.sum(prior * w))
            if mass > tol:
                issues.append(f"veto set {players} occurs with prob {mass:.3g} but is not stored")

    if accept_mass > tol:
        if veq.acceptance is None:
            issues.append("acceptance occurs with positive probability but is not stored")
        else:
            implied = prior * accept_w / accept_mass
            gap = float(np.max(np.abs(veq.acceptance[0].table - implied)))
            if gap > tol:
                issues.append(f"acceptance structure off Bayes by {gap:.3g}")
    total = sum(e.prob for e in veq.events)
    if veq.events and abs(total - 1.0) > tol:
        issues.append(f"event probabilities sum to {total:.6g}")
    for i in veq.offpath_beliefs:
        if not 0 <= i < space.n_players:
            issues.append(f"off-path belief for unknown player {i}")
    return ConsistencyReport(ok=not issues, issues=tuple(issues))


def unilateral_belief(veq: VetoEquilibrium, player: int) -> np.ndarray:
    """Belief attached to a player after her unilateral veto.

    Bayes when the singleton veto set occurs on path, otherwise the stored
    arbitrary off-path belief.
    """
    for event in veq.events:
        if event.players == (player,):
            return event.structure.marginal(player)
    if player in veq.offpath_beliefs:
        return veq.offpath_beliefs[player]
    raise ConstructionPreconditionError(
        f"player {player}: unilateral veto is off path and no belief is stored"
    )


# ---------------------------------------------------------------------------
# full-participation construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoVetoReport:
    ok: bool
    slacks: dict[tuple[int, int], float]
    worst: float


@dataclass(frozen=True)
class ConstructionAudit:
    ok: bool
    ic: ICReport
    outcome_deviation: float
    no_veto: NoVetoReport


@dataclass(frozen=True, eq=False)
class FullParticipationMechanism:
    rule: DecisionRule
    channels: tuple[SignalingDevice, ...]
    offpath_beliefs: tuple[np.ndarray, ...]
    audit: ConstructionAudit


def continuation_value(
    game: Game,
    posterior: InformationStructure,
    player: int,
    type_index: int,
    records: tuple[tuple[InformationStructure, DecisionRule], ...] = (),
    policy: SelectionPolicy = SelectionPolicy(),
    tol: float = TOL_EQ,
) -> float:
    """Deviator's value at a post-veto posterior.

    When a stored continuation record matches the posterior (the whole joint
    table, so events differing only in the deviator's own block cannot be
    confused), its rule is evaluated directly: that is the play the source
    equilibrium already pinned down.  Otherwise the default game is
    re-solved at the posterior.
    """
    if isinstance(game, StrategicBayesianGame):
        for structure, rule in records:
            if rule is None:
                continue
            if np.max(np.abs(structure.table - posterior.table)) <= tol:
                co_post = posterior.co_marginal(player)
                belief = co_post / co_post.sum()
                return best_report_value(rule, game.utilities, player, type_index, belief)
    return outside_option_value(game, posterior, player, type_index, policy)


def veto_lottery(
    channels: tuple[SignalingDevice, ...],
    prior: InformationStructure,
    player: int,
    belief: np.ndarray,
) -> PosteriorLottery:
    """Lottery over structures a unilateral vetoer faces: the co-players'
    channels fire, her own channel is disregarded, her belief is pasted."""
    co = [ch for j, ch in enumerate(channels) if j != player]
    joint = product_device(co)
    base = InformationStructure.from_factors(
        prior.space, player, belief, prior.co_marginal(player)
    )
    return device_to_lottery(base, joint, deviator_marginal=belief, deviator=player)


def verify_no_veto(
    rule: DecisionRule,
    channels: tuple[SignalingDevice, ...],
    game: StrategicBayesianGame,
    beliefs: tuple[np.ndarray, ...],
    prior: InformationStructure,
    records: tuple[tuple[InformationStructure, DecisionRule], ...] = (),
    policy: SelectionPolicy = SelectionPolicy(),
    skip_players: tuple[int, ...] = (),
    tol: float = TOL_EQ,
) -> NoVetoReport:
    """Per (player, type) slack of participation against the punished veto."""
    if not isinstance(game, StrategicBayesianGame):
        raise DimensionError("no-veto verification needs a strategic default game")
    utilities = game.utilities
    slacks: dict[tuple[int, int], float] = {}
    for i in range(prior.space.n_players):
        if i in skip_players:
            continue
        lottery = veto_lottery(channels, prior, i, beliefs[i])
        for t in range(prior.space.sizes[i]):
            inside = rule_interim_value(rule, utilities, prior, i, t)
            veto = sum(
                w * continuation_value(game, post, i, t, records, policy, tol)
                for w, post in lottery.atoms
            )
            slacks[(i, t)] = inside - veto
    worst = min(slacks.values()) if slacks else 0.0
    return NoVetoReport(ok=worst >= -tol, slacks=slacks, worst=worst)


def _continuation_policy(config: RunConfig) -> SelectionPolicy:
    """Selection used when a veto posterior has no stored continuation.

    ``deviator_worst`` is only meaningful with a focus player, which varies
    per check, so configs requesting it fall back to the lexicographic
    default here.
    """
    if config.selection in ("lexicographic_first", "designer_worst"):
        return SelectionPolicy(kind=config.selection)
    return SelectionPolicy()


def construct_full_participation(
    veq: VetoEquilibrium,
    game: StrategicBayesianGame,
    config: RunConfig = DEFAULT_CONFIG,
) -> FullParticipationMechanism:
    """Replicate a veto equilibrium with full participation.

    The constructed rule mixes the continuation rules with the veto
    probabilities profile by profile; each player's channel emits "1"
    exactly as often as she vetoed.  The audit re-checks truth-telling at
    the prior, the outcome-distribution match, and the no-veto slacks.
    """
    report = check_veq_consistency(veq)
    if not report.ok:
        raise ConstructionPreconditionError("; ".join(report.issues))
    space = veq.space
    weights, accept_w = veq.event_weights()
    rules = [e.rule for e in veq.events]
    if veq.acceptance is not None:
        rules.append(veq.acceptance[1])
    if any(r is None for r in rules) or not rules:
        raise ConstructionPreconditionError("veto equilibrium carries no decision rules")
    if veq.acceptance is not None:
        all_w = np.concatenate([weights, accept_w[..., None]], axis=-1)
    else:
        all_w = weights
    # probability not covered by stored events can only sit on zero-prior
    # profiles; route it to the last rule so every row stays a mixture
    deficit = 1.0 - all_w.sum(axis=-1)
    all_w[..., -1] += deficit
    rule = mix_decision_rules(rules, all_w)

    channels = tuple(
        SignalingDevice.binary_channel(space, i, veq.veto_probs[i])
        for i in range(space.n_players)
    )
    beliefs = tuple(unilateral_belief(veq, i) for i in range(space.n_players))

    mixture = sum(
        all_w[..., k:k + 1] * rules[k].table for k in range(len(rules))
    )
    outcome_dev = float(np.max(np.abs(rule.table - mixture)))

    ic = check_ic(rule, veq.prior, game.utilities)
    records = tuple((e.structure, e.rule) for e in veq.events)
    no_veto = verify_no_veto(
        rule, channels, game, beliefs, veq.prior,
        records=records, policy=_continuation_policy(config), tol=config.tol_eq,
    )
    audit = ConstructionAudit(
        ok=ic.ok and no_veto.ok and outcome_dev <= config.tol_eq,
        ic=ic,
        outcome_deviation=outcome_dev,
        no_veto=no_veto,
    )
    return FullParticipationMechanism(
        rule=rule, channels=channels, offpath_beliefs=beliefs, audit=audit
    )


# ---------------------------------------------------------------------------
# refinement check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RefinementReport:
    ok: bool
    details: dict[int, str]


def check_intuitive_criterion(
    mechanism: FullParticipationMechanism,
    veq: VetoEquilibrium,
    game: StrategicBayesianGame,
    config: RunConfig = DEFAULT_CONFIG,
) -> RefinementReport:
    """Credibility of the constructed off-path beliefs.

    A belief passes when it is supported on types that weakly prefer the
    veto while none strictly prefers it; if no type even weakly prefers to
    veto, the deviation is dominated for everyone and any belief is allowed.
    """
    tol = config.tol_eq
    details: dict[int, str] = {}
    ok = True
    records = tuple((e.structure, e.rule) for e in veq.events)
    policy = _continuation_policy(config)
    for i in range(veq.space.n_players):
        q = mechanism.offpath_beliefs[i]
        lottery = veto_lottery(mechanism.channels, veq.prior, i, q)
        weak, strict = [], []
        for t in range(veq.space.sizes[i]):
            inside = rule_interim_value(mechanism.rule, game.utilities, veq.prior, i, t)
            veto = sum(
                w * continuation_value(game, post, i, t, records, policy, tol)
                for w, post in lottery.atoms
            )
            if veto >= inside - tol:
                weak.append(t)
            if veto > inside + tol:
                strict.append(t)
        supported = [t for t in range(veq.space.sizes[i]) if q[t] > 0.0]
        if not weak:
            details[i] = "veto dominated for every type; any belief is credible"
            continue
        escaped = [t for t in supported if t not in weak]
        strictly = [t for t in supported if t in strict]
        if escaped:
            ok = False
            details[i] = f"belief puts mass on types {escaped} that prefer participating"
        elif strictly:
            ok = False
            details[i] = f"supported types {strictly} strictly prefer the veto"
        else:
            details[i] = "belief supported on weakly indifferent vetoers"
    return RefinementReport(ok=ok, details=details)


# ---------------------------------------------------------------------------
# informed-principal pooling
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PoolProposal:
    """One mechanism proposed on path, with its continuation record."""

    label: str
    rule: DecisionRule
    veq: VetoEquilibrium | None = None


@dataclass(frozen=True, eq=False)
class PooledMechanism:
    rule: DecisionRule
    principal_channel: SignalingDevice
    channels: tuple[SignalingDevice, ...]
    offpath_beliefs: tuple[np.ndarray, ...]
    audit: ConstructionAudit


def pool_informed_principal(
    proposals: tuple[PoolProposal, ...],
    proposal_probs: np.ndarray,
    game: StrategicBayesianGame,
    prior: InformationStructure,
    config: RunConfig = DEFAULT_CONFIG,
) -> PooledMechanism:
    """Collapse a separate-and-veto equilibrium into one pooled proposal.

    Every principal type offers the blended rule; the principal's channel
    replays her proposal behavior (one signal per proposal), and the agents'
    channels replay their veto behavior exactly as in the single-proposal
    construction.
    """
    space = prior.space
    probs = np.asarray(proposal_probs, dtype=float)
    if probs.shape != (space.sizes[0], len(proposals)):
        raise DimensionError("proposal_probs must be (principal types) x (proposals)")
    if np.any(probs < -TOL_NORM) or np.any(np.abs(probs.sum(axis=1) - 1.0) > TOL_NORM):
        raise ConstructionPreconditionError("proposal rows must be distributions")

    weights = np.broadcast_to(
        probs.reshape((space.sizes[0],) + (1,) * (space.n_players - 1) + (len(proposals),)),
        space.sizes + (len(proposals),),
    )
    pooled_rule = mix_decision_rules([p.rule for p in proposals], weights)

    n_sig = max(len(proposals), space.sizes[0])
    kernel = np.zeros((space.sizes[0], n_sig))
    kernel[:, : len(proposals)] = probs
    labels = tuple(p.label for p in proposals) + tuple(
        f"pad{k}" for k in range(len(proposals), n_sig)
    )
    principal_channel = SignalingDevice(space, (0,), labels, kernel, channel_of=0)

    agent_channels: list[SignalingDevice] = []
    beliefs: list[np.ndarray] = [prior.marginal(0)]
    prop_weights = np.array(
        [float(prior.marginal(0) @ probs[:, k]) for k in range(len(proposals))]
    )
    for i in range(1, space.n_players):
        xi = np.zeros(space.sizes[i])
        for k, proposal in enumerate(proposals):
            if proposal.veq is not None:
                xi += prop_weights[k] * proposal.veq.veto_probs[i]
        agent_channels.append(SignalingDevice.binary_channel(space, i, np.clip(xi, 0.0, 1.0)))
        belief_candidates = []
        for proposal in proposals:
            if proposal.veq is None:
                continue
            try:
                belief_candidates.append(unilateral_belief(proposal.veq, i))
            except ConstructionPreconditionError:
                continue
        if belief_candidates:
            for cand in belief_candidates[1:]:
                if np.max(np.abs(cand - belief_candidates[0])) > TOL_EQ:
                    raise ConstructionPreconditionError(
                        f"proposals disagree on the unilateral-veto belief for player {i}"
                    )
            beliefs.append(belief_candidates[0])
        else:
            beliefs.append(prior.marginal(i))

    channels = (principal_channel,) + tuple(agent_channels)

    mixture = sum(weights[..., k:k + 1] * p.rule.table for k, p in enumerate(proposals))
    outcome_dev = float(np.max(np.abs(pooled_rule.table - mixture)))
    ic = check_ic(pooled_rule, prior, game.utilities)
    records = tuple(
        (e.structure, e.rule)
        for p in proposals
        if p.veq is not None
        for e in p.veq.events
    )
    no_veto = verify_no_veto(
        pooled_rule,
        channels,
        game,
        tuple(beliefs),
        prior,
        records=records,
        policy=_continuation_policy(config),
        skip_players=(0,),
        tol=config.tol_eq,
    )
    audit = ConstructionAudit(
        ok=ic.ok and no_veto.ok and outcome_dev <= config.tol_eq,
        ic=ic,
        outcome_deviation=outcome_dev,
        no_veto=no_veto,
    )
    return PooledMechanism(
        rule=pooled_rule,
        principal_channel=principal_channel,
        channels=channels,
        offpath_beliefs=tuple(beliefs),
        audit=audit,
    )
