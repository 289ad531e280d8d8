"""Optimal informational punishment.

Given a deviator, a post-veto base structure, and a fixed one-player belief
about the deviator, find the Bayes-plausible lottery over posteriors that
minimizes the deviator's weighted continuation value, with the belief about
the deviator pinned at every co-profile.  The search runs over a finite
simplex grid of co-player posteriors and is a plain linear program, so the
reported minimum is the lower convex envelope of the grid-sampled value
function at the base belief.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .belief import (
    PosteriorLottery,
    SignalingDevice,
    check_bayes_plausible,
    lottery_to_device,
)
from .config import TOL_EQ, TOL_NORM, RunConfig, DEFAULT_CONFIG
from .errors import DimensionError, InvalidDistributionError, LPInfeasibleError
from .lp import solve_lp
from .defaultgame import Game, SelectionPolicy, outside_option_value
from .model import InformationStructure, _check_distribution


def simplex_grid(n_cells: int, resolution: int) -> np.ndarray:
    """All points of the (n_cells-1)-simplex with coordinates k/resolution.

    Rows are emitted in lexicographic order of the integer compositions, so
    the grid (and everything derived from it) is deterministic.  Vertices are
    always included.
    """
    if n_cells < 1 or resolution < 1:
        raise DimensionError("simplex grid needs n_cells >= 1 and resolution >= 1")
    points = []
    for combo in itertools.combinations_with_replacement(range(n_cells), resolution):
        counts = np.bincount(combo, minlength=n_cells)
        points.append(counts / resolution)
    return np.array(points)


def lower_convex_envelope_1d(xs: np.ndarray, ws: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Breakpoints of the lower convex envelope of sampled points (1-D).

    Monotone-chain lower hull over (x, w); returns hull xs and ws sorted by x.
    """
    order = np.argsort(xs, kind="stable")
    xs, ws = np.asarray(xs)[order], np.asarray(ws)[order]
    hull: list[tuple[float, float]] = []
    for x, w in zip(xs, ws):
        while len(hull) >= 2:
            (x1, w1), (x2, w2) = hull[-2], hull[-1]
            if (w2 - w1) * (x - x1) >= (w - w1) * (x2 - x1) - 1e-15:
                hull.pop()
            else:
                break
        if hull and abs(hull[-1][0] - x) <= 1e-15:
            if w < hull[-1][1]:
                hull[-1] = (x, w)
            continue
        hull.append((x, w))
    arr = np.array(hull)
    return arr[:, 0], arr[:, 1]


@dataclass(frozen=True, eq=False)
class PunishmentProblem:
    """Inputs of the punishment design for one deviator.

    ``base`` is the structure holding after the veto but before any signal;
    ``offpath_belief`` is the single belief everyone attaches to the deviator;
    ``weights`` aggregate the deviator's types in the objective.
    """

    game: Game
    deviator: int
    base: InformationStructure
    offpath_belief: np.ndarray
    weights: np.ndarray | None = None
    grid_resolution: int = 20

    def __post_init__(self):
        space = self.base.space
        if not 0 <= self.deviator < space.n_players:
            raise DimensionError(f"no player {self.deviator}")
        q = _check_distribution(np.asarray(self.offpath_belief, dtype=float), "off-path belief")
        if q.shape != (space.sizes[self.deviator],):
            raise DimensionError("off-path belief shape does not match the deviator's types")
        object.__setattr__(self, "offpath_belief", q)
        if self.weights is None:
            w = np.full(space.sizes[self.deviator], 1.0 / space.sizes[self.deviator])
        else:
            w = _check_distribution(np.asarray(self.weights, dtype=float), "objective weights")
            if w.shape != (space.sizes[self.deviator],):
                raise DimensionError("weights shape does not match the deviator's types")
        object.__setattr__(self, "weights", w)
        if self.grid_resolution < 2:
            raise DimensionError("grid resolution must be at least 2")

    def paste(self, co_table: np.ndarray) -> InformationStructure:
        """Full structure with the deviator's belief pinned and a co-player block."""
        return InformationStructure.from_factors(
            self.base.space, self.deviator, self.offpath_belief, co_table
        )

    def effective_base(self) -> InformationStructure:
        return self.paste(self.base.co_marginal(self.deviator))


@dataclass(frozen=True, eq=False)
class PunishmentSolution:
    """Optimal lottery, the device implementing it, and the achieved values."""

    problem: PunishmentProblem
    lottery: PosteriorLottery
    device: SignalingDevice
    value: float
    per_type_values: np.ndarray
    grid_points: np.ndarray
    grid_values: np.ndarray


def _deviator_policy(problem: PunishmentProblem) -> SelectionPolicy:
    return SelectionPolicy(
        kind="deviator_worst",
        focus_player=problem.deviator,
        focus_weights=tuple(problem.weights),
    )


def grid_value(problem: PunishmentProblem, co_table: np.ndarray, policy: SelectionPolicy) -> float:
    """Weighted deviator value when co-players hold a given joint posterior."""
    structure = problem.paste(co_table)
    return float(
        sum(
            problem.weights[t]
            * outside_option_value(problem.game, structure, problem.deviator, t, policy)
            for t in range(problem.base.space.sizes[problem.deviator])
            if problem.weights[t] > 0.0
        )
    )


def reduce_support(weights: np.ndarray, points: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Carathéodory pruning: zero out atoms until the support is affinely independent.

    Keeps ``sum w_k points_k = target`` and ``sum w_k = 1`` exact while the
    support shrinks to at most dim(target) + 1 atoms; ties in the pivot step
    are broken by the lowest atom index for determinism.
    """
    w = np.array(weights, dtype=float)
    while True:
        live = np.flatnonzero(w > TOL_NORM)
        if live.size <= points.shape[1] + 1:
            return w
        block = np.vstack([points[live].T, np.ones(live.size)])  # (d+1, k)
        null = _null_vector(block)
        if null is None:
            return w
        ratios = np.full(live.size, np.inf)
        pos = null > TOL_NORM
        ratios[pos] = w[live[pos]] / null[pos]
        step = ratios.min()
        if not np.isfinite(step):
            null = -null
            pos = null > TOL_NORM
            ratios = np.full(live.size, np.inf)
            ratios[pos] = w[live[pos]] / null[pos]
            step = ratios.min()
        w[live] = w[live] - step * null
        w[w < TOL_NORM] = 0.0


def _null_vector(block: np.ndarray) -> np.ndarray | None:
    """A nonzero vector in the kernel of ``block``, or None if full column rank."""
    _, s, vt = np.linalg.svd(block, full_matrices=True)
    rank = int(np.sum(s > 1e-12))
    if rank >= vt.shape[0]:
        return None
    return vt[-1]


def convexify(problem: PunishmentProblem, config: RunConfig = DEFAULT_CONFIG) -> PunishmentSolution:
    """Solve the punishment design problem on the posterior grid.

    Minimizes the weighted deviator value over lotteries of grid posteriors
    subject to the martingale constraint; the deviator's belief is pinned by
    construction on every atom.  The base co-marginal is always added to the
    grid, so the program is feasible by the one-atom lottery.
    """
    space = problem.base.space
    deviator = problem.deviator
    co_base = problem.base.co_marginal(deviator).reshape(-1)
    n_cells = co_base.size
    grid = simplex_grid(n_cells, problem.grid_resolution)
    if np.min(np.max(np.abs(grid - co_base), axis=1)) > TOL_NORM:
        grid = np.vstack([grid, co_base])
    policy = _deviator_policy(problem)
    co_shape = space.co_sizes(deviator)
    values = np.array([grid_value(problem, g.reshape(co_shape), policy) for g in grid])

    try:
        res = solve_lp(values, a_eq=grid.T, b_eq=co_base)
    except LPInfeasibleError as exc:  # cannot happen: the base point is on the grid
        raise LPInfeasibleError(f"punishment grid lost the base point: {exc}") from exc
    weights = reduce_support(res.x, grid, co_base)
    live = np.flatnonzero(weights > TOL_NORM)
    total = weights[live].sum()
    atoms = tuple(
        (float(weights[k] / total), problem.paste(grid[k].reshape(co_shape))) for k in live
    )
    lottery = PosteriorLottery(atoms)
    effective = problem.effective_base()
    report = check_bayes_plausible(lottery, effective, deviator=deviator)
    if not report.ok:
        raise InvalidDistributionError(
            f"internal: punishment lottery not plausible (dev {report.max_deviation:.3g})"
        )
    device = lottery_to_device(lottery, effective, deviator=deviator)
    per_type = per_type_values(problem, lottery, policy)
    value = float(problem.weights @ per_type)
    return PunishmentSolution(
        problem=problem,
        lottery=lottery,
        device=device,
        value=value,
        per_type_values=per_type,
        grid_points=grid,
        grid_values=values,
    )


def per_type_values(
    problem: PunishmentProblem,
    lottery: PosteriorLottery,
    policy: SelectionPolicy | None = None,
) -> np.ndarray:
    """Expected deviation value of each deviator type under a lottery."""
    policy = policy or _deviator_policy(problem)
    n_types = problem.base.space.sizes[problem.deviator]
    out = np.zeros(n_types)
    for t in range(n_types):
        out[t] = sum(
            w * outside_option_value(problem.game, post, problem.deviator, t, policy)
            for w, post in lottery.atoms
        )
    return out


def lottery_value(problem: PunishmentProblem, lottery: PosteriorLottery) -> float:
    """Weighted objective of an arbitrary lottery (babbling baseline, etc.)."""
    return float(problem.weights @ per_type_values(problem, lottery))


def babbling_lottery(problem: PunishmentProblem) -> PosteriorLottery:
    return PosteriorLottery(((1.0, problem.effective_base()),))


def punished_participation_bound(
    game: Game,
    deviator: int,
    base: InformationStructure,
    offpath_belief: np.ndarray,
    weights: np.ndarray | None = None,
    grid_resolution: int = 20,
    config: RunConfig = DEFAULT_CONFIG,
) -> tuple[np.ndarray, PunishmentSolution]:
    """Per-type outside-option bounds under the optimal punishment lottery.

    These are the participation bounds the mechanism program takes as given.
    """
    problem = PunishmentProblem(
        game=game,
        deviator=deviator,
        base=base,
        offpath_belief=offpath_belief,
        weights=weights,
        grid_resolution=grid_resolution,
    )
    solution = convexify(problem, config)
    return solution.per_type_values, solution


@dataclass(frozen=True, eq=False)
class AlphaIteration:
    """Joint punishment/mechanism record from the heuristic weight iteration.

    The coupling between objective weights and the multipliers of the binding
    participation constraints has no closed-form algorithm; this damped
    fixed-point loop is a heuristic device and is flagged as such in reports.
    """

    weights: dict[int, np.ndarray]
    bounds: dict[int, np.ndarray]
    solution: object  # MechanismSolution
    iterations: int
    converged: bool
    heuristic: str = "damped fixed point (cap 50, damping 0.5)"


def alpha_fixed_point(
    game: Game,
    prior: InformationStructure,
    objective: np.ndarray,
    deviators: tuple[int, ...],
    offpath_beliefs: dict[int, np.ndarray],
    grid_resolution: int = 20,
    max_iterations: int = 50,
    damping: float = 0.5,
    tol: float = 1e-9,
    config: RunConfig = DEFAULT_CONFIG,
) -> AlphaIteration:
    """Iterate: punish with current weights, solve the mechanism, read the
    participation multipliers back as next weights."""
    from .mechanism import MechanismLP, solve_optimal_mechanism

    space = prior.space
    weights = {
        i: np.full(space.sizes[i], 1.0 / space.sizes[i]) for i in deviators
    }
    solution = None
    bounds: dict[int, np.ndarray] = {}
    for iteration in range(1, max_iterations + 1):
        bounds = {}
        for i in deviators:
            per_type, _ = punished_participation_bound(
                game, i, prior, offpath_beliefs[i], weights[i], grid_resolution, config
            )
            bounds[i] = per_type
        spec = MechanismLP(
            objective=objective,
            bounds={(i, t): float(bounds[i][t]) for i in deviators for t in range(space.sizes[i])},
        )
        solution = solve_optimal_mechanism(spec, prior, game.utilities, config)
        drift = 0.0
        for i in deviators:
            mults = np.array(
                [solution.participation_multipliers.get((i, t), 0.0) for t in range(space.sizes[i])]
            )
            mults = np.clip(mults, 0.0, None)
            target = (
                mults / mults.sum()
                if mults.sum() > tol
                else np.full(space.sizes[i], 1.0 / space.sizes[i])
            )
            updated = (1.0 - damping) * weights[i] + damping * target
            updated /= updated.sum()
            drift = max(drift, float(np.max(np.abs(updated - weights[i]))))
            weights[i] = updated
        if drift <= tol:
            return AlphaIteration(weights, bounds, solution, iteration, converged=True)
    return AlphaIteration(weights, bounds, solution, max_iterations, converged=False)


@dataclass(frozen=True, eq=False)
class OffpathScan:
    """Result of scanning off-path beliefs about the deviator."""

    belief: np.ndarray
    solution: PunishmentSolution
    q_irrelevant: bool
    scanned: tuple[tuple[tuple[float, ...], float], ...]


def optimize_offpath_belief(
    problem: PunishmentProblem,
    q_resolution: int = 20,
    config: RunConfig = DEFAULT_CONFIG,
) -> OffpathScan:
    """Grid search for the off-path belief that punishes the deviator most.

    Ties are broken lexicographically over the belief grid; when the optimal
    value is flat across the whole grid the scan is flagged q-irrelevant.
    """
    n_types = problem.base.space.sizes[problem.deviator]
    grid = simplex_grid(n_types, q_resolution)
    best_q, best_solution, scanned = None, None, []
    for q in grid:
        candidate = PunishmentProblem(
            game=problem.game,
            deviator=problem.deviator,
            base=problem.base,
            offpath_belief=q,
            weights=problem.weights,
            grid_resolution=problem.grid_resolution,
        )
        sol = convexify(candidate, config)
        scanned.append((tuple(float(x) for x in q), sol.value))
        if best_solution is None or sol.value < best_solution.value - TOL_EQ:
            best_q, best_solution = q, sol
    values = [v for _, v in scanned]
    q_irrelevant = max(values) - min(values) <= TOL_EQ
    return OffpathScan(
        belief=best_q,
        solution=best_solution,
        q_irrelevant=q_irrelevant,
        scanned=tuple(scanned),
    )
