"""Command-line entry point tying the solver modules into pipelines.

Exit codes: 0 success, 64 input parse failure, 65 infeasible program,
70 internal postcondition failure.  The ``opportunism`` command instead
exits 0 / 2 / 3 for immune / not immune / indeterminate.  Outputs are
deterministic byte-for-byte for fixed config and inputs; every document
embeds an audit block with the tolerances and the checks that ran.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import jsonio
from .belief import check_bayes_plausible
from .config import RunConfig, load_config
from .defaultgame import ReducedFormGame, SelectionPolicy, StrategicBayesianGame, solve_bne
from .errors import InfeasibleMechanismError, VetoshieldError
from .jsonio import ParseError, ProblemBundle, load_problem
from .mechanism import (
    MechanismLP,
    PoolProposal,
    construct_full_participation,
    pool_informed_principal,
    solve_optimal_mechanism,
)
from .model import validate_information_structure
from .opportunism import (
    Immunity,
    check_immunity,
    designer_space_from_reduced_form,
)
from .punishment import (
    OffpathScan,
    PunishmentProblem,
    convexify,
    lower_convex_envelope_1d,
    optimize_offpath_belief,
)
from .simharness import (
    GrandGameInstance,
    enumerate_veto_equilibria,
    replicate_check,
)

EXIT_OK = 0
EXIT_PARSE = 64
EXIT_INFEASIBLE = 65
EXIT_CHECK_FAILED = 70


def _read_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _emit(doc: dict, command: str, out_dir: str, config: RunConfig, checks: list[str]) -> dict:
    envelope = {
        "command": command,
        "audit": {**config.audit_block(), "checks": sorted(checks)},
        "result": doc,
    }
    jsonio.validate_output(envelope)
    text = json.dumps(envelope, sort_keys=True, indent=2)
    sys.stdout.write(text + "\n")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, f"{command}.json"), "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return envelope


def _load_bundle(path: str) -> tuple[ProblemBundle, dict]:
    doc = _read_json(path)
    return load_problem(doc), doc


def _parse_structure_file(bundle: ProblemBundle, path: str, what: str):
    doc = _read_json(path)
    if isinstance(doc, dict) and "structure" in doc:
        doc = doc["structure"]
    return jsonio.parse_structure(bundle.space, doc, what)


def _parse_weights_file(path: str) -> np.ndarray:
    doc = _read_json(path)
    if isinstance(doc, dict) and "weights" in doc:
        doc = doc["weights"]
    if not isinstance(doc, list):
        raise ParseError(f"{path}: weights must be an array")
    return np.array([jsonio.parse_probability(x) for x in doc])


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_validate(args, config: RunConfig) -> int:
    bundle, _ = _load_bundle(args.game)
    checks = ["prior_normalization"]
    result = {"ok": True, "violations": []}
    if args.candidate:
        candidate = _parse_structure_file(bundle, args.candidate, "candidate")
        report = validate_information_structure(candidate, bundle.prior)
        checks.append("support_containment")
        result = {"ok": report.ok, "violations": list(report.violations)}
    _emit(result, "validate", args.out_dir, config, checks)
    return EXIT_OK if result["ok"] else EXIT_CHECK_FAILED


def cmd_solve_game(args, config: RunConfig) -> int:
    bundle, _ = _load_bundle(args.game)
    if not isinstance(bundle.game, StrategicBayesianGame):
        raise ParseError("solve-game needs a strategic_game section")
    structure = (
        _parse_structure_file(bundle, args.structure, "structure")
        if args.structure
        else bundle.prior
    )
    policy = SelectionPolicy(kind=config.selection) if config.selection != "deviator_worst" else SelectionPolicy()
    profile = solve_bne(bundle.game, structure, policy)
    result = {
        "strategies": [
            {
                "player": i,
                "types": {
                    bundle.space.labels[i][t]: {
                        bundle.game.action_labels[i][a]: float(profile.strategies[i][t, a])
                        for a in range(len(bundle.game.action_labels[i]))
                        if profile.strategies[i][t, a] > 0.0
                    }
                    for t in range(bundle.space.sizes[i])
                },
            }
            for i in range(bundle.space.n_players)
        ],
        "epsilon": profile.epsilon,
    }
    _emit(result, "solve-game", args.out_dir, config, ["best_response_sweep"])
    return EXIT_OK


def _punishment_problem(bundle: ProblemBundle, args, config: RunConfig) -> PunishmentProblem:
    if bundle.game is None:
        raise ParseError("punish needs a strategic_game or reduced_form section")
    base = (
        _parse_structure_file(bundle, args.base, "base") if args.base else bundle.prior
    )
    deviator = args.deviator
    if not 0 <= deviator < bundle.space.n_players:
        raise ParseError(f"no player {deviator}")
    weights = _parse_weights_file(args.alpha) if args.alpha else None
    offpath = (
        _parse_weights_file(args.offpath_belief)
        if args.offpath_belief
        else base.marginal(deviator)
    )
    return PunishmentProblem(
        game=bundle.game,
        deviator=deviator,
        base=base,
        offpath_belief=offpath,
        weights=weights,
        grid_resolution=args.grid or config.posterior_grid,
    )


def _write_grid_csv(path: str, points: np.ndarray, values: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        n_cells = points.shape[1]
        if n_cells == 2:
            fh.write("posterior,value\n")
            order = np.argsort(points[:, 1], kind="stable")
            for k in order:
                fh.write(f"{points[k, 1]:.12g},{values[k]:.12g}\n")
        else:
            header = ",".join(f"cell{j}" for j in range(n_cells))
            fh.write(f"{header},value\n")
            for point, value in zip(points, values):
                coords = ",".join(f"{x:.12g}" for x in point)
                fh.write(f"{coords},{value:.12g}\n")


def cmd_punish(args, config: RunConfig) -> int:
    bundle, _ = _load_bundle(args.game)
    problem = _punishment_problem(bundle, args, config)
    checks = ["bayes_plausibility", "deviator_opacity", "objective_consistency"]
    if args.optimize_q:
        scan: OffpathScan = optimize_offpath_belief(
            problem, q_resolution=args.optimize_q, config=config
        )
        solution = scan.solution
        extra = {
            "offpath_belief": [float(x) for x in scan.belief],
            "q_irrelevant": scan.q_irrelevant,
        }
        checks.append("offpath_scan")
    else:
        solution = convexify(problem, config)
        extra = {}
    report = check_bayes_plausible(
        solution.lottery, problem.effective_base(), deviator=problem.deviator
    )
    if not report.ok:
        return EXIT_CHECK_FAILED
    result = {
        "deviator": problem.deviator,
        "value": solution.value,
        "per_type_values": [float(v) for v in solution.per_type_values],
        "lottery": jsonio.lottery_to_json(solution.lottery),
        "device": jsonio.device_to_json(solution.device),
        "plausibility_deviation": report.max_deviation,
        **extra,
    }
    _emit(result, "punish", args.out_dir, config, checks)
    if args.out_dir:
        _write_grid_csv(
            os.path.join(args.out_dir, "punish_grid.csv"),
            solution.grid_points,
            solution.grid_values,
        )
    return EXIT_OK


def cmd_solve_mech(args, config: RunConfig) -> int:
    doc = _read_json(args.lp)
    bundle = load_problem(doc)
    if bundle.utilities is None or bundle.outcomes is None:
        raise ParseError("solve-mech needs outcomes and utilities")
    objective = np.zeros(bundle.space.sizes + (bundle.outcomes.n_outcomes,))
    for rec in doc.get("objective", []):
        try:
            profile = tuple(
                bundle.space.index_of(i, str(x)) for i, x in enumerate(rec["profile"])
            )
            objective[profile + (bundle.outcomes.index_of(str(rec["outcome"])),)] = float(
                rec["weight"]
            )
        except (KeyError, TypeError, VetoshieldError) as exc:
            raise ParseError(f"objective: bad record {rec!r}") from exc
    bounds = {}
    for rec in doc.get("bounds", []):
        try:
            i = int(rec["player"])
            bounds[(i, bundle.space.index_of(i, str(rec["type"])))] = float(rec["value"])
        except (KeyError, TypeError, VetoshieldError) as exc:
            raise ParseError(f"bounds: bad record {rec!r}") from exc
    spec = MechanismLP(objective=objective, bounds=bounds)
    try:
        solution = solve_optimal_mechanism(spec, bundle.prior, bundle.utilities, config)
    except InfeasibleMechanismError as exc:
        _emit(
            {"infeasible": True, "relaxation": exc.relaxation},
            "solve-mech",
            args.out_dir,
            config,
            ["relaxation_diagnosis"],
        )
        return EXIT_INFEASIBLE
    result = {
        "value": solution.value,
        "rule": jsonio.rule_to_json(solution.rule),
        "participation_multipliers": [
            {
                "player": i,
                "type": bundle.space.labels[i][t],
                "multiplier": m,
                "slack": solution.participation_slacks[(i, t)],
            }
            for (i, t), m in sorted(solution.participation_multipliers.items())
        ],
        "ic_worst_violation": solution.ic_worst,
    }
    _emit(result, "solve-mech", args.out_dir, config, ["ic", "participation"])
    return EXIT_OK


def cmd_construct(args, config: RunConfig) -> int:
    doc = _read_json(args.veq)
    bundle = load_problem(doc)
    if not isinstance(bundle.game, StrategicBayesianGame):
        raise ParseError("construct needs a strategic_game section")
    veq = jsonio.parse_veto_equilibrium(bundle, doc.get("veto_equilibrium"))
    mechanism = construct_full_participation(veq, bundle.game, config)
    audit = mechanism.audit
    result = {
        "rule": jsonio.rule_to_json(mechanism.rule),
        "channels": [jsonio.device_to_json(ch) for ch in mechanism.channels],
        "offpath_beliefs": {
            str(i): [float(x) for x in q] for i, q in enumerate(mechanism.offpath_beliefs)
        },
        "ic_ok": audit.ic.ok,
        "ic_worst_violation": audit.ic.worst_violation,
        "outcome_deviation": audit.outcome_deviation,
        "no_veto_slacks": [
            {"player": i, "type": bundle.space.labels[i][t], "slack": s}
            for (i, t), s in sorted(audit.no_veto.slacks.items())
        ],
        "ok": audit.ok,
    }
    _emit(result, "construct", args.out_dir, config, ["ic", "outcome_match", "no_veto"])
    return EXIT_OK if audit.ok else EXIT_CHECK_FAILED


def cmd_pool(args, config: RunConfig) -> int:
    doc = _read_json(args.principal)
    bundle = load_problem(doc)
    if not isinstance(bundle.game, StrategicBayesianGame):
        raise ParseError("pool needs a strategic_game section")
    proposals = []
    for rec in doc.get("proposals", []):
        try:
            label = str(rec["label"])
            rule = jsonio.parse_rule(
                bundle.space, bundle.outcomes, rec["rule"], what=f"proposal {label!r}"
            )
        except (KeyError, TypeError) as exc:
            raise ParseError(f"proposals: bad record {rec!r}") from exc
        veq = None
        if rec.get("veto_equilibrium") is not None:
            veq = jsonio.parse_veto_equilibrium(bundle, rec["veto_equilibrium"])
        proposals.append(PoolProposal(label=label, rule=rule, veq=veq))
    try:
        probs = np.array(
            [[jsonio.parse_probability(x) for x in row] for row in doc["proposal_probs"]]
        )
    except (KeyError, TypeError) as exc:
        raise ParseError("proposal_probs missing or malformed") from exc
    pooled = pool_informed_principal(tuple(proposals), probs, bundle.game, bundle.prior, config)
    audit = pooled.audit
    result = {
        "rule": jsonio.rule_to_json(pooled.rule),
        "principal_channel": jsonio.device_to_json(pooled.principal_channel),
        "channels": [jsonio.device_to_json(ch) for ch in pooled.channels],
        "ic_ok": audit.ic.ok,
        "outcome_deviation": audit.outcome_deviation,
        "no_veto_slacks": [
            {"player": i, "type": bundle.space.labels[i][t], "slack": s}
            for (i, t), s in sorted(audit.no_veto.slacks.items())
        ],
        "ok": audit.ok,
    }
    _emit(result, "pool", args.out_dir, config, ["ic", "outcome_match", "no_veto"])
    return EXIT_OK if audit.ok else EXIT_CHECK_FAILED


def cmd_opportunism(args, config: RunConfig) -> int:
    bundle, _ = _load_bundle(args.game)
    if not isinstance(bundle.game, ReducedFormGame):
        raise ParseError("opportunism needs a reduced_form section")
    device_doc = _read_json(args.device)
    designer = designer_space_from_reduced_form(bundle.game, bundle.prior)
    d = bundle.game.designated
    try:
        kernel = np.zeros((bundle.space.sizes[d], len(device_doc["alphabet"])))
        alphabet = [str(s) for s in device_doc["alphabet"]]
        for rec in device_doc["rows"]:
            t = bundle.space.index_of(d, str(rec["profile"][0]))
            for label, prob in rec["dist"].items():
                kernel[t, alphabet.index(str(label))] = jsonio.parse_probability(prob)
    except (KeyError, TypeError, ValueError, VetoshieldError) as exc:
        raise ParseError(f"device: {exc}") from exc
    base = bundle.prior.marginal(d)
    report = check_immunity(designer, kernel, base, config=config)
    result = {
        "verdict": report.verdict.value,
        "reason": report.reason,
        "pressured_types": (
            [bundle.space.labels[d][t] for t in np.flatnonzero(report.pressured)]
            if report.pressured is not None
            else None
        ),
        "alignment_witness": (
            {
                "prefers_dominant": report.alignment.witness.prefers_dominant,
                "prefers_dominated": report.alignment.witness.prefers_dominated,
            }
            if report.alignment is not None and report.alignment.witness is not None
            else None
        ),
    }
    _emit(result, "opportunism", args.out_dir, config, ["alignment", "unraveling_pressure"])
    if report.verdict is Immunity.IMMUNE:
        return 0
    if report.verdict is Immunity.NOT_IMMUNE:
        return 2
    return 3


def cmd_simulate(args, config: RunConfig) -> int:
    doc = _read_json(args.instance)
    bundle = load_problem(doc)
    if bundle.game is None:
        raise ParseError("simulate needs a game section")
    if isinstance(bundle.game, StrategicBayesianGame):
        mech_doc = doc.get("mechanism")
        if not isinstance(mech_doc, list):
            raise ParseError("simulate needs a mechanism rule")
        mechanism = jsonio.parse_rule(bundle.space, bundle.outcomes, mech_doc, "mechanism")
    else:
        values = doc.get("mechanism_values")
        if not isinstance(values, list):
            raise ParseError("reduced-form instances need mechanism_values")
        mechanism = tuple(np.array([float(x) for x in row]) for row in values)
    channels = None
    if doc.get("channels"):
        channels = tuple(jsonio.parse_device(bundle.space, rec) for rec in doc["channels"])
    grid = args.grid or config.strategy_grid
    instance = GrandGameInstance(
        game=bundle.game,
        prior=bundle.prior,
        mechanism=mechanism,
        channels=channels,
        strategy_grid=grid,
        belief_grid=grid,
        cap=config.enumeration_cap,
    )
    found = enumerate_veto_equilibria(instance, config)
    result = {
        "equilibria": [
            {
                "veto_probs": [[float(x) for x in row] for row in eq.profile.veto_probs],
                "offpath_beliefs": {
                    str(i): [float(x) for x in q] for i, q in eq.offpath_beliefs.items()
                },
                "slack": eq.slack,
                "marginal": eq.marginal,
            }
            for eq in found
        ],
        "count": len(found),
        "has_veto_equilibrium": any(
            max(float(x.max()) for x in eq.profile.veto_probs) > 0.0 for eq in found
        ),
    }
    _emit(result, "simulate", args.out_dir, config, ["deviation_sweep", "bayes_onpath"])
    return EXIT_OK


def cmd_replicate(args, config: RunConfig) -> int:
    doc = _read_json(args.veq)
    bundle = load_problem(doc)
    if not isinstance(bundle.game, StrategicBayesianGame):
        raise ParseError("replicate needs a strategic_game section")
    veq = jsonio.parse_veto_equilibrium(bundle, doc.get("veto_equilibrium"))
    grid = args.grid or config.strategy_grid
    report = replicate_check(veq, bundle.game, config, strategy_grid=grid)
    result = {
        "found": report.found,
        "slack": report.slack,
        "outcome_deviation": report.outcome_deviation,
        "marginal": report.marginal,
        "tolerance": 1.0 / grid + config.tol_pbe,
    }
    _emit(result, "replicate", args.out_dir, config, ["deviation_sweep", "outcome_match"])
    return EXIT_OK if report.found else EXIT_CHECK_FAILED


def _svg_envelope(
    xs: np.ndarray, values: np.ndarray, envelope: np.ndarray, base_x: float, base_y: float
) -> str:
    width, height, margin = 640.0, 420.0, 50.0
    lo = min(float(values.min()), float(envelope.min()), 0.0)
    hi = max(float(values.max()), float(envelope.max()), 1e-9)
    span = hi - lo if hi > lo else 1.0

    def sx(x: float) -> float:
        return margin + x * (width - 2 * margin)

    def sy(y: float) -> float:
        return height - margin - (y - lo) / span * (height - 2 * margin)

    def path(ys: np.ndarray) -> str:
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
        return pts

    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}">\n'
        f'<rect width="100%" height="100%" fill="white"/>\n'
        f'<line x1="{sx(0):.2f}" y1="{sy(lo):.2f}" x2="{sx(1):.2f}" y2="{sy(lo):.2f}" '
        f'stroke="black" stroke-width="1"/>\n'
        f'<line x1="{sx(0):.2f}" y1="{sy(lo):.2f}" x2="{sx(0):.2f}" y2="{margin:.2f}" '
        f'stroke="black" stroke-width="1"/>\n'
        f'<polyline points="{path(values)}" fill="none" stroke="black" stroke-width="2"/>\n'
        f'<polyline points="{path(envelope)}" fill="none" stroke="red" stroke-width="2" '
        f'stroke-dasharray="8 4"/>\n'
        f'<circle cx="{sx(base_x):.2f}" cy="{sy(base_y):.2f}" r="5" fill="blue"/>\n'
        f"</svg>\n"
    )


def cmd_envelope(args, config: RunConfig) -> int:
    bundle, _ = _load_bundle(args.game)
    problem = _punishment_problem(bundle, args, config)
    solution = convexify(problem, config)
    points, values = solution.grid_points, solution.grid_values
    out_dir = args.out_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "envelope.csv")
    svg_written = False
    if points.shape[1] == 2:
        order = np.argsort(points[:, 1], kind="stable")
        xs = points[order, 1]
        vals = values[order]
        hull_x, hull_v = lower_convex_envelope_1d(xs, vals)
        env = np.interp(xs, hull_x, hull_v)
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write("belief,value,envelope\n")
            for x, v, e in zip(xs, vals, env):
                fh.write(f"{x:.12g},{v:.12g},{e:.12g}\n")
        base_x = float(problem.base.co_marginal(problem.deviator).reshape(-1)[1])
        svg = _svg_envelope(xs, vals, env, base_x, solution.value)
        with open(os.path.join(out_dir, "envelope.svg"), "w", encoding="utf-8") as fh:
            fh.write(svg)
        svg_written = True
    else:
        _write_grid_csv(csv_path, points, values)
    result = {
        "value": solution.value,
        "csv": os.path.basename(csv_path),
        "svg": "envelope.svg" if svg_written else None,
    }
    _emit(result, "envelope", args.out_dir or ".", config, ["envelope_pointwise"])
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vetoshield",
        description="Veto-constrained mechanism design with informational punishment",
    )
    parser.add_argument("--config", help="path to a RunConfig JSON file")
    parser.add_argument("--seed", type=int, help="seed recorded in audit blocks")
    parser.add_argument("--grid", type=int, help="override the relevant grid resolution")
    parser.add_argument("--out-dir", default="", help="directory for emitted artifacts")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate problem files and structures")
    p.add_argument("--game", required=True)
    p.add_argument("--candidate", help="structure to check against the prior")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve-game", help="equilibrium of the default game")
    p.add_argument("--game", required=True)
    p.add_argument("--structure", help="structure file (defaults to the prior)")
    p.set_defaults(func=cmd_solve_game)

    p = sub.add_parser("punish", help="optimal informational punishment")
    p.add_argument("--game", required=True)
    p.add_argument("--deviator", type=int, required=True)
    p.add_argument("--base", help="post-veto structure file (defaults to the prior)")
    p.add_argument("--alpha", help="objective weights file")
    p.add_argument("--offpath-belief", help="deviator belief file")
    p.add_argument("--optimize-q", type=int, metavar="STEPS", help="scan off-path beliefs")
    p.set_defaults(func=cmd_punish)

    p = sub.add_parser("solve-mech", help="optimal mechanism under bounds")
    p.add_argument("--lp", required=True)
    p.set_defaults(func=cmd_solve_mech)

    p = sub.add_parser("construct", help="full-participation replication")
    p.add_argument("--veq", required=True)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("pool", help="informed-principal pooling")
    p.add_argument("--principal", required=True)
    p.set_defaults(func=cmd_pool)

    p = sub.add_parser("opportunism", help="immunity verdict for a device")
    p.add_argument("--game", required=True)
    p.add_argument("--device", required=True)
    p.add_argument("--deviator", type=int, default=1)
    p.set_defaults(func=cmd_opportunism)

    p = sub.add_parser("simulate", help="brute-force grand-game enumeration")
    p.add_argument("--instance", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replicate", help="verify replication inside the grand game")
    p.add_argument("--veq", required=True)
    p.set_defaults(func=cmd_replicate)

    p = sub.add_parser("envelope", help="value function and its convex envelope")
    p.add_argument("--game", required=True)
    p.add_argument("--deviator", type=int, required=True)
    p.add_argument("--base", help="post-veto structure file (defaults to the prior)")
    p.add_argument("--alpha", help="objective weights file")
    p.add_argument("--offpath-belief", help="deviator belief file")
    p.set_defaults(func=cmd_envelope)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            from dataclasses import replace

            config = replace(config, seed=args.seed)
        return args.func(args, config)
    except ParseError as exc:
        sys.stderr.write(f"parse error: {exc}\n")
        return EXIT_PARSE
    except InfeasibleMechanismError as exc:
        sys.stderr.write(f"infeasible: {exc}\n")
        return EXIT_INFEASIBLE
    except VetoshieldError as exc:
        sys.stderr.write(f"check failed: {exc}\n")
        return EXIT_CHECK_FAILED
    except ValueError as exc:
        sys.stderr.write(f"parse error: {exc}\n")
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
