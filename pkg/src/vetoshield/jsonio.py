"""JSON schemas, parsing, and serialization for the command-line pipelines.

Probabilities in input files may be decimals or "p/q" rational strings.
Every parse failure is wrapped in ``ParseError`` so the CLI can map it to a
single exit code.  Emitted documents are validated against their own schema
before they are written.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import jsonschema
import numpy as np

from .belief import PosteriorLottery, SignalingDevice
from .defaultgame import Game, ReducedFormGame, StrategicBayesianGame
from .errors import VetoshieldError
from .mechanism import VetoEquilibrium, VetoEvent
from .model import (
    DecisionRule,
    InformationStructure,
    OutcomeSpace,
    TypeSpace,
    UtilityTable,
)


class ParseError(VetoshieldError):
    """Input document malformed or inconsistent."""


def parse_probability(raw: Any) -> float:
    if isinstance(raw, bool):
        raise ParseError(f"not a probability: {raw!r}")
    if isinstance(raw, (int, float)):
        return float(raw)
    if isinstance(raw, str):
        try:
            return float(Fraction(raw))
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"bad probability string {raw!r}") from exc
    raise ParseError(f"not a probability: {raw!r}")


def parse_type_space(doc: Any) -> TypeSpace:
    if not isinstance(doc, list) or not doc:
        raise ParseError("type_space must be a non-empty array of per-player arrays")
    labels, values = [], []
    has_values = False
    for row in doc:
        if not isinstance(row, list) or not row:
            raise ParseError("each player needs a non-empty type array")
        row_labels, row_values = [], []
        for k, entry in enumerate(row):
            if isinstance(entry, str):
                row_labels.append(entry)
                row_values.append(float(k))
            elif isinstance(entry, list) and len(entry) == 2:
                row_labels.append(str(entry[0]))
                row_values.append(float(entry[1]))
                has_values = True
            else:
                raise ParseError(f"bad type entry {entry!r}")
        labels.append(tuple(row_labels))
        values.append(tuple(row_values))
    try:
        return TypeSpace(tuple(labels), tuple(values) if has_values else None)
    except VetoshieldError as exc:
        raise ParseError(str(exc)) from exc


def _profile_indices(space: TypeSpace, profile: list) -> tuple[int, ...]:
    if len(profile) != space.n_players:
        raise ParseError(f"profile {profile!r} has wrong length")
    return tuple(space.index_of(i, str(label)) for i, label in enumerate(profile))


def parse_structure(space: TypeSpace, doc: Any, what: str = "prior") -> InformationStructure:
    if not isinstance(doc, list):
        raise ParseError(f"{what} must be an array of {{profile, prob}} records")
    table = np.zeros(space.sizes)
    for rec in doc:
        try:
            table[_profile_indices(space, rec["profile"])] += parse_probability(rec["prob"])
        except (KeyError, TypeError) as exc:
            raise ParseError(f"{what}: bad record {rec!r}") from exc
    try:
        return InformationStructure(space, table)
    except VetoshieldError as exc:
        raise ParseError(f"{what}: {exc}") from exc


def parse_utilities(space: TypeSpace, outcomes: OutcomeSpace, doc: Any) -> UtilityTable:
    values = np.zeros((space.n_players, outcomes.n_outcomes) + space.sizes)
    seen = np.zeros_like(values, dtype=bool)
    if not isinstance(doc, list):
        raise ParseError("utilities must be an array of records")
    for rec in doc:
        try:
            idx = (int(rec["player"]), outcomes.index_of(str(rec["outcome"]))) + _profile_indices(
                space, rec["profile"]
            )
            values[idx] = float(rec["value"])
            seen[idx] = True
        except (KeyError, TypeError, VetoshieldError) as exc:
            raise ParseError(f"utilities: bad record {rec!r}") from exc
    if not seen.all():
        raise ParseError("utilities: every (player, outcome, profile) cell must be given")
    return UtilityTable(space, outcomes, values)


def parse_rule(space: TypeSpace, outcomes: OutcomeSpace, doc: Any, what: str = "rule") -> DecisionRule:
    table = np.zeros(space.sizes + (outcomes.n_outcomes,))
    if not isinstance(doc, list):
        raise ParseError(f"{what} must be an array of {{profile, dist}} records")
    for rec in doc:
        try:
            profile = _profile_indices(space, rec["profile"])
            for label, prob in rec["dist"].items():
                table[profile + (outcomes.index_of(str(label)),)] = parse_probability(prob)
        except (KeyError, TypeError, AttributeError, VetoshieldError) as exc:
            raise ParseError(f"{what}: bad record {rec!r}") from exc
    try:
        return DecisionRule(space, outcomes, table)
    except VetoshieldError as exc:
        raise ParseError(f"{what}: {exc}") from exc


def parse_device(space: TypeSpace, doc: Any) -> SignalingDevice:
    try:
        domain = tuple(int(i) for i in doc["domain"])
        alphabet = tuple(str(s) for s in doc["alphabet"])
        kernel = np.zeros(tuple(space.sizes[i] for i in sorted(domain)) + (len(alphabet),))
        for rec in doc["rows"]:
            profile = tuple(
                space.index_of(i, str(label)) for i, label in zip(sorted(domain), rec["profile"])
            )
            for label, prob in rec["dist"].items():
                kernel[profile + (alphabet.index(str(label)),)] = parse_probability(prob)
        channel_of = doc.get("channel_of")
        return SignalingDevice(
            space, domain, alphabet, kernel,
            channel_of=int(channel_of) if channel_of is not None else None,
        )
    except (KeyError, TypeError, ValueError, VetoshieldError) as exc:
        raise ParseError(f"device: {exc}") from exc


def parse_reduced_form(space: TypeSpace, doc: Any, designated: int) -> ReducedFormGame:
    if not isinstance(doc, list):
        raise ParseError("reduced_form must be an array of {player, type, breakpoints}")
    curves: dict[tuple[int, int], np.ndarray] = {}
    for rec in doc:
        try:
            player = int(rec["player"])
            t = space.index_of(player, str(rec["type"]))
            curves[(player, t)] = np.array(
                [[parse_probability(p), float(v)] for p, v in rec["breakpoints"]]
            )
        except (KeyError, TypeError, ValueError, VetoshieldError) as exc:
            raise ParseError(f"reduced_form: bad record {rec!r}") from exc
    try:
        return ReducedFormGame(space, designated, curves)
    except VetoshieldError as exc:
        raise ParseError(f"reduced_form: {exc}") from exc


def parse_strategic_game(
    space: TypeSpace, outcomes: OutcomeSpace, doc: Any
) -> StrategicBayesianGame:
    try:
        actions = tuple(tuple(str(a) for a in row) for row in doc["actions"])
        sizes = tuple(len(a) for a in actions)
        outcome_map = np.zeros(sizes + (outcomes.n_outcomes,))
        for rec in doc["outcome_map"]:
            profile = tuple(actions[i].index(str(a)) for i, a in enumerate(rec["profile"]))
            for label, prob in rec["dist"].items():
                outcome_map[profile + (outcomes.index_of(str(label)),)] = parse_probability(prob)
        utilities = parse_utilities(space, outcomes, doc["utilities"])
        return StrategicBayesianGame(space, outcomes, actions, outcome_map, utilities)
    except (KeyError, TypeError, ValueError, VetoshieldError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"strategic_game: {exc}") from exc


@dataclass(frozen=True, eq=False)
class ProblemBundle:
    space: TypeSpace
    outcomes: OutcomeSpace | None
    prior: InformationStructure
    game: Game | None
    utilities: UtilityTable | None
    rules: dict[str, DecisionRule]


def load_problem(doc: Any) -> ProblemBundle:
    if not isinstance(doc, dict):
        raise ParseError("problem document must be a JSON object")
    space = parse_type_space(doc.get("type_space"))
    outcomes = None
    if "outcomes" in doc:
        labels = doc["outcomes"]
        if not isinstance(labels, list) or not labels:
            raise ParseError("outcomes must be a non-empty array")
        try:
            outcomes = OutcomeSpace(tuple(str(x) for x in labels))
        except VetoshieldError as exc:
            raise ParseError(str(exc)) from exc
    if "prior" not in doc:
        raise ParseError("problem document needs a prior")
    prior = parse_structure(space, doc["prior"], "prior")
    game: Game | None = None
    utilities = None
    if "strategic_game" in doc:
        if outcomes is None:
            raise ParseError("strategic_game needs an outcomes array")
        game = parse_strategic_game(space, outcomes, doc["strategic_game"])
        utilities = game.utilities
    elif "reduced_form" in doc:
        game = parse_reduced_form(space, doc["reduced_form"], int(doc.get("designated", 0)))
    if utilities is None and "utilities" in doc:
        if outcomes is None:
            raise ParseError("utilities need an outcomes array")
        utilities = parse_utilities(space, outcomes, doc["utilities"])
    rules = {}
    for name, rec in (doc.get("rules") or {}).items():
        if outcomes is None:
            raise ParseError("rules need an outcomes array")
        rules[str(name)] = parse_rule(space, outcomes, rec, what=f"rule {name!r}")
    return ProblemBundle(space, outcomes, prior, game, utilities, rules)


def parse_veto_equilibrium(bundle: ProblemBundle, doc: Any) -> VetoEquilibrium:
    if not isinstance(doc, dict):
        raise ParseError("veto_equilibrium must be an object")
    space = bundle.space
    try:
        veto_probs = tuple(
            np.array([parse_probability(x) for x in row]) for row in doc["veto_probs"]
        )
        events = []
        for rec in doc.get("events", []):
            rule = None
            if rec.get("rule") is not None:
                rule = parse_rule(space, bundle.outcomes, rec["rule"], "event rule")
            events.append(
                VetoEvent(
                    players=tuple(int(i) for i in rec["players"]),
                    prob=parse_probability(rec["prob"]),
                    structure=parse_structure(space, rec["table"], "event structure"),
                    rule=rule,
                )
            )
        acceptance = None
        if doc.get("acceptance") is not None:
            rec = doc["acceptance"]
            rule = None
            if rec.get("rule") is not None:
                rule = parse_rule(space, bundle.outcomes, rec["rule"], "acceptance rule")
            acceptance = (parse_structure(space, rec["table"], "acceptance structure"), rule)
        beliefs = {
            int(i): np.array([parse_probability(x) for x in row])
            for i, row in (doc.get("offpath_beliefs") or {}).items()
        }
        return VetoEquilibrium(
            prior=bundle.prior,
            veto_probs=veto_probs,
            events=tuple(events),
            acceptance=acceptance,
            offpath_beliefs=beliefs,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"veto_equilibrium: {exc}") from exc
    except VetoshieldError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"veto_equilibrium: {exc}") from exc


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def structure_to_json(structure: InformationStructure) -> list[dict]:
    out = []
    for profile in structure.space.profiles():
        p = float(structure.table[profile])
        if p > 0.0:
            out.append({"profile": list(structure.space.label_profile(profile)), "prob": p})
    return out


def rule_to_json(rule: DecisionRule) -> list[dict]:
    out = []
    for profile in rule.space.profiles():
        dist = {
            rule.outcomes.labels[z]: float(rule.table[profile + (z,)])
            for z in range(rule.outcomes.n_outcomes)
            if rule.table[profile + (z,)] > 0.0
        }
        out.append({"profile": list(rule.space.label_profile(profile)), "dist": dist})
    return out


def device_to_json(device: SignalingDevice) -> dict:
    rows = []
    for profile in np.ndindex(*device.domain_sizes):
        labels = [device.space.labels[i][t] for i, t in zip(device.domain, profile)]
        dist = {
            device.signals[s]: float(device.kernel[profile + (s,)])
            for s in range(device.n_signals)
            if device.kernel[profile + (s,)] > 0.0
        }
        rows.append({"profile": labels, "dist": dist})
    doc = {"domain": list(device.domain), "alphabet": list(device.signals), "rows": rows}
    if device.channel_of is not None:
        doc["channel_of"] = device.channel_of
    return doc


def lottery_to_json(lottery: PosteriorLottery) -> dict:
    return {
        "atoms": [
            {"weight": float(w), "table": structure_to_json(post)}
            for w, post in lottery.atoms
        ]
    }


# ---------------------------------------------------------------------------
# output envelope schema
# ---------------------------------------------------------------------------

OUTPUT_SCHEMA = {
    "type": "object",
    "required": ["command", "audit", "result"],
    "properties": {
        "command": {"type": "string"},
        "audit": {
            "type": "object",
            "required": ["tolerances", "grids", "selection", "seed", "checks"],
            "properties": {
                "tolerances": {"type": "object"},
                "grids": {"type": "object"},
                "selection": {"type": "string"},
                "seed": {"type": "integer"},
                "checks": {"type": "array", "items": {"type": "string"}},
            },
        },
        "result": {"type": "object"},
    },
}


def validate_output(doc: dict) -> None:
    jsonschema.validate(doc, OUTPUT_SCHEMA)
