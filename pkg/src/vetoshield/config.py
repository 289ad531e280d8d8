"""Run configuration: tolerances, grid resolutions, and selection defaults.

Two tolerance tiers are used everywhere: ``TOL_NORM`` validates raw input
tables, ``TOL_EQ`` absorbs accumulated floating-point error in derived
equalities.  Equilibrium and grid-search checks get their own, looser bounds.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, replace

TOL_NORM = 1e-12   # normalization of input probability tables
TOL_EQ = 1e-9      # derived equalities (Bayes plausibility, outcome matching)
TOL_EQM = 1e-8     # accepted best-response slack for default-game equilibria
TOL_PBE = 1e-6     # accepted slack for grid perfect Bayesian equilibria

CONFIG_ENV_VAR = "VETOSHIELD_CONFIG"


@dataclass(frozen=True)
class RunConfig:
    """Immutable bundle of numeric knobs shared by the pipelines."""

    tol_norm: float = TOL_NORM
    tol_eq: float = TOL_EQ
    tol_eqm: float = TOL_EQM
    tol_pbe: float = TOL_PBE
    posterior_grid: int = 20      # simplex grid resolution for punishment
    offpath_grid: int = 20        # grid resolution for off-path belief scans
    strategy_grid: int = 10       # veto/report grid for brute-force harness
    selection: str = "lexicographic_first"
    seed: int = 0
    enumeration_cap: int = 10_000_000

    def __post_init__(self):
        for name in ("tol_norm", "tol_eq", "tol_eqm", "tol_pbe"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.posterior_grid < 2 or self.strategy_grid < 2:
            raise ValueError("grid resolutions must be at least 2")

    def audit_block(self) -> dict:
        """Tolerance/grid record embedded in every emitted report."""
        return {
            "tolerances": {
                "normalization": self.tol_norm,
                "equality": self.tol_eq,
                "equilibrium": self.tol_eqm,
                "pbe": self.tol_pbe,
            },
            "grids": {
                "posterior": self.posterior_grid,
                "offpath": self.offpath_grid,
                "strategy": self.strategy_grid,
            },
            "selection": self.selection,
            "seed": self.seed,
        }


DEFAULT_CONFIG = RunConfig()


def load_config(path: str | None = None) -> RunConfig:
    """Load a config JSON file, falling back to $VETOSHIELD_CONFIG, then defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    if path is None:
        return DEFAULT_CONFIG
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    known = set(asdict(DEFAULT_CONFIG))
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return replace(DEFAULT_CONFIG, **raw)
