"""Deterministic two-phase simplex with Bland's pivoting rule.

Solves  min c'x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x >= 0.

Bland's rule (always pick the lowest-index eligible entering column, break
ratio-test ties by the lowest-index basic variable) never cycles and makes
the returned vertex a deterministic function of the input data, which the
rest of the toolkit relies on for reproducible lotteries and mechanisms.

Duals are reported as sensitivities of the optimal value to the right-hand
sides: ``duals_eq[k] = d(value)/d(b_eq[k])`` and likewise for ``duals_ub``.
For a minimization, inequality duals are <= 0 at binding rows.  Redundant
equality rows are tolerated (their duals are not unique; one consistent
assignment is returned).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LPInfeasibleError, LPUnboundedError

_PIVOT_TOL = 1e-10
_FEAS_TOL = 1e-9


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    value: float
    duals_eq: np.ndarray
    duals_ub: np.ndarray
    basis: tuple[int, ...]


def _pivot(tableau: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    for r in range(tableau.shape[0]):
        if r != row and abs(tableau[r, col]) > 0.0:
            tableau[r] -= tableau[r, col] * tableau[row]
    basis[row] = col


def _bland_entering(reduced: np.ndarray, allowed: int) -> int | None:
    for j in range(allowed):
        if reduced[j] < -_PIVOT_TOL:
            return j
    return None


def _bland_leaving(tableau: np.ndarray, basis: np.ndarray, col: int) -> int | None:
    m = tableau.shape[0] - 1
    best_row, best_ratio = None, None
    for r in range(m):
        a = tableau[r, col]
        if a > _PIVOT_TOL:
            ratio = tableau[r, -1] / a
            if (
                best_ratio is None
                or ratio < best_ratio - _PIVOT_TOL
                or (abs(ratio - best_ratio) <= _PIVOT_TOL and basis[r] < basis[best_row])
            ):
                best_row, best_ratio = r, ratio
    return best_row


def _run_simplex(tableau: np.ndarray, basis: np.ndarray, allowed: int) -> None:
    while True:
        col = _bland_entering(tableau[-1, :-1], allowed)
        if col is None:
            return
        row = _bland_leaving(tableau, basis, col)
        if row is None:
            raise LPUnboundedError("objective unbounded below")
        _pivot(tableau, basis, row, col)


def solve_lp(
    c: np.ndarray,
    a_eq: np.ndarray | None = None,
    b_eq: np.ndarray | None = None,
    a_ub: np.ndarray | None = None,
    b_ub: np.ndarray | None = None,
) -> LPResult:
    """Solve the LP; raises ``LPInfeasibleError`` / ``LPUnboundedError``."""
    c = np.asarray(c, dtype=float)
    n = c.size
    a_eq = np.zeros((0, n)) if a_eq is None else np.asarray(a_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).reshape(-1)
    a_ub = np.zeros((0, n)) if a_ub is None else np.asarray(a_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).reshape(-1)
    m_eq, m_ub = a_eq.shape[0], a_ub.shape[0]
    m = m_eq + m_ub

    # Equality standard form: [A_eq 0; A_ub I] [x; s] = [b_eq; b_ub], x,s >= 0.
    a = np.zeros((m, n + m_ub))
    a[:m_eq, :n] = a_eq
    a[m_eq:, :n] = a_ub
    a[m_eq:, n:] = np.eye(m_ub)
    b = np.concatenate([b_eq, b_ub])
    flip = b < 0
    a[flip] *= -1.0
    b = np.abs(b)

    n_struct = n + m_ub
    n_total = n_struct + m  # artificials on every row
    tableau = np.zeros((m + 1, n_total + 1))
    tableau[:m, :n_struct] = a
    tableau[:m, n_struct:n_total] = np.eye(m)
    tableau[:m, -1] = b
    basis = np.arange(n_struct, n_total)

    # Phase 1: minimize the artificial mass.
    tableau[-1, n_struct:n_total] = 1.0
    tableau[-1] -= tableau[:m].sum(axis=0)
    _run_simplex(tableau, basis, allowed=n_struct)
    if tableau[-1, -1] < -_FEAS_TOL:
        raise LPInfeasibleError(f"phase-1 residual {-tableau[-1, -1]:.3g}")
    # Drive leftover artificial variables out of the basis where possible;
    # rows that cannot pivot are redundant and stay at level zero.
    for r in range(m):
        if basis[r] >= n_struct:
            for j in range(n_struct):
                if abs(tableau[r, j]) > _PIVOT_TOL:
                    _pivot(tableau, basis, r, j)
                    break

    # Phase 2 on the original objective.
    tableau[-1, :] = 0.0
    tableau[-1, :n] = c
    for r in range(m):
        if basis[r] < n_total:
            tableau[-1] -= tableau[-1, basis[r]] * tableau[r]
    _run_simplex(tableau, basis, allowed=n_struct)

    x = np.zeros(n_struct)
    for r in range(m):
        if basis[r] < n_struct:
            x[basis[r]] = tableau[r, -1]
    value = float(c @ x[:n])

    # Duals from the basis: solve B^T y = c_B against the flipped system,
    # then undo the row flips.  Artificial basis columns (redundant rows)
    # carry zero cost, so the system stays consistent.
    full = np.hstack([a, np.eye(m)])
    cost = np.concatenate([c, np.zeros(m_ub + m)])
    bmat = full[:, basis]
    cb = cost[basis]
    y, *_ = np.linalg.lstsq(bmat.T, cb, rcond=None)
    y = np.where(flip, -y, y)
    return LPResult(
        x=x[:n],
        value=value,
        duals_eq=y[:m_eq].copy(),
        duals_ub=y[m_eq:].copy(),
        basis=tuple(int(j) for j in basis),
    )
