import numpy as np
import pytest
from scipy.optimize import linprog

from vetoshield.errors import LPInfeasibleError, LPUnboundedError
from vetoshield.lp import solve_lp


def random_feasible_lp(rng):
    n = int(rng.integers(2, 7))
    m_eq = int(rng.integers(0, 3))
    m_ub = int(rng.integers(1, 5))
    c = rng.normal(size=n)
    x0 = rng.uniform(0.1, 1.0, size=n)  # keeps the program feasible
    a_eq = rng.normal(size=(m_eq, n))
    b_eq = a_eq @ x0
    a_ub = rng.normal(size=(m_ub, n))
    b_ub = a_ub @ x0 + rng.uniform(0.0, 1.0, size=m_ub)
    return c, a_eq if m_eq else None, b_eq if m_eq else None, a_ub, b_ub


def test_matches_reference_solver_on_random_programs():
    rng = np.random.default_rng(1)
    optimal = 0
    for _ in range(200):
        c, a_eq, b_eq, a_ub, b_ub = random_feasible_lp(rng)
        ref = linprog(
            c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs"
        )
        if ref.status == 3:
            with pytest.raises(LPUnboundedError):
                solve_lp(c, a_eq, b_eq, a_ub, b_ub)
            continue
        assert ref.status == 0
        res = solve_lp(c, a_eq, b_eq, a_ub, b_ub)
        optimal += 1
        assert res.value == pytest.approx(ref.fun, abs=1e-7)
        # primal feasibility at the returned vertex
        assert np.all(res.x >= -1e-9)
        assert np.all(a_ub @ res.x <= b_ub + 1e-8)
        if a_eq is not None:
            assert np.allclose(a_eq @ res.x, b_eq, atol=1e-8)
    assert optimal >= 50


def test_duals_match_reference_marginals():
    rng = np.random.default_rng(2)
    checked = 0
    for _ in range(100):
        c, a_eq, b_eq, a_ub, b_ub = random_feasible_lp(rng)
        ref = linprog(
            c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs"
        )
        if ref.status != 0:
            continue
        res = solve_lp(c, a_eq, b_eq, a_ub, b_ub)
        assert np.allclose(res.duals_ub, ref.ineqlin.marginals, atol=1e-6)
        if a_eq is not None:
            assert np.allclose(res.duals_eq, ref.eqlin.marginals, atol=1e-6)
        checked += 1
    assert checked >= 30


def test_complementary_slackness():
    rng = np.random.default_rng(3)
    for _ in range(50):
        c, a_eq, b_eq, a_ub, b_ub = random_feasible_lp(rng)
        try:
            res = solve_lp(c, a_eq, b_eq, a_ub, b_ub)
        except LPUnboundedError:
            continue
        slack = b_ub - a_ub @ res.x
        assert np.all(np.abs(res.duals_ub * slack) <= 1e-7)


def test_deterministic_repeat():
    rng = np.random.default_rng(4)
    c, a_eq, b_eq, a_ub, b_ub = random_feasible_lp(rng)
    first = solve_lp(c, a_eq, b_eq, a_ub, b_ub)
    second = solve_lp(c, a_eq, b_eq, a_ub, b_ub)
    assert first.x.tobytes() == second.x.tobytes()
    assert first.basis == second.basis


def test_infeasible_detected():
    # x1 + x2 = 1 and x1 + x2 >= 2 cannot hold with x >= 0
    with pytest.raises(LPInfeasibleError):
        solve_lp(
            np.array([1.0, 1.0]),
            a_eq=np.array([[1.0, 1.0]]),
            b_eq=np.array([1.0]),
            a_ub=np.array([[-1.0, -1.0]]),
            b_ub=np.array([-2.0]),
        )


def test_unbounded_detected():
    with pytest.raises(LPUnboundedError):
        solve_lp(np.array([-1.0]), a_ub=np.array([[-1.0]]), b_ub=np.array([0.0]))


def test_redundant_equalities_are_tolerated():
    # duplicated equality rows must not break the solve
    res = solve_lp(
        np.array([1.0, 2.0]),
        a_eq=np.array([[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]]),
        b_eq=np.array([1.0, 1.0, 2.0]),
    )
    assert res.value == pytest.approx(1.0, abs=1e-10)
    assert res.x[0] == pytest.approx(1.0, abs=1e-10)


def test_degenerate_vertex_terminates():
    # many ties in the ratio test; Bland's rule must not cycle
    a_ub = np.array([[1.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    b_ub = np.array([1.0, 1.0, 1.0, 1.0])
    res = solve_lp(np.array([-1.0, -1.0]), a_ub=a_ub, b_ub=b_ub)
    assert res.value == pytest.approx(-1.0, abs=1e-10)
