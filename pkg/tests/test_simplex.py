import numpy as np
import pytest

from ucsm.errors import DimensionMismatch
from ucsm.simplex import (INF_BOUND, LpProblem, LpStatus, brute_force_lp,
                          remap_start, solve_lp)


def box(n):
    return np.zeros(n), np.full(n, INF_BOUND)


def test_textbook_maximization():
    # max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36.
    lo, hi = box(2)
    prob = LpProblem(c=[-3.0, -5.0], a_eq=np.zeros((0, 2)), b_eq=[],
                     a_le=[[1.0, 0.0], [0.0, 2.0], [3.0, 2.0]],
                     b_le=[4.0, 12.0, 18.0], lo=lo, hi=hi)
    sol = solve_lp(prob)
    assert sol.status is LpStatus.OPTIMAL
    np.testing.assert_allclose(sol.x, [2.0, 6.0], atol=1e-8)
    assert sol.objective == pytest.approx(-36.0)


def test_equality_constraints():
    prob = LpProblem(c=[1.0, 2.0, 3.0], a_eq=[[1.0, 1.0, 1.0]], b_eq=[6.0],
                     a_le=np.zeros((0, 3)), b_le=[],
                     lo=np.zeros(3), hi=np.full(3, 4.0))
    sol = solve_lp(prob)
    assert sol.status is LpStatus.OPTIMAL
    np.testing.assert_allclose(sol.x, [4.0, 2.0, 0.0], atol=1e-8)


def test_infeasible():
    prob = LpProblem(c=[1.0], a_eq=[[1.0]], b_eq=[5.0],
                     a_le=np.zeros((0, 1)), b_le=[],
                     lo=[0.0], hi=[1.0])
    assert solve_lp(prob).status is LpStatus.INFEASIBLE


def test_unbounded():
    lo = np.array([-INF_BOUND])
    hi = np.array([INF_BOUND])
    prob = LpProblem(c=[1.0], a_eq=np.zeros((0, 1)), b_eq=[],
                     a_le=np.zeros((0, 1)), b_le=[], lo=lo, hi=hi)
    assert solve_lp(prob).status is LpStatus.UNBOUNDED


def test_bound_flip_only_problem():
    # No rows at all: variables sit at the cheaper bound.
    prob = LpProblem(c=[1.0, -1.0], a_eq=np.zeros((0, 2)), b_eq=[],
                     a_le=np.zeros((0, 2)), b_le=[],
                     lo=np.array([2.0, 0.0]), hi=np.array([5.0, 3.0]))
    sol = solve_lp(prob)
    np.testing.assert_allclose(sol.x, [2.0, 3.0])


def test_negative_lower_bounds():
    prob = LpProblem(c=[1.0, 1.0], a_eq=[[1.0, 1.0]], b_eq=[0.0],
                     a_le=np.zeros((0, 2)), b_le=[],
                     lo=np.array([-2.0, -3.0]), hi=np.array([5.0, 5.0]))
    sol = solve_lp(prob)
    assert sol.status is LpStatus.OPTIMAL
    assert sol.objective == pytest.approx(0.0, abs=1e-9)


def test_dimension_checks():
    with pytest.raises(DimensionMismatch):
        LpProblem(c=[1.0, 2.0], a_eq=np.zeros((0, 2)), b_eq=[],
                  a_le=[[1.0, 1.0]], b_le=[1.0, 2.0],
                  lo=np.zeros(2), hi=np.ones(2))
    with pytest.raises(DimensionMismatch):
        LpProblem(c=[1.0], a_eq=np.zeros((0, 1)), b_eq=[],
                  a_le=np.zeros((0, 1)), b_le=[],
                  lo=[1.0], hi=[0.0])


def random_lp(rng, n=None):
    n = n or int(rng.integers(2, 7))
    m_eq = int(rng.integers(0, 2))
    m_le = int(rng.integers(1, 5))
    return LpProblem(
        c=rng.normal(size=n),
        a_eq=rng.normal(size=(m_eq, n)),
        b_eq=rng.normal(size=m_eq) * 0.5,
        a_le=rng.normal(size=(m_le, n)),
        b_le=rng.uniform(0.2, 2.0, size=m_le),
        lo=np.zeros(n),
        hi=rng.uniform(0.5, 4.0, size=n),
    )


def test_agrees_with_vertex_oracle(rng):
    solved = 0
    for _ in range(100):
        prob = random_lp(rng)
        sol = solve_lp(prob)
        ref = brute_force_lp(prob)
        assert sol.status is ref.status
        if sol.status is LpStatus.OPTIMAL:
            assert sol.objective == pytest.approx(ref.objective, abs=1e-8,
                                                  rel=1e-8)
            solved += 1
    assert solved >= 30  # sanity: the fuzz hits plenty of feasible LPs


def test_duality_gap_small(rng):
    for _ in range(100):
        prob = random_lp(rng)
        sol = solve_lp(prob)
        if sol.status is LpStatus.OPTIMAL:
            gap = abs(sol.objective - sol.dual_objective)
            assert gap <= 1e-6 * (1.0 + abs(sol.objective))


def test_primal_feasibility_of_solutions(rng):
    for _ in range(100):
        prob = random_lp(rng)
        sol = solve_lp(prob)
        if sol.status is not LpStatus.OPTIMAL:
            continue
        x = sol.x
        assert np.all(prob.a_le @ x <= prob.b_le + 1e-7)
        if prob.a_eq.shape[0]:
            np.testing.assert_allclose(prob.a_eq @ x, prob.b_eq, atol=1e-7)
        assert np.all(x >= prob.lo - 1e-9)
        assert np.all(x <= prob.hi + 1e-9)


def test_degenerate_problem_terminates():
    # Many redundant rows through the same vertex.
    n = 4
    a = np.vstack([np.eye(n), np.eye(n), np.ones((1, n))])
    b = np.concatenate([np.zeros(2 * n), [0.0]])
    prob = LpProblem(c=-np.ones(n), a_eq=np.zeros((0, n)), b_eq=[],
                     a_le=a, b_le=b, lo=np.zeros(n), hi=np.ones(n))
    sol = solve_lp(prob)
    assert sol.status is LpStatus.OPTIMAL
    assert sol.objective == pytest.approx(0.0, abs=1e-9)


def test_warm_start_matches_cold(rng):
    """Re-solving with appended rows from a remapped basis is exact."""
    agree = 0
    for _ in range(150):
        prob = random_lp(rng)
        sol0 = solve_lp(prob)
        if sol0.status is not LpStatus.OPTIMAL:
            continue
        n = prob.n
        extra = int(rng.integers(1, 4))
        a2 = rng.normal(size=(extra, n))
        b2 = a2 @ sol0.x + rng.normal(size=extra) * 0.3
        prob2 = LpProblem(c=prob.c, a_eq=prob.a_eq, b_eq=prob.b_eq,
                          a_le=np.vstack([prob.a_le, a2]),
                          b_le=np.concatenate([prob.b_le, b2]),
                          lo=prob.lo, hi=prob.hi)
        old_keys = list(range(prob.a_le.shape[0]))
        new_keys = old_keys + [("new", i) for i in range(extra)]
        start = remap_start(sol0, n, prob.a_eq.shape[0], old_keys, new_keys)
        warm = solve_lp(prob2, start=start)
        cold = solve_lp(prob2)
        assert warm.status is cold.status
        if warm.status is LpStatus.OPTIMAL:
            assert warm.objective == pytest.approx(cold.objective, abs=1e-7,
                                                   rel=1e-7)
            agree += 1
    assert agree >= 50


def test_warm_start_with_fixing_rows(rng):
    """Branch-style rows x_j <= 0 / -x_j <= -hi_j warm start correctly."""
    for _ in range(60):
        prob = random_lp(rng)
        sol0 = solve_lp(prob)
        if sol0.status is not LpStatus.OPTIMAL:
            continue
        n = prob.n
        j = int(rng.integers(0, n))
        if rng.integers(0, 2):
            a2 = np.zeros((1, n))
            a2[0, j] = 1.0
            b2 = np.array([0.0])
        else:
            a2 = np.zeros((1, n))
            a2[0, j] = -1.0
            b2 = np.array([-prob.hi[j]])
        prob2 = LpProblem(c=prob.c, a_eq=prob.a_eq, b_eq=prob.b_eq,
                          a_le=np.vstack([prob.a_le, a2]),
                          b_le=np.concatenate([prob.b_le, b2]),
                          lo=prob.lo, hi=prob.hi)
        old_keys = list(range(prob.a_le.shape[0]))
        start = remap_start(sol0, n, prob.a_eq.shape[0], old_keys,
                            old_keys + [("fix", j)])
        warm = solve_lp(prob2, start=start)
        cold = solve_lp(prob2)
        assert warm.status is cold.status
        if warm.status is LpStatus.OPTIMAL:
            assert warm.objective == pytest.approx(cold.objective, abs=1e-7,
                                                   rel=1e-7)


def test_remap_start_rejects_unknown_keys():
    prob = random_lp(np.random.default_rng(0), n=3)
    sol = solve_lp(prob)
    old_keys = list(range(prob.a_le.shape[0]))
    assert remap_start(sol, prob.n, prob.a_eq.shape[0],
                       old_keys + ["missing"], old_keys) is None
