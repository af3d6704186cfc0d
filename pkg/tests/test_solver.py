"""LP backend and branch-and-bound: statuses, options, search behavior."""

import numpy as np
import pytest

from oracles import (
    enumerate_binaries_milp,
    make_problem,
    random_milp,
    vertex_enumeration_lp,
)
from dsomarket.formulation import LE
from dsomarket.solver import (
    INFEASIBLE,
    NODE_LIMIT,
    OPTIMAL,
    UNBOUNDED,
    LpStandardForm,
    SolveOptions,
    solve_lp,
    solve_milp,
)


def test_options_reject_bad_values():
    with pytest.raises(ValueError):
        SolveOptions(relative_gap=0.0)
    with pytest.raises(ValueError):
        SolveOptions(node_order="breadth-first")
    with pytest.raises(ValueError):
        SolveOptions(branch_rule="pseudo-cost")


def test_lp_known_optimum():
    # min -x - y  s.t.  x + y <= 1,  0 <= x, y <= 1
    form = LpStandardForm(
        c=np.array([-1.0, -1.0]),
        A_ub=np.array([[1.0, 1.0]]), b_ub=np.array([1.0]),
        lower=np.zeros(2), upper=np.ones(2))
    res = solve_lp(form)
    assert res.status == OPTIMAL
    assert res.objective == pytest.approx(-1.0)
    assert res.values[0] + res.values[1] == pytest.approx(1.0)


def test_lp_degenerate_still_optimal():
    # redundant, coincident constraints at the optimum
    form = LpStandardForm(
        c=np.array([-1.0, 0.0]),
        A_ub=np.array([[1.0, 0.0], [1.0, 0.0], [2.0, 0.0], [1.0, 1.0]]),
        b_ub=np.array([1.0, 1.0, 2.0, 1.0]),
        lower=np.zeros(2), upper=np.full(2, 10.0))
    res = solve_lp(form)
    assert res.status == OPTIMAL
    assert res.objective == pytest.approx(-1.0)


def test_lp_infeasible_status():
    form = LpStandardForm(
        c=np.array([1.0]),
        A_ub=np.array([[-1.0]]), b_ub=np.array([-2.0]),   # x >= 2
        lower=np.zeros(1), upper=np.ones(1))
    assert solve_lp(form).status == INFEASIBLE


def test_lp_unbounded_status():
    form = LpStandardForm(c=np.array([-1.0]), lower=np.zeros(1),
                          upper=np.array([np.inf]))
    assert solve_lp(form).status == UNBOUNDED


def test_milp_known_knapsack():
    # max 5a + 4b + 3c  s.t.  2a + 3b + c <= 3  ->  a = c = 1
    problem = make_problem(
        c=[-5.0, -4.0, -3.0],
        A=[[2.0, 3.0, 1.0]], senses=[LE], b=[3.0],
        lower=[0, 0, 0], upper=[1, 1, 1], integrality=[True] * 3)
    sol = solve_milp(problem)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(-8.0)
    assert sol.values[0] == pytest.approx(1.0)
    assert sol.values[1] == pytest.approx(0.0)
    assert sol.gap <= 1e-6


def test_milp_pure_lp_shortcut():
    problem = make_problem(
        c=[-1.0, -1.0], A=[[1.0, 1.0]], senses=[LE], b=[1.5],
        lower=[0, 0], upper=[1, 1], integrality=[False, False])
    sol = solve_milp(problem)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(-1.5)
    assert sol.nodes_explored == 1


def test_milp_infeasible():
    problem = make_problem(
        c=[1.0], A=[[-1.0]], senses=[LE], b=[-2.0],   # x >= 2, x binary
        lower=[0], upper=[1], integrality=[True])
    assert solve_milp(problem).status == INFEASIBLE


def test_milp_unbounded():
    problem = make_problem(
        c=[-1.0, 0.0], A=[[0.0, 1.0]], senses=[LE], b=[1.0],
        lower=[0, 0], upper=[np.inf, 1], integrality=[False, True])
    assert solve_milp(problem).status == UNBOUNDED


def test_milp_rejects_non_binary_integrality():
    problem = make_problem(
        c=[1.0], A=[[1.0]], senses=[LE], b=[5.0],
        lower=[0], upper=[3], integrality=[True])
    with pytest.raises(ValueError):
        solve_milp(problem)


def _needs_branching():
    # relaxation splits both binaries at 0.5; integer optimum needs search
    return make_problem(
        c=[-1.0, -1.0, -0.1],
        A=[[1.0, 1.0, 0.0], [1.0, -1.0, 0.0], [-1.0, 1.0, 0.0]],
        senses=[LE, LE, LE], b=[1.0, 0.0, 0.0],
        lower=[0, 0, 0], upper=[1, 1, 1],
        integrality=[True, True, False])


def test_milp_node_limit_status():
    sol = solve_milp(_needs_branching(), SolveOptions(max_nodes=1))
    assert sol.status in (NODE_LIMIT, OPTIMAL)
    full = solve_milp(_needs_branching())
    assert full.status == OPTIMAL
    # relaxation sits at x = y = 0.5 (objective -1.1); the only integer
    # point on x = y <= 0.5 is the origin
    assert full.objective == pytest.approx(-0.1)
    assert full.nodes_explored > 1


def test_trace_child_bounds_inherit_parent_objective():
    trace = []
    solve_milp(_needs_branching(), trace=trace)
    assert trace, "trace should record explored nodes"
    for depth, parent_bound, lp_obj, _ in trace:
        if np.isfinite(parent_bound) and np.isfinite(lp_obj):
            # a child relaxation can never beat its parent's bound
            assert lp_obj >= parent_bound - 1e-7


@pytest.mark.parametrize("node_order,branch_rule", [
    ("best-first", "most-fractional"),
    ("best-first", "first-fractional"),
    ("depth-first", "most-fractional"),
    ("depth-first", "first-fractional"),
])
def test_search_options_agree_on_random_instances(node_order, branch_rule):
    rng = np.random.default_rng(7)
    opts = SolveOptions(node_order=node_order, branch_rule=branch_rule)
    for _ in range(15):
        c, A, b, lower, upper, integrality = random_milp(
            rng, max_binaries=6, max_continuous=8)
        problem = make_problem(c, A, [LE] * len(b), b, lower, upper,
                               integrality)
        sol = solve_milp(problem, opts)
        assert sol.status == OPTIMAL
        oracle = enumerate_binaries_milp(
            c, A, b, lower, upper, np.flatnonzero(integrality))
        assert oracle is not None
        assert sol.objective == pytest.approx(oracle, abs=1e-6, rel=1e-6)


def test_lp_matches_vertex_oracle_small_sample():
    rng = np.random.default_rng(11)
    for _ in range(5):
        n = 3
        A = rng.normal(size=(4, n))
        upper = rng.uniform(0.5, 2.0, n)
        x0 = rng.uniform(0, 1, n) * upper
        b = A @ x0 + rng.uniform(0, 1, 4)
        c = rng.normal(size=n)
        res = solve_lp(LpStandardForm(c=c, A_ub=A, b_ub=b,
                                      lower=np.zeros(n), upper=upper))
        assert res.status == OPTIMAL
        assert res.objective == pytest.approx(
            vertex_enumeration_lp(c, A, b, np.zeros(n), upper), abs=1e-8)


def test_milp_solution_is_feasible_and_integral():
    rng = np.random.default_rng(23)
    for _ in range(10):
        c, A, b, lower, upper, integrality = random_milp(
            rng, max_binaries=5, max_continuous=6)
        problem = make_problem(c, A, [LE] * len(b), b, lower, upper,
                               integrality)
        sol = solve_milp(problem)
        assert sol.status == OPTIMAL
        assert problem.max_residual(sol.values) <= 1e-6
        frac = sol.values[np.flatnonzero(integrality)]
        assert np.all(np.abs(frac - np.round(frac)) <= 1e-6)
