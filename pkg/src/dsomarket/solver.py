"""LP relaxation engine and best-first branch-and-bound for 0/1 MILPs.

The LP relaxations are delegated to the HiGHS dual simplex via
``scipy.optimize.linprog`` (deterministic vertex solutions, tight
feasibility tolerances); the branch-and-bound search on top is our own:
best-first node order with insertion-order tie-breaking, branching on the
most fractional binary with lowest-index tie-breaking.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNBOUNDED = "Unbounded"
ITERATION_LIMIT = "IterationLimit"
NODE_LIMIT = "NodeLimit"

_STATUS_MAP = {0: OPTIMAL, 1: ITERATION_LIMIT, 2: INFEASIBLE, 3: UNBOUNDED}


class SolverError(RuntimeError):
    """The LP backend reported numerical trouble."""


@dataclass(frozen=True)
class SolveOptions:
    feasibility_tol: float = 1e-7
    integrality_tol: float = 1e-6
    relative_gap: float = 1e-6
    max_nodes: int = 100_000
    node_order: str = "best-first"          # or "depth-first"
    branch_rule: str = "most-fractional"    # or "first-fractional"

    def __post_init__(self):
        if self.feasibility_tol <= 0 or self.integrality_tol <= 0 \
                or self.relative_gap <= 0:
            raise ValueError("tolerances must be > 0")
        if self.node_order not in ("best-first", "depth-first"):
            raise ValueError(f"unknown node order {self.node_order!r}")
        if self.branch_rule not in ("most-fractional", "first-fractional"):
            raise ValueError(f"unknown branch rule {self.branch_rule!r}")


@dataclass(frozen=True)
class LpStandardForm:
    """Canonical LP: min c @ x, A_ub x <= b_ub, A_eq x == b_eq, lb <= x <= ub."""

    c: np.ndarray
    A_ub: object = None
    b_ub: np.ndarray | None = None
    A_eq: object = None
    b_eq: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None


@dataclass(frozen=True)
class LpResult:
    status: str
    values: np.ndarray | None
    objective: float
    iterations: int


@dataclass(frozen=True)
class MilpSolution:
    status: str
    values: np.ndarray | None
    objective: float
    nodes_explored: int
    gap: float
    lp_iterations: int


@dataclass(frozen=True)
class BnbNode:
    """Bound overrides relative to the root problem, plus the parent bound."""

    overrides: tuple[tuple[int, float, float], ...]
    bound: float
    depth: int


def solve_lp(form: LpStandardForm, opts: SolveOptions | None = None) -> LpResult:
    """Solve one LP to a vertex with HiGHS dual simplex."""
    opts = opts or SolveOptions()
    n = len(form.c)
    lower = form.lower if form.lower is not None else np.zeros(n)
    upper = form.upper if form.upper is not None else np.full(n, np.inf)
    bounds = np.column_stack([lower, upper])
    tol = max(min(opts.feasibility_tol, 1e-9), 1e-10)
    res = linprog(
        form.c,
        A_ub=form.A_ub, b_ub=form.b_ub,
        A_eq=form.A_eq, b_eq=form.b_eq,
        bounds=bounds,
        method="highs-ds",
        options={
            "presolve": True,
            "primal_feasibility_tolerance": tol,
            "dual_feasibility_tolerance": tol,
        },
    )
    status = _STATUS_MAP.get(res.status)
    if status is None:
        raise SolverError(f"LP backend failed: {res.message}")
    values = np.asarray(res.x, dtype=float) if res.x is not None else None
    objective = float(res.fun) if status == OPTIMAL else (
        -np.inf if status == UNBOUNDED else np.inf)
    return LpResult(status=status, values=values, objective=objective,
                    iterations=int(res.nit))


def _check_binary_mask(problem) -> np.ndarray:
    int_cols = np.flatnonzero(problem.integrality)
    for j in int_cols:
        lo, hi = problem.lower[j], problem.upper[j]
        if not (0.0 <= lo and hi <= 1.0):
            raise ValueError(
                f"integral column {j} must be bounded within [0, 1], "
                f"got [{lo}, {hi}]")
    return int_cols


def _pick_branch_column(frac_cols, fractions, rule: str) -> int:
    if rule == "first-fractional":
        return int(frac_cols[0])
    # most fractional: largest distance from integrality, lowest index wins ties
    dist = np.minimum(fractions, 1.0 - fractions)
    return int(frac_cols[int(np.argmax(dist))])


def solve_milp(problem, opts: SolveOptions | None = None,
               trace: list | None = None) -> MilpSolution:
    """Branch-and-bound over the problem's binary columns.

    ``trace``, when given, collects one ``(depth, parent_bound, lp_objective,
    incumbent_objective)`` tuple per explored node, for diagnostics and
    monotonicity checks.
    """
    opts = opts or SolveOptions()
    int_cols = _check_binary_mask(problem)
    A_ub, b_ub, A_eq, b_eq = problem.relaxation_arrays
    c = problem.objective
    base_lower = problem.lower
    base_upper = problem.upper

    def lp(overrides) -> LpResult:
        lower = base_lower
        upper = base_upper
        if overrides:
            lower = base_lower.copy()
            upper = base_upper.copy()
            for j, lo, hi in overrides:
                lower[j], upper[j] = lo, hi
        return solve_lp(LpStandardForm(c, A_ub, b_ub, A_eq, b_eq,
                                       lower, upper), opts)

    nodes = 0
    lp_iterations = 0
    incumbent: np.ndarray | None = None
    inc_obj = np.inf
    counter = 0
    root = BnbNode(overrides=(), bound=-np.inf, depth=0)
    heap: list = [(root.bound, counter, root)]
    root_status: str | None = None
    pruned_bound = np.inf    # tightest bound among nodes pruned at the cutoff

    def cutoff() -> float:
        return inc_obj - opts.relative_gap * max(1.0, abs(inc_obj))

    def rounding_dive(x: np.ndarray, overrides) -> LpResult:
        """Fix every binary at its rounded relaxation value and re-solve.

        Cheap deterministic incumbent heuristic; on problems whose
        relaxation optimum survives rounding it closes the gap at the root
        instead of crawling a plateau of tied bounds.
        """
        rounded = np.floor(x[int_cols] + 0.5)
        fixes = tuple((int(j), float(v), float(v))
                      for j, v in zip(int_cols, rounded))
        return lp(overrides + fixes)

    while heap and nodes < opts.max_nodes:
        if opts.node_order == "best-first":
            bound, _, node = heapq.heappop(heap)
        else:
            bound, _, node = heap.pop()
        if bound >= cutoff():
            pruned_bound = min(pruned_bound, bound)
            if opts.node_order == "best-first":
                # heap is ordered; every remaining node is at least as bad
                heap.clear()
                break
            continue
        result = lp(node.overrides)
        nodes += 1
        lp_iterations += result.iterations
        if node.depth == 0:
            root_status = result.status
        if result.status == INFEASIBLE:
            if trace is not None:
                trace.append((node.depth, node.bound, np.inf, inc_obj))
            continue
        if result.status == UNBOUNDED:
            return MilpSolution(UNBOUNDED, None, -np.inf, nodes, np.inf,
                                lp_iterations)
        if result.status != OPTIMAL:
            raise SolverError(f"relaxation returned {result.status}")
        obj = result.objective
        if trace is not None:
            trace.append((node.depth, node.bound, obj, inc_obj))
        if obj >= cutoff():
            pruned_bound = min(pruned_bound, obj)
            continue
        x = result.values
        frac = x[int_cols] - np.floor(x[int_cols] + 0.5)
        fractional = np.abs(frac) > opts.integrality_tol
        if not np.any(fractional):
            if obj < inc_obj:
                inc_obj = obj
                incumbent = x
            continue
        if node.depth == 0 or (incumbent is None and nodes % 50 == 0):
            dive = rounding_dive(x, node.overrides)
            lp_iterations += dive.iterations
            if dive.status == OPTIMAL and dive.objective < inc_obj:
                inc_obj = dive.objective
                incumbent = dive.values
                if obj >= cutoff():
                    pruned_bound = min(pruned_bound, obj)
                    continue
        frac_cols = int_cols[fractional]
        fractions = x[frac_cols] - np.floor(x[frac_cols])
        j = _pick_branch_column(frac_cols, fractions, opts.branch_rule)
        for fixed in (1.0, 0.0) if opts.node_order == "depth-first" else (0.0, 1.0):
            counter += 1
            child = BnbNode(overrides=node.overrides + ((j, fixed, fixed),),
                            bound=obj, depth=node.depth + 1)
            heap_item = (child.bound, counter, child)
            if opts.node_order == "best-first":
                heapq.heappush(heap, heap_item)
            else:
                heap.append(heap_item)

    if incumbent is None:
        if heap and nodes >= opts.max_nodes:
            return MilpSolution(NODE_LIMIT, None, np.inf, nodes, np.inf,
                                lp_iterations)
        if root_status == UNBOUNDED:
            return MilpSolution(UNBOUNDED, None, -np.inf, nodes, np.inf,
                                lp_iterations)
        return MilpSolution(INFEASIBLE, None, np.inf, nodes, np.inf,
                            lp_iterations)

    candidates = [item[0] for item in heap] + [pruned_bound, inc_obj]
    best_bound = min(candidates)
    gap = max(0.0, (inc_obj - best_bound) / max(1.0, abs(inc_obj)))
    if heap and nodes >= opts.max_nodes and gap > opts.relative_gap:
        return MilpSolution(NODE_LIMIT, incumbent, inc_obj, nodes, gap,
                            lp_iterations)
    return MilpSolution(OPTIMAL, incumbent, inc_obj, nodes, gap,
                        lp_iterations)
