"""DSO coordination of DER aggregator market offers.

Build a scenario (or load the bundled case study), compile it into a
mixed-integer linear program, solve it, and decompose the resulting
schedule into per-aggregator revenues.
"""

from .analysis import (
    EntityRevenue,
    RevenueReport,
    StaleSchedule,
    SweepCase,
    SweepResult,
    compute_revenue,
    run_sweep,
)
from .casestudy import bundled_case_study
from .formulation import (
    MilpProblem,
    Schedule,
    VariableRegistry,
    build,
    decode,
)
from .model import (
    Scenario,
    ValidationReport,
    per_unit_view,
    validate_scenario,
)
from .scenario_io import (
    ResultBundle,
    export_results,
    load_scenario,
    save_scenario,
    scenario_hash,
)
from .solver import (
    LpResult,
    MilpSolution,
    SolveOptions,
    solve_lp,
    solve_milp,
)

__all__ = [
    "EntityRevenue", "RevenueReport", "StaleSchedule", "SweepCase",
    "SweepResult", "compute_revenue", "run_sweep", "bundled_case_study",
    "MilpProblem", "Schedule", "VariableRegistry", "build", "decode",
    "Scenario", "ValidationReport", "per_unit_view", "validate_scenario",
    "ResultBundle", "export_results", "load_scenario", "save_scenario",
    "scenario_hash", "LpResult", "MilpSolution", "SolveOptions",
    "solve_lp", "solve_milp",
]

__version__ = "0.1.0"
