"""Revenue decomposition, the regrouping identity, and the price sweep."""

from dataclasses import replace

import numpy as np
import pytest

from conftest import make_scenario
from dsomarket.analysis import (
    StaleSchedule,
    compute_revenue,
    export_sweep,
    regrouping_residual,
    run_sweep,
    scale_energy_offers,
)
from dsomarket.formulation import build, decode
from dsomarket.model import DemandBlock
from dsomarket.solver import OPTIMAL, solve_milp


@pytest.fixture(scope="module")
def generator_case():
    """One hour, one 1 MW generator offering below the wholesale price."""
    scenario = make_scenario(T=1, kinds=("ddgag",))
    problem = build(scenario)
    solution = solve_milp(problem)
    assert solution.status == OPTIMAL
    schedule = decode(scenario, problem, solution.values, solution.status)
    return scenario, schedule, solution


def test_generator_revenue_hand_computed(generator_case):
    # offer 20 vs wholesale 30: sell the full 1 MW; capacity-down 0.5 MW is
    # the only regulation product with headroom left (P - r_dn >= 0 allows
    # it, P + r_up <= p_max does not)
    scenario, schedule, solution = generator_case
    name = scenario.ddgags[0].name
    assert schedule.energy[name][1] == pytest.approx(1.0)
    assert schedule.cap_up[name][1] == pytest.approx(0.0)
    assert schedule.cap_dn[name][1] == pytest.approx(0.5)
    rev = compute_revenue(schedule, scenario)
    e = rev.entities[name]
    assert e.energy == pytest.approx(20.0)
    assert e.capacity == pytest.approx(0.5 * 4.0)
    assert e.mileage == pytest.approx(0.5 * 1.0 * 0.5 * 0.2)
    assert rev.dso_energy == pytest.approx(30.0)
    assert rev.dso_capacity == pytest.approx(0.5 * 5.0)
    assert rev.dso_mileage == pytest.approx(0.5 * 1.0 * 0.5 * 0.25)
    assert rev.dso_position[1] == pytest.approx(rev.dso_total)
    assert solution.objective == pytest.approx(-10.5125)


def test_regrouping_identity(generator_case):
    scenario, schedule, solution = generator_case
    rev = compute_revenue(schedule, scenario)
    assert regrouping_residual(rev, solution.objective) <= 1e-9


def test_stale_schedule_rejected(generator_case):
    scenario, schedule, _ = generator_case
    other = replace(scenario, wholesale=replace(
        scenario.wholesale, energy=(31.0,)))
    with pytest.raises(StaleSchedule):
        compute_revenue(schedule, other)


def test_demand_blocks_priced_stepwise():
    # 3 MW served: 2 MW from the 30 $/MWh block, 1 MW from the 10 $/MWh one
    s = make_scenario(T=1, kinds=("drag",))
    cfg = s.drags[0]
    blocks = (DemandBlock(2.0, (30.0,)), DemandBlock(2.0, (10.0,)))
    s = replace(s, drags=(replace(cfg, blocks=blocks),))
    problem = build(s)
    x = np.zeros(problem.num_cols)
    reg = problem.registry
    x[reg[("P_block", 0, 1, cfg.name)]] = 2.0
    x[reg[("P_block", 1, 1, cfg.name)]] = 1.0
    schedule = decode(s, problem, x)
    rev = compute_revenue(schedule, s)
    assert rev.entities[cfg.name].energy == pytest.approx(-(2 * 30 + 1 * 10))


def test_scale_energy_offers_touches_only_target(bundled):
    scaled = scale_energy_offers(bundled, "esag-1", 2.0)
    assert scaled.offers["esag-1"].energy[0] == pytest.approx(
        2.0 * bundled.offers["esag-1"].energy[0])
    assert scaled.offers["esag-1"].cap_up == bundled.offers["esag-1"].cap_up
    assert scaled.offers["ddgag-1"] == bundled.offers["ddgag-1"]
    assert scaled.drags == bundled.drags


def test_scale_energy_offers_scales_demand_blocks(bundled):
    scaled = scale_energy_offers(bundled, "drag-1", 0.5)
    base_block = bundled.drags[0].blocks[0]
    block = scaled.drags[0].blocks[0]
    assert block.p_max == base_block.p_max
    assert block.prices[0] == pytest.approx(0.5 * base_block.prices[0])
    assert scaled.offers["drag-1"].energy[0] == pytest.approx(
        0.5 * bundled.offers["drag-1"].energy[0])


def test_sweep_unknown_target_raises(bundled):
    with pytest.raises(KeyError):
        run_sweep(bundled, "nobody", cases=1, threads=1)


def test_sweep_cases_ordered_and_optimal():
    scenario = make_scenario(T=1, kinds=("ddgag",))
    result = run_sweep(scenario, "ddgag-x", cases=5, threads=1)
    assert [c.index for c in result.cases] == [1, 2, 3, 4, 5]
    assert [c.multiplier for c in result.cases] == [0.1, 0.2, 0.3, 0.4, 0.5]
    assert all(c.status == OPTIMAL for c in result.cases)
    # cheaper energy offers can only improve the coordination objective
    objectives = [c.objective for c in result.cases]
    assert objectives == sorted(objectives)


def test_sweep_parallel_matches_serial():
    scenario = make_scenario(T=1, kinds=("ddgag",))
    serial = run_sweep(scenario, "ddgag-x", cases=4, threads=1)
    parallel = run_sweep(scenario, "ddgag-x", cases=4, threads=2)
    for a, b in zip(serial.cases, parallel.cases):
        assert a.index == b.index
        assert a.objective == pytest.approx(b.objective, abs=1e-12)
        assert a.revenue.entities == b.revenue.entities


def test_export_sweep_layout(tmp_path):
    scenario = make_scenario(T=1, kinds=("ddgag", "esag"))
    result = run_sweep(scenario, "ddgag-x", cases=3, threads=1)
    path = tmp_path / "sweep.csv"
    export_sweep(result, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == ("i,multiplier,entity,energy_$,capacity_$,mileage_$,"
                       "total_$,status")
    # one row per entity plus the wholesale position, per case
    assert len(lines) == 1 + 3 * (2 + 1)
    assert lines[1].startswith("1,0.1,")
    assert any(line.split(",")[2] == "dso_wholesale" for line in lines[1:])
