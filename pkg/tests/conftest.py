"""Shared fixtures: the bundled case study (built and solved once per
session) and a small-scenario factory for targeted tests."""

from __future__ import annotations

import pytest

from dsomarket.casestudy import bundled_case_study
from dsomarket.formulation import build, decode
from dsomarket.model import (
    Branch,
    Bus,
    DdgagConfig,
    DemandBlock,
    DragConfig,
    EsagConfig,
    EvcsConfig,
    Horizon,
    Network,
    OfferPrices,
    RegulationSignal,
    Scenario,
    WholesalePrices,
)
from dsomarket.solver import solve_milp


@pytest.fixture(scope="session")
def bundled():
    return bundled_case_study()


@pytest.fixture(scope="session")
def bundled_problem(bundled):
    return build(bundled)


@pytest.fixture(scope="session")
def bundled_solution(bundled_problem):
    return solve_milp(bundled_problem)


@pytest.fixture(scope="session")
def bundled_schedule(bundled, bundled_problem, bundled_solution):
    return decode(bundled, bundled_problem, bundled_solution.values,
                  bundled_solution.status)


def make_scenario(T=2, kinds=("ddgag",), *, wholesale_energy=30.0,
                  cap_price=5.0, offer_energy=20.0, offer_cap=4.0,
                  extra_load_bus=False, p_load=0.0, s_base=1.0,
                  pl_max=20.0):
    """Small radial scenario: substation plus one bus per aggregator kind
    (in the given order), optionally one more bus carrying a fixed load."""
    steps = tuple(range(1, T + 1))
    const = lambda v: (float(v),) * T
    zeros = const(0.0)

    n_extra = len(kinds) + (1 if extra_load_bus else 0)
    buses = [Bus(1, zeros, zeros)]
    branches = []
    for i in range(n_extra):
        bid = i + 2
        load = const(p_load) if (extra_load_bus and i == n_extra - 1) else zeros
        buses.append(Bus(bid, load, zeros))
        branches.append(Branch(i + 1, bid - 1, bid, r=0.01, x=0.01,
                               pl_max=pl_max, ql_max=pl_max))

    offer = OfferPrices(energy=const(offer_energy), cap_up=const(offer_cap),
                        cap_dn=const(offer_cap), mil_up=const(offer_cap / 20),
                        mil_dn=const(offer_cap / 20))
    drags, esags, evcss, ddgags, offers = [], [], [], [], {}
    for i, kind in enumerate(kinds):
        node = i + 2
        name = f"{kind}-x"
        if kind == "drag":
            drags.append(DragConfig(
                name=name, node=node,
                blocks=(DemandBlock(p_max=4.0, prices=const(offer_energy)),),
                cap_up_max=const(1.0), cap_dn_max=const(1.0), tan_phi=0.33))
        elif kind == "esag":
            esags.append(EsagConfig(
                name=name, node=node, eta_ch=1.0, eta_di=1.0,
                e_min=1.0, e_max=5.0, e_init=3.0, dr_max=2.0, cr_max=2.0))
        elif kind == "evcs":
            evcss.append(EvcsConfig(
                name=name, node=node, availability=steps[-min(T, 2):],
                er_max=3.0, err_max=0.5, cl_max=3.0, e_init=1.0,
                gamma_ch=1.0))
        elif kind == "ddgag":
            ddgags.append(DdgagConfig(
                name=name, node=node, p_min=0.0, p_max=1.0, ru=0.5, rd=0.5,
                tan_phi=0.33))
        else:
            raise ValueError(kind)
        offers[name] = offer

    return Scenario(
        horizon=Horizon(steps=steps),
        wholesale=WholesalePrices(
            energy=const(wholesale_energy), cap_up=const(cap_price),
            cap_dn=const(cap_price), mil_up=const(cap_price / 20),
            mil_dn=const(cap_price / 20)),
        regulation=RegulationSignal(mu_up=const(0.5), mu_dn=const(0.5),
                                    s_up=const(1.0), s_dn=const(1.0)),
        network=Network(buses=tuple(buses), branches=tuple(branches),
                        substation_bus=1, v_min=0.9, v_max=1.1,
                        s_base=s_base),
        drags=tuple(drags), esags=tuple(esags), evcss=tuple(evcss),
        ddgags=tuple(ddgags), offers=offers)
