"""Scenario JSON serialization and result-file export.

The scenario file format is a versioned JSON document with sections
``horizon``, ``wholesale``, ``regulation_signal``, ``network``,
``aggregators``, ``offers``, and a free-text ``assumptions`` block.
Unknown fields are rejected.  Missing mileage prices default to the
corresponding capacity price divided by 20, missing mileage ratios to 1.0,
and missing bus loads to zero; every applied default is reported.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from typing import Any

from .model import (
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
    ScenarioValidationError,
    WholesalePrices,
    validate_scenario,
)

SCHEMA_VERSION = 1
MILEAGE_FRACTION = 1.0 / 20.0


class ParseError(ValueError):
    """The file is not well-formed JSON; carries line/column."""

    def __init__(self, message: str, lineno: int | None = None,
                 colno: int | None = None):
        self.lineno = lineno
        self.colno = colno
        if lineno is not None:
            message = f"{message} (line {lineno}, column {colno})"
        super().__init__(message)


class SchemaError(ValueError):
    """The JSON is well-formed but does not match the scenario schema."""


ValidationError = ScenarioValidationError


def _require_mapping(obj: Any, where: str) -> dict:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where} must be an object")
    return obj


def _check_keys(d: dict, where: str, required: set[str],
                optional: set[str] = frozenset()) -> None:
    keys = set(d)
    unknown = keys - required - optional
    if unknown:
        raise SchemaError(f"{where} has unknown fields: {sorted(unknown)}")
    missing = required - keys
    if missing:
        raise SchemaError(f"{where} is missing fields: {sorted(missing)}")


def _series(d: dict, key: str, where: str) -> tuple[float, ...]:
    xs = d[key]
    if not isinstance(xs, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool)
            for x in xs):
        raise SchemaError(f"{where}.{key} must be a list of numbers")
    return tuple(float(x) for x in xs)


def _number(d: dict, key: str, where: str) -> float:
    x = d[key]
    if not isinstance(x, (int, float)) or isinstance(x, bool):
        raise SchemaError(f"{where}.{key} must be a number")
    return float(x)


def _integer(d: dict, key: str, where: str) -> int:
    x = d[key]
    if not isinstance(x, int) or isinstance(x, bool):
        raise SchemaError(f"{where}.{key} must be an integer")
    return x


def _string(d: dict, key: str, where: str) -> str:
    x = d[key]
    if not isinstance(x, str):
        raise SchemaError(f"{where}.{key} must be a string")
    return x


def _mileage_defaults(d: dict, where: str, T: int,
                      applied: list[str]) -> tuple[tuple[float, ...], tuple[float, ...]]:
    cap_up = _series(d, "cap_up", where)
    cap_dn = _series(d, "cap_dn", where)
    if "mil_up" in d:
        mil_up = _series(d, "mil_up", where)
    else:
        mil_up = tuple(c * MILEAGE_FRACTION for c in cap_up)
        applied.append(f"{where}.mil_up defaulted to cap_up / 20")
    if "mil_dn" in d:
        mil_dn = _series(d, "mil_dn", where)
    else:
        mil_dn = tuple(c * MILEAGE_FRACTION for c in cap_dn)
        applied.append(f"{where}.mil_dn defaulted to cap_dn / 20")
    return mil_up, mil_dn


def scenario_from_dict(doc: dict) -> tuple[Scenario, tuple[str, ...]]:
    """Build a Scenario from a parsed document; returns applied defaults."""
    applied: list[str] = []
    _require_mapping(doc, "document")
    _check_keys(doc, "document",
                {"version", "horizon", "wholesale", "regulation_signal",
                 "network", "aggregators", "offers"},
                {"assumptions"})
    if doc["version"] != SCHEMA_VERSION:
        raise SchemaError(
            f"unsupported schema version {doc['version']!r}, "
            f"expected {SCHEMA_VERSION}")

    h = _require_mapping(doc["horizon"], "horizon")
    _check_keys(h, "horizon", {"steps"}, {"step_hours"})
    steps_raw = h["steps"]
    if not isinstance(steps_raw, list) or not all(
            isinstance(t, int) and not isinstance(t, bool) for t in steps_raw):
        raise SchemaError("horizon.steps must be a list of integers")
    horizon = Horizon(steps=tuple(steps_raw),
                      step_hours=float(h.get("step_hours", 1.0)))
    T = len(horizon)

    w = _require_mapping(doc["wholesale"], "wholesale")
    _check_keys(w, "wholesale", {"energy", "cap_up", "cap_dn"},
                {"mil_up", "mil_dn"})
    mil_up, mil_dn = _mileage_defaults(w, "wholesale", T, applied)
    wholesale = WholesalePrices(
        energy=_series(w, "energy", "wholesale"),
        cap_up=_series(w, "cap_up", "wholesale"),
        cap_dn=_series(w, "cap_dn", "wholesale"),
        mil_up=mil_up, mil_dn=mil_dn)

    r = _require_mapping(doc["regulation_signal"], "regulation_signal")
    _check_keys(r, "regulation_signal", {"mu_up", "mu_dn"}, {"s_up", "s_dn"})
    ones = (1.0,) * T
    if "s_up" not in r:
        applied.append("regulation_signal.s_up defaulted to 1.0")
    if "s_dn" not in r:
        applied.append("regulation_signal.s_dn defaulted to 1.0")
    regulation = RegulationSignal(
        mu_up=_series(r, "mu_up", "regulation_signal"),
        mu_dn=_series(r, "mu_dn", "regulation_signal"),
        s_up=_series(r, "s_up", "regulation_signal") if "s_up" in r else ones,
        s_dn=_series(r, "s_dn", "regulation_signal") if "s_dn" in r else ones)

    net = _require_mapping(doc["network"], "network")
    _check_keys(net, "network",
                {"buses", "branches", "substation_bus", "v_min", "v_max",
                 "s_base"},
                {"v_substation"})
    zeros = (0.0,) * T
    buses = []
    if not isinstance(net["buses"], list):
        raise SchemaError("network.buses must be a list")
    for i, b in enumerate(net["buses"]):
        b = _require_mapping(b, f"network.buses[{i}]")
        _check_keys(b, f"network.buses[{i}]", {"id"}, {"p_load", "q_load"})
        if "p_load" not in b:
            applied.append(f"network.buses[{i}].p_load defaulted to zero")
        if "q_load" not in b:
            applied.append(f"network.buses[{i}].q_load defaulted to zero")
        buses.append(Bus(
            id=_integer(b, "id", f"network.buses[{i}]"),
            p_load=_series(b, "p_load", f"network.buses[{i}]")
            if "p_load" in b else zeros,
            q_load=_series(b, "q_load", f"network.buses[{i}]")
            if "q_load" in b else zeros))
    branches = []
    if not isinstance(net["branches"], list):
        raise SchemaError("network.branches must be a list")
    for i, br in enumerate(net["branches"]):
        br = _require_mapping(br, f"network.branches[{i}]")
        where = f"network.branches[{i}]"
        _check_keys(br, where,
                    {"id", "from", "to", "r", "x", "pl_max", "ql_max"})
        branches.append(Branch(
            id=_integer(br, "id", where),
            from_bus=_integer(br, "from", where),
            to_bus=_integer(br, "to", where),
            r=_number(br, "r", where), x=_number(br, "x", where),
            pl_max=_number(br, "pl_max", where),
            ql_max=_number(br, "ql_max", where)))
    network = Network(
        buses=tuple(buses), branches=tuple(branches),
        substation_bus=_integer(net, "substation_bus", "network"),
        v_min=_number(net, "v_min", "network"),
        v_max=_number(net, "v_max", "network"),
        s_base=_number(net, "s_base", "network"),
        v_substation=float(net.get("v_substation", 1.0)))

    drags, esags, evcss, ddgags = [], [], [], []
    if not isinstance(doc["aggregators"], list):
        raise SchemaError("aggregators must be a list")
    for i, agg in enumerate(doc["aggregators"]):
        agg = _require_mapping(agg, f"aggregators[{i}]")
        where = f"aggregators[{i}]"
        kind = _string(agg, "type", where) if "type" in agg else None
        if kind == "drag":
            _check_keys(agg, where, {"type", "name", "node", "blocks",
                                     "cap_up_max", "cap_dn_max", "tan_phi"})
            blocks = []
            for a, blk in enumerate(agg["blocks"]):
                blk = _require_mapping(blk, f"{where}.blocks[{a}]")
                _check_keys(blk, f"{where}.blocks[{a}]", {"p_max", "prices"})
                blocks.append(DemandBlock(
                    p_max=_number(blk, "p_max", f"{where}.blocks[{a}]"),
                    prices=_series(blk, "prices", f"{where}.blocks[{a}]")))
            drags.append(DragConfig(
                name=_string(agg, "name", where),
                node=_integer(agg, "node", where),
                blocks=tuple(blocks),
                cap_up_max=_series(agg, "cap_up_max", where),
                cap_dn_max=_series(agg, "cap_dn_max", where),
                tan_phi=_number(agg, "tan_phi", where)))
        elif kind == "esag":
            _check_keys(agg, where, {"type", "name", "node", "eta_ch",
                                     "eta_di", "e_min", "e_max", "e_init",
                                     "dr_max", "cr_max"})
            esags.append(EsagConfig(
                name=_string(agg, "name", where),
                node=_integer(agg, "node", where),
                eta_ch=_number(agg, "eta_ch", where),
                eta_di=_number(agg, "eta_di", where),
                e_min=_number(agg, "e_min", where),
                e_max=_number(agg, "e_max", where),
                e_init=_number(agg, "e_init", where),
                dr_max=_number(agg, "dr_max", where),
                cr_max=_number(agg, "cr_max", where)))
        elif kind == "evcs":
            _check_keys(agg, where, {"type", "name", "node", "availability",
                                     "er_max", "err_max", "cl_max", "e_init",
                                     "gamma_ch"})
            avail = agg["availability"]
            if not isinstance(avail, list) or not all(
                    isinstance(t, int) and not isinstance(t, bool)
                    for t in avail):
                raise SchemaError(f"{where}.availability must be a list of "
                                  "integers")
            evcss.append(EvcsConfig(
                name=_string(agg, "name", where),
                node=_integer(agg, "node", where),
                availability=tuple(avail),
                er_max=_number(agg, "er_max", where),
                err_max=_number(agg, "err_max", where),
                cl_max=_number(agg, "cl_max", where),
                e_init=_number(agg, "e_init", where),
                gamma_ch=_number(agg, "gamma_ch", where)))
        elif kind == "ddgag":
            _check_keys(agg, where, {"type", "name", "node", "p_min", "p_max",
                                     "ru", "rd", "tan_phi"})
            ddgags.append(DdgagConfig(
                name=_string(agg, "name", where),
                node=_integer(agg, "node", where),
                p_min=_number(agg, "p_min", where),
                p_max=_number(agg, "p_max", where),
                ru=_number(agg, "ru", where),
                rd=_number(agg, "rd", where),
                tan_phi=_number(agg, "tan_phi", where)))
        else:
            raise SchemaError(f"{where}.type must be one of "
                              "drag/esag/evcs/ddgag")

    offers = {}
    offers_doc = _require_mapping(doc["offers"], "offers")
    for name, o in offers_doc.items():
        o = _require_mapping(o, f"offers[{name}]")
        where = f"offers[{name}]"
        _check_keys(o, where, {"energy", "cap_up", "cap_dn"},
                    {"mil_up", "mil_dn"})
        mil_up, mil_dn = _mileage_defaults(o, where, T, applied)
        offers[name] = OfferPrices(
            energy=_series(o, "energy", where),
            cap_up=_series(o, "cap_up", where),
            cap_dn=_series(o, "cap_dn", where),
            mil_up=mil_up, mil_dn=mil_dn)

    if "assumptions" in doc and not isinstance(doc["assumptions"], list):
        raise SchemaError("assumptions must be a list of strings")

    scenario = Scenario(
        horizon=horizon, wholesale=wholesale, regulation=regulation,
        network=network, drags=tuple(drags), esags=tuple(esags),
        evcss=tuple(evcss), ddgags=tuple(ddgags), offers=offers)
    return scenario, tuple(applied)


def scenario_to_dict(s: Scenario, assumptions: tuple[str, ...] = ()) -> dict:
    doc = {
        "version": SCHEMA_VERSION,
        "horizon": {"steps": list(s.horizon.steps),
                    "step_hours": s.horizon.step_hours},
        "wholesale": {
            "energy": list(s.wholesale.energy),
            "cap_up": list(s.wholesale.cap_up),
            "cap_dn": list(s.wholesale.cap_dn),
            "mil_up": list(s.wholesale.mil_up),
            "mil_dn": list(s.wholesale.mil_dn),
        },
        "regulation_signal": {
            "mu_up": list(s.regulation.mu_up),
            "mu_dn": list(s.regulation.mu_dn),
            "s_up": list(s.regulation.s_up),
            "s_dn": list(s.regulation.s_dn),
        },
        "network": {
            "buses": [{"id": b.id, "p_load": list(b.p_load),
                       "q_load": list(b.q_load)} for b in s.network.buses],
            "branches": [{"id": br.id, "from": br.from_bus, "to": br.to_bus,
                          "r": br.r, "x": br.x, "pl_max": br.pl_max,
                          "ql_max": br.ql_max} for br in s.network.branches],
            "substation_bus": s.network.substation_bus,
            "v_min": s.network.v_min,
            "v_max": s.network.v_max,
            "s_base": s.network.s_base,
            "v_substation": s.network.v_substation,
        },
        "aggregators": [],
        "offers": {
            name: {
                "energy": list(o.energy), "cap_up": list(o.cap_up),
                "cap_dn": list(o.cap_dn), "mil_up": list(o.mil_up),
                "mil_dn": list(o.mil_dn),
            } for name, o in sorted(s.offers.items())
        },
    }
    for cfg in s.drags:
        doc["aggregators"].append({
            "type": "drag", "name": cfg.name, "node": cfg.node,
            "blocks": [{"p_max": b.p_max, "prices": list(b.prices)}
                       for b in cfg.blocks],
            "cap_up_max": list(cfg.cap_up_max),
            "cap_dn_max": list(cfg.cap_dn_max),
            "tan_phi": cfg.tan_phi})
    for cfg in s.esags:
        doc["aggregators"].append({
            "type": "esag", "name": cfg.name, "node": cfg.node,
            "eta_ch": cfg.eta_ch, "eta_di": cfg.eta_di, "e_min": cfg.e_min,
            "e_max": cfg.e_max, "e_init": cfg.e_init, "dr_max": cfg.dr_max,
            "cr_max": cfg.cr_max})
    for cfg in s.evcss:
        doc["aggregators"].append({
            "type": "evcs", "name": cfg.name, "node": cfg.node,
            "availability": list(cfg.availability), "er_max": cfg.er_max,
            "err_max": cfg.err_max, "cl_max": cfg.cl_max,
            "e_init": cfg.e_init, "gamma_ch": cfg.gamma_ch})
    for cfg in s.ddgags:
        doc["aggregators"].append({
            "type": "ddgag", "name": cfg.name, "node": cfg.node,
            "p_min": cfg.p_min, "p_max": cfg.p_max, "ru": cfg.ru,
            "rd": cfg.rd, "tan_phi": cfg.tan_phi})
    if assumptions:
        doc["assumptions"] = list(assumptions)
    return doc


def load_scenario(path: str) -> Scenario:
    """Load, default-fill, and validate a scenario file."""
    scenario, _ = load_scenario_with_assumptions(path)
    return scenario


def load_scenario_with_assumptions(path: str) -> tuple[Scenario, tuple[str, ...]]:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from exc
    scenario, applied = scenario_from_dict(doc)
    report = validate_scenario(scenario)
    if not report.ok:
        raise ValidationError(report)
    file_assumptions = tuple(doc.get("assumptions", ()))
    return scenario, file_assumptions + applied


def save_scenario(s: Scenario, path: str,
                  assumptions: tuple[str, ...] = ()) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(scenario_to_dict(s, assumptions), fh, indent=2)
        fh.write("\n")


def scenario_hash(s: Scenario) -> str:
    """Stable content hash of a scenario (independent of assumptions)."""
    canonical = json.dumps(scenario_to_dict(s), sort_keys=True,
                           separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass(frozen=True)
class ResultBundle:
    """Everything produced by one solve, ready for export."""

    scenario: Scenario
    schedule: object                 # formulation.Schedule
    revenue: object                  # analysis.RevenueReport
    stats: dict
    input_hash: str


def _fmt(x: float) -> str:
    return f"{float(x):.10g}"


def export_results(bundle: ResultBundle, out_dir: str) -> list[str]:
    """Write schedule.csv, network.csv, revenue.csv, and solve.json.

    Output is deterministic: '.' decimals, '\\n' newlines, stable ordering.
    """
    os.makedirs(out_dir, exist_ok=True)
    s = bundle.scenario
    sched = bundle.schedule
    written = []

    path = os.path.join(out_dir, "schedule.csv")
    with open(path, "w", newline="\n") as fh:
        fh.write("t,entity,energy_MW,cap_up_MW,cap_dn_MW,charge_MWh,mode\n")
        for t in sched.steps:
            fh.write(f"{t},substation,{_fmt(sched.p_sub[t])},"
                     f"{_fmt(sched.r_sub_up[t])},{_fmt(sched.r_sub_dn[t])},,\n")
        for kind, cfg in s.aggregators():
            name = cfg.name
            for t in sched.steps:
                charge = mode = ""
                if name in sched.esag_charge:
                    charge = _fmt(sched.esag_charge[name][t])
                    mode = str(sched.esag_mode[name][t])
                elif name in sched.evcs_enabled:
                    mode = str(sched.evcs_enabled[name])
                fh.write(f"{t},{name},{_fmt(sched.energy[name][t])},"
                         f"{_fmt(sched.cap_up[name][t])},"
                         f"{_fmt(sched.cap_dn[name][t])},{charge},{mode}\n")
    written.append(path)

    path = os.path.join(out_dir, "network.csv")
    with open(path, "w", newline="\n") as fh:
        fh.write("t,element,id,pl_MW,ql_MVAr,v_pu\n")
        for br in s.network.branches:
            for t in sched.steps:
                fh.write(f"{t},branch,{br.id},{_fmt(sched.flows_p[br.id][t])},"
                         f"{_fmt(sched.flows_q[br.id][t])},\n")
        for bus in s.network.buses:
            for t in sched.steps:
                fh.write(f"{t},bus,{bus.id},,,"
                         f"{_fmt(sched.voltage[bus.id][t])}\n")
    written.append(path)

    path = os.path.join(out_dir, "revenue.csv")
    with open(path, "w", newline="\n") as fh:
        fh.write("entity,energy_$,capacity_$,mileage_$,total_$\n")
        rev = bundle.revenue
        for name in sorted(rev.entities):
            e = rev.entities[name]
            fh.write(f"{name},{_fmt(e.energy)},{_fmt(e.capacity)},"
                     f"{_fmt(e.mileage)},{_fmt(e.total)}\n")
        fh.write(f"dso_wholesale,{_fmt(rev.dso_energy)},"
                 f"{_fmt(rev.dso_capacity)},{_fmt(rev.dso_mileage)},"
                 f"{_fmt(rev.dso_total)}\n")
    written.append(path)

    path = os.path.join(out_dir, "solve.json")
    with open(path, "w", newline="\n") as fh:
        json.dump({"input_hash": bundle.input_hash, **bundle.stats},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(path)
    return written
