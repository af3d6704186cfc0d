"""Compile a Scenario into a sparse mixed-integer linear program.

Variable registry, objective, and all constraint families for the DSO
coordination problem: demand response blocks, storage charge dynamics with
mode binaries, EV charging windows with an enable binary, dispatchable
generation limits, linearized radial power flow, and the substation-level
aggregation identities.  Also decodes raw solver vectors back into a
:class:`Schedule` and checks constraint residuals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse

from .model import (
    KIND_DRAG,
    KIND_ESAG,
    KIND_EVCS,
    Scenario,
    ScenarioValidationError,
    validate_scenario,
)
from .scenario_io import scenario_hash

LE, GE, EQ = "<=", ">=", "=="

VarKey = tuple


class DimensionMismatch(ValueError):
    """Raw solution length does not match the problem's column count."""


class NonOptimalStatus(RuntimeError):
    """Decoding was attempted on a non-optimal solver result."""


@dataclass(frozen=True)
class Row:
    """One sparse constraint row: coefs @ x  (sense)  rhs."""

    name: str
    cols: tuple[int, ...]
    coefs: tuple[float, ...]
    sense: str
    rhs: float

    def residual(self, x: np.ndarray) -> float:
        lhs = sum(c * x[j] for j, c in zip(self.cols, self.coefs))
        if self.sense == EQ:
            return abs(lhs - self.rhs)
        if self.sense == LE:
            return max(0.0, lhs - self.rhs)
        return max(0.0, self.rhs - lhs)


class VariableRegistry:
    """Bijective map from (family, *subscripts) keys to column indices."""

    def __init__(self) -> None:
        self._index: dict[VarKey, int] = {}
        self._keys: list[VarKey] = []

    def add(self, *key) -> int:
        key = tuple(key)
        if key in self._index:
            raise ValueError(f"duplicate variable {key}")
        idx = len(self._keys)
        self._index[key] = idx
        self._keys.append(key)
        return idx

    def __getitem__(self, key: VarKey) -> int:
        return self._index[tuple(key)]

    def __contains__(self, key: VarKey) -> bool:
        return tuple(key) in self._index

    def __len__(self) -> int:
        return len(self._keys)

    def keys(self) -> tuple[VarKey, ...]:
        return tuple(self._keys)

    def key_of(self, idx: int) -> VarKey:
        return self._keys[idx]


@dataclass(frozen=True)
class MilpProblem:
    """Sparse constraint system with objective, bounds, and integrality."""

    objective: np.ndarray
    rows: tuple[Row, ...]
    lower: np.ndarray
    upper: np.ndarray
    integrality: np.ndarray          # bool per column
    registry: VariableRegistry

    @property
    def num_cols(self) -> int:
        return len(self.objective)

    @cached_property
    def relaxation_arrays(self):
        """(A_ub, b_ub, A_eq, b_eq) as CSR matrices for the LP relaxation."""
        n = self.num_cols
        ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
        for row in self.rows:
            if row.sense == EQ:
                eq_rows.append(row)
                eq_rhs.append(row.rhs)
            elif row.sense == LE:
                ub_rows.append((row, 1.0))
                ub_rhs.append(row.rhs)
            else:
                ub_rows.append((row, -1.0))
                ub_rhs.append(-row.rhs)

        def build(rows_signed):
            data, ri, ci = [], [], []
            for i, item in enumerate(rows_signed):
                row, sign = item if isinstance(item, tuple) else (item, 1.0)
                for j, c in zip(row.cols, row.coefs):
                    data.append(sign * c)
                    ri.append(i)
                    ci.append(j)
            return sparse.csr_matrix((data, (ri, ci)),
                                     shape=(len(rows_signed), n))

        A_ub = build(ub_rows) if ub_rows else None
        A_eq = build(eq_rows) if eq_rows else None
        return (A_ub, np.array(ub_rhs), A_eq, np.array(eq_rhs))

    def max_residual(self, x: np.ndarray) -> float:
        """Largest constraint violation of x over every row and bound."""
        if len(x) != self.num_cols:
            raise DimensionMismatch(
                f"solution has {len(x)} entries, problem has {self.num_cols}")
        worst = 0.0
        for row in self.rows:
            worst = max(worst, row.residual(x))
        worst = max(worst, float(np.max(np.maximum(self.lower - x, 0.0),
                                        initial=0.0)))
        worst = max(worst, float(np.max(np.maximum(x - self.upper, 0.0),
                                        initial=0.0)))
        return worst

    def residual_report(self, x: np.ndarray, tol: float) -> list[tuple[str, float]]:
        """Rows violating ``tol``, as (row name, residual) pairs."""
        return [(row.name, r) for row in self.rows
                if (r := row.residual(x)) > tol]


@dataclass(frozen=True)
class Schedule:
    """Decoded per-hour awards and network state for one solved scenario."""

    steps: tuple[int, ...]
    p_sub: dict[int, float]
    q_sub: dict[int, float]
    r_sub_up: dict[int, float]
    r_sub_dn: dict[int, float]
    energy: dict[str, dict[int, float]]       # per aggregator, per hour (MW)
    cap_up: dict[str, dict[int, float]]
    cap_dn: dict[str, dict[int, float]]
    esag_charge: dict[str, dict[int, float]]  # MWh
    esag_mode: dict[str, dict[int, int]]      # 1 = discharging
    evcs_enabled: dict[str, int]
    flows_p: dict[int, dict[int, float]]      # branch id -> hour -> MW
    flows_q: dict[int, dict[int, float]]
    voltage: dict[int, dict[int, float]]      # bus id -> hour -> p.u.
    objective: float
    scenario_hash: str
    values: np.ndarray = field(repr=False)


def _offer(s: Scenario, name: str):
    return s.offers[name]


def build_registry(s: Scenario) -> VariableRegistry:
    """Create every decision column in deterministic order."""
    reg = VariableRegistry()
    steps = s.horizon.steps
    for t in steps:
        reg.add("P_sub", t)
        reg.add("Q_sub", t)
        reg.add("r_sub_up", t)
        reg.add("r_sub_dn", t)
    for cfg in s.drags:
        for t in steps:
            for a in range(len(cfg.blocks)):
                reg.add("P_block", a, t, cfg.name)
            reg.add("r_up", t, cfg.name)
            reg.add("r_dn", t, cfg.name)
    for cfg in s.esags:
        for t in steps:
            reg.add("P", t, cfg.name)
            reg.add("E", t, cfg.name)
            reg.add("P_di", t, cfg.name)
            reg.add("P_ch", t, cfg.name)
            reg.add("r_up", t, cfg.name)
            reg.add("r_dn", t, cfg.name)
            reg.add("r_up_di", t, cfg.name)
            reg.add("r_dn_di", t, cfg.name)
            reg.add("r_up_ch", t, cfg.name)
            reg.add("r_dn_ch", t, cfg.name)
            reg.add("b_es", t, cfg.name)
    for cfg in s.evcss:
        for t in steps:
            reg.add("P", t, cfg.name)
            reg.add("r_up", t, cfg.name)
            reg.add("r_dn", t, cfg.name)
        reg.add("b_ev", cfg.name)
    for cfg in s.ddgags:
        for t in steps:
            reg.add("P", t, cfg.name)
            reg.add("r_up", t, cfg.name)
            reg.add("r_dn", t, cfg.name)
    for br in s.network.branches:
        for t in steps:
            reg.add("Pl", br.id, t)
            reg.add("Ql", br.id, t)
    for bus in s.network.buses:
        for t in steps:
            reg.add("V", bus.id, t)
    return reg


def build_bounds(s: Scenario, reg: VariableRegistry):
    """Per-column lower/upper bounds and the integrality mask."""
    n = len(reg)
    lower = np.full(n, -np.inf)
    upper = np.full(n, np.inf)
    integral = np.zeros(n, dtype=bool)
    steps = s.horizon.steps
    total_pl = sum(br.pl_max for br in s.network.branches)
    total_ql = sum(br.ql_max for br in s.network.branches)

    def setb(key, lo, hi):
        j = reg[key]
        lower[j], upper[j] = lo, hi

    for t in steps:
        setb(("P_sub", t), -total_pl, total_pl)
        setb(("Q_sub", t), -total_ql, total_ql)
        setb(("r_sub_up", t), 0.0, np.inf)
        setb(("r_sub_dn", t), 0.0, np.inf)
    for cfg in s.drags:
        for ti, t in enumerate(steps):
            for a, block in enumerate(cfg.blocks):
                setb(("P_block", a, t, cfg.name), 0.0, block.p_max)
            setb(("r_up", t, cfg.name), 0.0, cfg.cap_up_max[ti])
            setb(("r_dn", t, cfg.name), 0.0, cfg.cap_dn_max[ti])
    for cfg in s.esags:
        for t in steps:
            setb(("E", t, cfg.name), cfg.e_min, cfg.e_max)
            setb(("P_di", t, cfg.name), 0.0, cfg.dr_max)
            setb(("P_ch", t, cfg.name), 0.0, cfg.cr_max)
            for fam in ("r_up", "r_dn"):
                setb((fam, t, cfg.name), 0.0, cfg.dr_max + cfg.cr_max)
            for fam in ("r_up_di", "r_dn_di"):
                setb((fam, t, cfg.name), 0.0, cfg.dr_max)
            for fam in ("r_up_ch", "r_dn_ch"):
                setb((fam, t, cfg.name), 0.0, cfg.cr_max)
            j = reg[("b_es", t, cfg.name)]
            lower[j], upper[j] = 0.0, 1.0
            integral[j] = True
    for cfg in s.evcss:
        avail = set(cfg.availability)
        for t in steps:
            if t in avail:
                setb(("P", t, cfg.name), 0.0, cfg.er_max)
                setb(("r_up", t, cfg.name), 0.0, cfg.err_max)
                setb(("r_dn", t, cfg.name), 0.0, cfg.err_max)
            else:
                # no EVs present: every column for this hour pinned to zero
                for fam in ("P", "r_up", "r_dn"):
                    setb((fam, t, cfg.name), 0.0, 0.0)
        j = reg[("b_ev", cfg.name)]
        lower[j], upper[j] = 0.0, 1.0
        integral[j] = True
    for cfg in s.ddgags:
        for t in steps:
            setb(("P", t, cfg.name), cfg.p_min, cfg.p_max)
            setb(("r_up", t, cfg.name), 0.0, cfg.ru)
            setb(("r_dn", t, cfg.name), 0.0, cfg.rd)
    for br in s.network.branches:
        for t in steps:
            setb(("Pl", br.id, t), -br.pl_max, br.pl_max)
            setb(("Ql", br.id, t), -br.ql_max, br.ql_max)
    for bus in s.network.buses:
        for t in steps:
            setb(("V", bus.id, t), s.network.v_min, s.network.v_max)
    return lower, upper, integral


def build_objective(s: Scenario, reg: VariableRegistry) -> np.ndarray:
    """Minimization objective: wholesale revenue enters negatively,
    payments to aggregators positively, collections from loads negatively.
    """
    c = np.zeros(len(reg))
    w, sig = s.wholesale, s.regulation
    dt = s.horizon.step_hours
    for ti, t in enumerate(s.horizon.steps):
        c[reg[("P_sub", t)]] = -w.energy[ti] * dt
        c[reg[("r_sub_up", t)]] = -(w.cap_up[ti]
                                    + sig.s_up[ti] * sig.mu_up[ti] * w.mil_up[ti])
        c[reg[("r_sub_dn", t)]] = -(w.cap_dn[ti]
                                    + sig.s_dn[ti] * sig.mu_dn[ti] * w.mil_dn[ti])
        for kind, cfg in s.aggregators():
            o = _offer(s, cfg.name)
            if kind == KIND_DRAG:
                for a, block in enumerate(cfg.blocks):
                    c[reg[("P_block", a, t, cfg.name)]] = -block.prices[ti] * dt
            elif kind == KIND_EVCS:
                c[reg[("P", t, cfg.name)]] = -o.energy[ti] * dt
            else:
                c[reg[("P", t, cfg.name)]] = o.energy[ti] * dt
            c[reg[("r_up", t, cfg.name)]] = (
                o.cap_up[ti] + sig.s_up[ti] * sig.mu_up[ti] * o.mil_up[ti])
            c[reg[("r_dn", t, cfg.name)]] = (
                o.cap_dn[ti] + sig.s_dn[ti] * sig.mu_dn[ti] * o.mil_dn[ti])
    return c


def add_drag_constraints(s: Scenario, reg: VariableRegistry) -> list[Row]:
    rows: list[Row] = []
    for cfg in s.drags:
        blocks = range(len(cfg.blocks))
        total = sum(b.p_max for b in cfg.blocks)
        for t in s.horizon.steps:
            block_cols = tuple(reg[("P_block", a, t, cfg.name)] for a in blocks)
            rows.append(Row(
                f"drag_dn_headroom[{t},{cfg.name}]",
                block_cols + (reg[("r_dn", t, cfg.name)],),
                (1.0,) * len(block_cols) + (-1.0,), GE, 0.0))
            rows.append(Row(
                f"drag_up_headroom[{t},{cfg.name}]",
                block_cols + (reg[("r_up", t, cfg.name)],),
                (1.0,) * len(block_cols) + (1.0,), LE, total))
    return rows


def add_esag_constraints(s: Scenario, reg: VariableRegistry) -> list[Row]:
    rows: list[Row] = []
    sig = s.regulation
    dt = s.horizon.step_hours
    steps = s.horizon.steps
    for cfg in s.esags:
        k = cfg.name
        for ti, t in enumerate(steps):
            mu_up, mu_dn = sig.mu_up[ti], sig.mu_dn[ti]
            # charge state: P*dt = E_{t-1} - E_t + dt*(r_up*mu/eta_di - r_dn*mu*eta_ch)
            cols = [reg[("P", t, k)], reg[("E", t, k)],
                    reg[("r_up", t, k)], reg[("r_dn", t, k)]]
            coefs = [dt, 1.0,
                     -dt * mu_up / cfg.eta_di, dt * mu_dn * cfg.eta_ch]
            if ti == 0:
                rhs = cfg.e_init
            else:
                cols.append(reg[("E", steps[ti - 1], k)])
                coefs.append(-1.0)
                rhs = 0.0
            rows.append(Row(f"esag_state[{t},{k}]", tuple(cols),
                            tuple(coefs), EQ, rhs))
            # injection split: P = P_di/eta_di - P_ch*eta_ch
            rows.append(Row(
                f"esag_split[{t},{k}]",
                (reg[("P", t, k)], reg[("P_di", t, k)], reg[("P_ch", t, k)]),
                (1.0, -1.0 / cfg.eta_di, cfg.eta_ch), EQ, 0.0))
            # capacity compositions
            rows.append(Row(
                f"esag_cap_up[{t},{k}]",
                (reg[("r_up", t, k)], reg[("r_up_di", t, k)],
                 reg[("r_dn_ch", t, k)]),
                (1.0, -1.0, -1.0), EQ, 0.0))
            rows.append(Row(
                f"esag_cap_dn[{t},{k}]",
                (reg[("r_dn", t, k)], reg[("r_dn_di", t, k)],
                 reg[("r_up_ch", t, k)]),
                (1.0, -1.0, -1.0), EQ, 0.0))
            # mode gating: discharge-side offers need b = 1,
            # charge-side offers need b = 0
            b = reg[("b_es", t, k)]
            for fam in ("P_di", "r_up_di", "r_dn_di"):
                rows.append(Row(
                    f"esag_gate_di[{fam},{t},{k}]",
                    (reg[(fam, t, k)], b), (1.0, -cfg.dr_max), LE, 0.0))
            for fam in ("P_ch", "r_up_ch", "r_dn_ch"):
                rows.append(Row(
                    f"esag_gate_ch[{fam},{t},{k}]",
                    (reg[(fam, t, k)], b), (1.0, cfg.cr_max), LE, cfg.cr_max))
            # merged gate/headroom rows: implied whenever b is 0 or 1, but
            # they stop a fractional mode bit from claiming capacity on both
            # sides at once, which keeps the relaxation tight enough to
            # solve in seconds instead of hours
            rows.append(Row(
                f"esag_gate_di_merged[{t},{k}]",
                (reg[("P_di", t, k)], reg[("r_up_di", t, k)], b),
                (1.0, 1.0, -cfg.dr_max), LE, 0.0))
            rows.append(Row(
                f"esag_gate_ch_merged[{t},{k}]",
                (reg[("P_ch", t, k)], reg[("r_up_ch", t, k)], b),
                (1.0, 1.0, cfg.cr_max), LE, cfg.cr_max))
            # headroom couplings around the scheduled (dis)charge rate
            rows.append(Row(
                f"esag_di_floor[{t},{k}]",
                (reg[("P_di", t, k)], reg[("r_dn_di", t, k)]),
                (1.0, -1.0), GE, 0.0))
            rows.append(Row(
                f"esag_di_ceiling[{t},{k}]",
                (reg[("P_di", t, k)], reg[("r_up_di", t, k)]),
                (1.0, 1.0), LE, cfg.dr_max))
            rows.append(Row(
                f"esag_ch_floor[{t},{k}]",
                (reg[("P_ch", t, k)], reg[("r_dn_ch", t, k)]),
                (1.0, -1.0), GE, 0.0))
            rows.append(Row(
                f"esag_ch_ceiling[{t},{k}]",
                (reg[("P_ch", t, k)], reg[("r_up_ch", t, k)]),
                (1.0, 1.0), LE, cfg.cr_max))
    return rows


def add_evcs_constraints(s: Scenario, reg: VariableRegistry) -> list[Row]:
    rows: list[Row] = []
    sig = s.regulation
    dt = s.horizon.step_hours
    step_index = {t: i for i, t in enumerate(s.horizon.steps)}
    for cfg in s.evcss:
        k = cfg.name
        b = reg[("b_ev", k)]
        for t in cfg.availability:
            rows.append(Row(f"evcs_gate_p[{t},{k}]",
                            (reg[("P", t, k)], b),
                            (1.0, -cfg.er_max), LE, 0.0))
            rows.append(Row(f"evcs_gate_up[{t},{k}]",
                            (reg[("r_up", t, k)], b),
                            (1.0, -cfg.err_max), LE, 0.0))
            rows.append(Row(f"evcs_gate_dn[{t},{k}]",
                            (reg[("r_dn", t, k)], b),
                            (1.0, -cfg.err_max), LE, 0.0))
            rows.append(Row(f"evcs_up_headroom[{t},{k}]",
                            (reg[("P", t, k)], reg[("r_up", t, k)]),
                            (1.0, 1.0), LE, cfg.er_max))
            rows.append(Row(f"evcs_dn_headroom[{t},{k}]",
                            (reg[("P", t, k)], reg[("r_dn", t, k)]),
                            (1.0, -1.0), GE, 0.0))
        # terminal charge window, gated by the enable binary:
        # 0.9*cl_max*b <= e_init*b + gamma*dt*sum(P + r_up*mu - r_dn*mu) <= cl_max*b
        cols: list[int] = [b]
        lo_coefs: list[float] = [cfg.e_init - 0.9 * cfg.cl_max]
        hi_coefs: list[float] = [cfg.e_init - cfg.cl_max]
        for t in cfg.availability:
            ti = step_index[t]
            for fam, sign in (("P", 1.0), ("r_up", sig.mu_up[ti]),
                              ("r_dn", -sig.mu_dn[ti])):
                cols.append(reg[(fam, t, k)])
                lo_coefs.append(cfg.gamma_ch * dt * sign)
                hi_coefs.append(cfg.gamma_ch * dt * sign)
        rows.append(Row(f"evcs_charge_floor[{k}]", tuple(cols),
                        tuple(lo_coefs), GE, 0.0))
        rows.append(Row(f"evcs_charge_ceiling[{k}]", tuple(cols),
                        tuple(hi_coefs), LE, 0.0))
    return rows


def add_ddgag_constraints(s: Scenario, reg: VariableRegistry) -> list[Row]:
    rows: list[Row] = []
    for cfg in s.ddgags:
        for t in s.horizon.steps:
            rows.append(Row(
                f"ddgag_up_headroom[{t},{cfg.name}]",
                (reg[("P", t, cfg.name)], reg[("r_up", t, cfg.name)]),
                (1.0, 1.0), LE, cfg.p_max))
            rows.append(Row(
                f"ddgag_dn_headroom[{t},{cfg.name}]",
                (reg[("P", t, cfg.name)], reg[("r_dn", t, cfg.name)]),
                (1.0, -1.0), GE, cfg.p_min))
    return rows


def add_network_constraints(s: Scenario, reg: VariableRegistry) -> list[Row]:
    rows: list[Row] = []
    net = s.network
    steps = s.horizon.steps
    by_node: dict[int, list] = {n: [] for n in net.bus_ids()}
    for kind, cfg in s.aggregators():
        by_node[cfg.node].append((kind, cfg))

    for ti, t in enumerate(steps):
        for bus in net.buses:
            # active balance: consumption +, generation -, plus substation
            # injection and net branch outflow, all summing to zero
            p_cols: list[int] = []
            p_coefs: list[float] = []
            q_cols: list[int] = []
            q_coefs: list[float] = []
            for kind, cfg in by_node[bus.id]:
                if kind == KIND_DRAG:
                    for a in range(len(cfg.blocks)):
                        j = reg[("P_block", a, t, cfg.name)]
                        p_cols.append(j)
                        p_coefs.append(1.0)
                        q_cols.append(j)
                        q_coefs.append(cfg.tan_phi)
                elif kind == KIND_EVCS:
                    p_cols.append(reg[("P", t, cfg.name)])
                    p_coefs.append(1.0)
                elif kind == KIND_ESAG:
                    p_cols.append(reg[("P", t, cfg.name)])
                    p_coefs.append(-1.0)
                else:
                    j = reg[("P", t, cfg.name)]
                    p_cols.append(j)
                    p_coefs.append(-1.0)
                    q_cols.append(j)
                    q_coefs.append(-cfg.tan_phi)
            if bus.id == net.substation_bus:
                p_cols.append(reg[("P_sub", t)])
                p_coefs.append(1.0)
                q_cols.append(reg[("Q_sub", t)])
                q_coefs.append(1.0)
            for br in net.branches:
                a_jn = net.incidence(br, bus.id)
                if a_jn:
                    p_cols.append(reg[("Pl", br.id, t)])
                    p_coefs.append(float(a_jn))
                    q_cols.append(reg[("Ql", br.id, t)])
                    q_coefs.append(float(a_jn))
            rows.append(Row(f"p_balance[{t},{bus.id}]", tuple(p_cols),
                            tuple(p_coefs), EQ, -bus.p_load[ti]))
            rows.append(Row(f"q_balance[{t},{bus.id}]", tuple(q_cols),
                            tuple(q_coefs), EQ, -bus.q_load[ti]))
        # voltage drop along each branch; branch impedances are p.u., so
        # MW/MVAr flows are converted through the network base
        for br in net.branches:
            rows.append(Row(
                f"voltage_drop[{t},{br.id}]",
                (reg[("V", br.to_bus, t)], reg[("V", br.from_bus, t)],
                 reg[("Pl", br.id, t)], reg[("Ql", br.id, t)]),
                (1.0, -1.0, br.r / net.s_base, br.x / net.s_base), EQ, 0.0))
        rows.append(Row(
            f"voltage_anchor[{t}]",
            (reg[("V", net.substation_bus, t)],), (1.0,), EQ,
            net.v_substation))
    return rows


def add_aggregation_constraints(s: Scenario, reg: VariableRegistry) -> list[Row]:
    """Substation offers: generation-side up plus load-side down (and the
    symmetric cross-mapping for the down product)."""
    rows: list[Row] = []
    gen_names = [c.name for c in s.esags] + [c.name for c in s.ddgags]
    load_names = [c.name for c in s.drags] + [c.name for c in s.evcss]
    for t in s.horizon.steps:
        up_cols = [reg[("r_sub_up", t)]]
        up_coefs = [1.0]
        dn_cols = [reg[("r_sub_dn", t)]]
        dn_coefs = [1.0]
        for name in gen_names:
            up_cols.append(reg[("r_up", t, name)])
            up_coefs.append(-1.0)
            dn_cols.append(reg[("r_dn", t, name)])
            dn_coefs.append(-1.0)
        for name in load_names:
            up_cols.append(reg[("r_dn", t, name)])
            up_coefs.append(-1.0)
            dn_cols.append(reg[("r_up", t, name)])
            dn_coefs.append(-1.0)
        rows.append(Row(f"agg_up[{t}]", tuple(up_cols), tuple(up_coefs),
                        EQ, 0.0))
        rows.append(Row(f"agg_dn[{t}]", tuple(dn_cols), tuple(dn_coefs),
                        EQ, 0.0))
    return rows


def expected_row_count(s: Scenario) -> int:
    """Closed-form constraint count for a valid scenario."""
    T = len(s.horizon)
    n_avail = sum(len(cfg.availability) for cfg in s.evcss)
    return (T * (2 * len(s.drags) + 16 * len(s.esags) + 2 * len(s.ddgags)
                 + 2 * len(s.network.buses) + len(s.network.branches) + 1 + 2)
            + 5 * n_avail + 2 * len(s.evcss))


def build(s: Scenario) -> MilpProblem:
    """Compile the full problem.  Deterministic: identical scenarios give
    identical matrices."""
    report = validate_scenario(s)
    if not report.ok:
        raise ScenarioValidationError(report)
    reg = build_registry(s)
    lower, upper, integral = build_bounds(s, reg)
    rows: list[Row] = []
    rows += add_drag_constraints(s, reg)
    rows += add_esag_constraints(s, reg)
    rows += add_evcs_constraints(s, reg)
    rows += add_ddgag_constraints(s, reg)
    rows += add_network_constraints(s, reg)
    rows += add_aggregation_constraints(s, reg)
    return MilpProblem(
        objective=build_objective(s, reg),
        rows=tuple(rows),
        lower=lower,
        upper=upper,
        integrality=integral,
        registry=reg,
    )


def decode(s: Scenario, problem: MilpProblem, values: np.ndarray,
           status: str = "Optimal") -> Schedule:
    """Map a raw solution vector back onto scenario entities."""
    if status != "Optimal":
        raise NonOptimalStatus(f"cannot decode a solution with status {status}")
    values = np.asarray(values, dtype=float)
    if len(values) != problem.num_cols:
        raise DimensionMismatch(
            f"solution has {len(values)} entries, "
            f"problem has {problem.num_cols} columns")
    reg = problem.registry
    steps = s.horizon.steps

    def val(*key) -> float:
        return float(values[reg[tuple(key)]])

    energy: dict[str, dict[int, float]] = {}
    cap_up: dict[str, dict[int, float]] = {}
    cap_dn: dict[str, dict[int, float]] = {}
    esag_charge: dict[str, dict[int, float]] = {}
    esag_mode: dict[str, dict[int, int]] = {}
    evcs_enabled: dict[str, int] = {}
    for kind, cfg in s.aggregators():
        name = cfg.name
        if kind == KIND_DRAG:
            energy[name] = {
                t: sum(val("P_block", a, t, name)
                       for a in range(len(cfg.blocks)))
                for t in steps}
        else:
            energy[name] = {t: val("P", t, name) for t in steps}
        cap_up[name] = {t: val("r_up", t, name) for t in steps}
        cap_dn[name] = {t: val("r_dn", t, name) for t in steps}
        if kind == KIND_ESAG:
            esag_charge[name] = {t: val("E", t, name) for t in steps}
            esag_mode[name] = {t: int(round(val("b_es", t, name)))
                               for t in steps}
        elif kind == KIND_EVCS:
            evcs_enabled[name] = int(round(val("b_ev", name)))

    return Schedule(
        steps=steps,
        p_sub={t: val("P_sub", t) for t in steps},
        q_sub={t: val("Q_sub", t) for t in steps},
        r_sub_up={t: val("r_sub_up", t) for t in steps},
        r_sub_dn={t: val("r_sub_dn", t) for t in steps},
        energy=energy,
        cap_up=cap_up,
        cap_dn=cap_dn,
        esag_charge=esag_charge,
        esag_mode=esag_mode,
        evcs_enabled=evcs_enabled,
        flows_p={br.id: {t: val("Pl", br.id, t) for t in steps}
                 for br in s.network.branches},
        flows_q={br.id: {t: val("Ql", br.id, t) for t in steps}
                 for br in s.network.branches},
        voltage={bus.id: {t: val("V", bus.id, t) for t in steps}
                 for bus in s.network.buses},
        objective=float(problem.objective @ values),
        scenario_hash=scenario_hash(s),
        values=values,
    )
