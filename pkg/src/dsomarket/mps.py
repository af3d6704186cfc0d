"""Fixed-format MPS export for cross-checking against external solvers.

Naming scheme (deterministic): the objective row is ``COST``, constraint
rows are ``R`` followed by the 7-digit row index in build order, and
columns are ``C`` followed by the 7-digit column index in registry order.
Binary columns are wrapped in ``INTORG``/``INTEND`` markers.
"""

from __future__ import annotations

import math

from .formulation import EQ, GE, LE, MilpProblem

_SENSE = {LE: "L", GE: "G", EQ: "E"}


def _num(x: float) -> str:
    return f"{x:.12g}"


def write_mps(problem: MilpProblem, path: str, name: str = "DSOMILP") -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_mps(problem, name))


def format_mps(problem: MilpProblem, name: str = "DSOMILP") -> str:
    lines = [f"NAME          {name}", "ROWS", " N  COST"]
    for i, row in enumerate(problem.rows):
        lines.append(f" {_SENSE[row.sense]}  R{i:07d}")

    # gather per-column entries (objective first, then rows in order)
    entries: dict[int, list[tuple[str, float]]] = {
        j: [] for j in range(problem.num_cols)}
    for j, coef in enumerate(problem.objective):
        if coef != 0.0:
            entries[j].append(("COST", float(coef)))
    for i, row in enumerate(problem.rows):
        for j, coef in zip(row.cols, row.coefs):
            entries[j].append((f"R{i:07d}", float(coef)))

    lines.append("COLUMNS")
    in_integer = False
    marker = 0
    for j in range(problem.num_cols):
        integral = bool(problem.integrality[j])
        if integral and not in_integer:
            lines.append(f"    MARKER{marker:04d}  'MARKER'                 "
                         "'INTORG'")
            marker += 1
            in_integer = True
        elif not integral and in_integer:
            lines.append(f"    MARKER{marker:04d}  'MARKER'                 "
                         "'INTEND'")
            marker += 1
            in_integer = False
        col = f"C{j:07d}"
        pairs = entries[j]
        for a in range(0, len(pairs), 2):
            chunk = pairs[a:a + 2]
            parts = [f"    {col:<10}"]
            for rname, coef in chunk:
                parts.append(f"{rname:<10}{_num(coef):>15}")
            lines.append("  ".join(parts))
    if in_integer:
        lines.append(f"    MARKER{marker:04d}  'MARKER'                 "
                     "'INTEND'")

    lines.append("RHS")
    for i, row in enumerate(problem.rows):
        if row.rhs != 0.0:
            lines.append(f"    RHS         R{i:07d}  {_num(row.rhs):>15}")

    lines.append("BOUNDS")
    for j in range(problem.num_cols):
        lo, hi = float(problem.lower[j]), float(problem.upper[j])
        col = f"C{j:07d}"
        lo_fin, hi_fin = math.isfinite(lo), math.isfinite(hi)
        if not lo_fin and not hi_fin:
            lines.append(f" FR BND         {col}")
            continue
        if not lo_fin:
            lines.append(f" MI BND         {col}")
        elif lo != 0.0:
            lines.append(f" LO BND         {col}  {_num(lo):>15}")
        if hi_fin:
            lines.append(f" UP BND         {col}  {_num(hi):>15}")
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"
