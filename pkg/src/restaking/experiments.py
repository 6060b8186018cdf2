"""Parameter sweeps producing the CSV tables behind the robustness figures.

Each sweep emits a table whose first column is the x-axis (restaking_degree
or robustness_threshold) and whose remaining columns are named
min_stake_threshold_<label> or min_budget_<label>, so reproduced figures
diff cleanly against expectations. Grid cells are independent; set the
RESTAKING_THREADS environment variable to compute them in parallel.

A cell whose configuration is unsatisfiable at any stake (slashing can wipe
the entire stake regardless of its size) is emitted as nan.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from . import mip as mipmod
from .model import byzantine_weight_cap
from .symmetry import (
    SearchBracketError,
    SweepTemplate,
    beta_robust_predicate,
    f_beta_robust_predicate,
    max_budget,
    min_stake_for,
    secure_predicate,
)

__all__ = [
    "Table",
    "write_csv",
    "sweep_min_stake_security",
    "sweep_min_stake_robustness",
    "sweep_failure_threshold",
    "sweep_failure_decomposition",
    "sweep_mip_vs_theory",
    "sweep_min_stake_mip",
    "degree_grid",
    "SweepTemplate",
    "min_stake_mip",
]

STAKE_TOLERANCE = 1e-6
AGREEMENT_TOLERANCE = 1e-5


@dataclass
class Table:
    columns: list[str]
    rows: list[list]

    def column(self, name: str) -> list:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    if isinstance(value, (int, float)):
        return f"{value:.6f}"
    return str(value)


def write_csv(table: Table, path: str | Path) -> None:
    """UTF-8 comma-separated output with a header row and '.' decimals."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_format_cell(v) for v in row])


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("RESTAKING_THREADS", "1")))
    except ValueError:
        return 1


def _map_cells(fn: Callable, items: list) -> list:
    workers = _thread_count()
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def degree_grid(n_services: int, step: float = 0.1, lo: float = 1.0,
                 hi: float | None = None) -> list[float]:
    hi = n_services if hi is None else hi
    grid = []
    k = 0
    while True:
        d = lo + k * step
        if d > hi + 1e-12:
            break
        grid.append(round(d, 10))
        k += 1
    return grid


def _theory_cell(args) -> float:
    template, degree, f, budget = args
    if f == 0 and budget == 0:
        predicate = secure_predicate()
    elif f == 0:
        predicate = beta_robust_predicate(budget)
    else:
        predicate = f_beta_robust_predicate(f, budget)
    try:
        return min_stake_for(template, predicate, degree, STAKE_TOLERANCE)
    except SearchBracketError:
        return math.nan


def sweep_min_stake_security(
    n: int,
    m: int,
    thresholds: Sequence[float],
    degree_grid: Sequence[float] | None = None,
) -> Table:
    """Minimum stake for security per restaking degree, one column per threshold."""
    degree_grid = list(degree_grid) if degree_grid else degree_grid(m)
    columns = ["restaking_degree"] + [
        f"min_stake_threshold_{theta:.2f}" for theta in thresholds
    ]
    tasks = []
    for d in degree_grid:
        for theta in thresholds:
            template = SweepTemplate(n_validators=n, n_services=m, threshold=theta)
            tasks.append((template, d, 0, 0))
    values = _map_cells(_theory_cell, tasks)
    rows = []
    k = len(thresholds)
    for i, d in enumerate(degree_grid):
        rows.append([d] + values[i * k : (i + 1) * k])
    return Table(columns=columns, rows=rows)


def sweep_min_stake_robustness(
    n: int,
    m: int,
    threshold: float,
    prize: float,
    budgets: Sequence[float],
    f_grid: Sequence[float],
    degree_grid: Sequence[float] | None = None,
    base: tuple[float, float] | None = None,
) -> dict[float, Table]:
    """Minimum stake for (f, budget)-robustness; one table per budget.

    The base variant adds a service (prize, threshold) to which every
    validator allocates their entire stake.
    """
    degree_grid = list(degree_grid) if degree_grid else degree_grid(m)
    if base is None:
        template = SweepTemplate(n_validators=n, n_services=m, threshold=threshold,
                                 prize=prize)
    else:
        template = SweepTemplate(
            n_validators=n, n_services=m, threshold=threshold, prize=prize,
            base_prize=base[0], base_threshold=base[1],
        )
    columns = ["restaking_degree"] + [
        f"min_stake_threshold_{f:.2f}" for f in f_grid
    ]
    result = {}
    for budget in budgets:
        tasks = [(template, d, f, budget) for d in degree_grid for f in f_grid]
        values = _map_cells(_theory_cell, tasks)
        rows = []
        k = len(f_grid)
        for i, d in enumerate(degree_grid):
            rows.append([d] + values[i * k : (i + 1) * k])
        result[budget] = Table(columns=columns, rows=rows)
    return result


def _budget_cell(args) -> float:
    template, stake, degree, f = args
    return max_budget(template.build(stake, degree), f)


def sweep_failure_threshold(
    template: SweepTemplate,
    stake: float,
    degrees: Sequence[float],
    f_grid: Sequence[float],
) -> Table:
    """Maximum tolerable budget per Byzantine fraction, one column per degree.

    The result is a left-continuous piecewise-constant step function of f:
    it only changes where the cap admits one more Byzantine service.
    """
    columns = ["robustness_threshold"] + [f"min_budget_{d:.2f}" for d in degrees]
    tasks = [(template, stake, d, f) for f in f_grid for d in degrees]
    values = _map_cells(_budget_cell, tasks)
    rows = []
    k = len(degrees)
    for i, f in enumerate(f_grid):
        rows.append([f] + values[i * k : (i + 1) * k])
    return Table(columns=columns, rows=rows)


def sweep_failure_decomposition(
    n: int,
    m: int,
    threshold: float,
    prize: float,
    base_prize: float,
    base_threshold: float,
    stakes: tuple[float, float, float],
    degrees: tuple[float, float],
    f_grid: Sequence[float],
) -> Table:
    """Failure thresholds for base-only, no-base, and combined networks.

    stakes = (base-only, no-base, combined); degrees = (no-base degree,
    combined degree). The base service alone is one fully-allocated service.
    """
    base_only = SweepTemplate(
        n_validators=n, n_services=1, threshold=base_threshold, prize=base_prize
    )
    no_base = SweepTemplate(n_validators=n, n_services=m, threshold=threshold,
                            prize=prize)
    combined = SweepTemplate(
        n_validators=n, n_services=m, threshold=threshold, prize=prize,
        base_prize=base_prize, base_threshold=base_threshold,
    )
    configs = [
        (base_only, stakes[0], 1.0),
        (no_base, stakes[1], degrees[0]),
        (combined, stakes[2], degrees[1]),
    ]
    columns = [
        "robustness_threshold",
        "min_budget_base_only",
        "min_budget_no_base",
        "min_budget_total",
    ]
    tasks = [
        (template, stake, degree, f)
        for f in f_grid
        for template, stake, degree in configs
    ]
    values = _map_cells(_budget_cell, tasks)
    rows = []
    for i, f in enumerate(f_grid):
        rows.append([f] + values[i * 3 : (i + 1) * 3])
    return Table(columns=columns, rows=rows)


def min_stake_mip(
    template: SweepTemplate,
    degree: float,
    budget: float,
    f: float,
    tolerance: float = STAKE_TOLERANCE,
) -> float:
    """Minimum stake for (f, budget)-robustness decided by the MIPs.

    Binary search over the stake; each probe applies every admissible
    Byzantine choice (deduplicated by service class) and solves the budget
    program on the slashed network. Allocations scale with the stake, so
    the probe is monotone.
    """
    weights = [template.prize / template.threshold]
    if template.has_base():
        weights.append(template.base_prize / template.base_threshold)
    hi = max(weights) * (template.n_services + (1 if template.has_base() else 0))
    lo = 0.0

    def check(stake: float) -> bool:
        net = template.build_network(stake, degree)
        cap = byzantine_weight_cap(net, f)
        return mipmod.mip_check(net, budget, cap).robust

    doublings = 0
    while not check(hi):
        hi *= 2
        doublings += 1
        if doublings > 60:
            raise SearchBracketError(
                f"MIP robustness unsatisfiable at any stake; bracket [0, {hi}]"
            )
    while hi - lo > tolerance:
        mid = (lo + hi) / 2
        if check(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _mip_cell(args) -> float:
    template, degree, f, budget = args
    try:
        return min_stake_mip(template, degree, budget, f)
    except SearchBracketError:
        return math.nan


def sweep_mip_vs_theory(
    n: int,
    m: int,
    threshold: float,
    prize: float,
    budgets: Sequence[float],
    f_values: Sequence[float],
    degree_grid: Sequence[float],
) -> dict[float, Table]:
    """Side-by-side MIP and closed-form minimum stakes with agreement flags.

    One table per budget; the final column records whether every (f) pair
    agreed within 1e-5 on that row.
    """
    template = SweepTemplate(n_validators=n, n_services=m, threshold=threshold,
                             prize=prize)
    columns = ["restaking_degree"]
    for f in f_values:
        columns.append(f"min_stake_threshold_{f:.2f}_with_milp")
    for f in f_values:
        columns.append(f"min_stake_threshold_{f:.2f}_without_milp")
    columns.append("agree")
    result = {}
    for budget in budgets:
        mip_tasks = [(template, d, f, budget) for d in degree_grid for f in f_values]
        theory_tasks = [(template, d, f, budget) for d in degree_grid for f in f_values]
        mip_values = _map_cells(_mip_cell, mip_tasks)
        theory_values = _map_cells(_theory_cell, theory_tasks)
        rows = []
        k = len(f_values)
        for i, d in enumerate(degree_grid):
            mips = mip_values[i * k : (i + 1) * k]
            theos = theory_values[i * k : (i + 1) * k]
            agree = all(
                (math.isnan(a) and math.isnan(b)) or abs(a - b) <= AGREEMENT_TOLERANCE
                for a, b in zip(mips, theos)
            )
            rows.append([d] + mips + theos + [agree])
        result[budget] = Table(columns=columns, rows=rows)
    return result


def sweep_min_stake_mip(
    n: int,
    m: int,
    threshold: float,
    prize: float,
    budgets: Sequence[float],
    f_grid: Sequence[float],
    degree_grid: Sequence[float],
    base: tuple[float, float],
) -> dict[float, Table]:
    """MIP-only minimum-stake sweep for configurations with an asymmetric base.

    Used when the base service's threshold differs from the common one, which
    puts the network outside the closed-form machinery.
    """
    template = SweepTemplate(
        n_validators=n, n_services=m, threshold=threshold, prize=prize,
        base_prize=base[0], base_threshold=base[1],
    )
    columns = ["restaking_degree"] + [
        f"min_stake_threshold_{f:.2f}" for f in f_grid
    ]
    result = {}
    for budget in budgets:
        tasks = [(template, d, f, budget) for d in degree_grid for f in f_grid]
        values = _map_cells(_mip_cell, tasks)
        rows = []
        k = len(f_grid)
        for i, d in enumerate(degree_grid):
            rows.append([d] + values[i * k : (i + 1) * k])
        result[budget] = Table(columns=columns, rows=rows)
    return result
