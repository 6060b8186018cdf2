"""Minimal linear programming kernel.

A dense two-phase simplex with Bland's anti-cycling rule. Built for the tiny
instances this package generates (tens of variables, low hundreds of rows),
where determinism and correctness matter more than speed: identical problems
pivot identically and yield bit-identical solutions.

Equality constraints are split into a <= / >= pair internally; >= rows get a
surplus variable and a phase-1 artificial.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import InputError

__all__ = ["LpProblem", "LpSolution", "solve_lp", "OPTIMAL", "INFEASIBLE", "UNBOUNDED"]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

# Pivot / feasibility tolerances; instances are small and well-scaled.
_PIVOT_TOL = 1e-10
_FEAS_TOL = 1e-8


@dataclass
class LpProblem:
    """min or max of objective @ x subject to row constraints and bounds.

    constraints: list of (coefficients, relation, rhs) with relation in
    {"<=", ">=", "=="}. bounds: per-variable (lo, hi); hi may be None for
    unbounded above; lo must be finite. Default bound is (0, None).
    """

    objective: Sequence[float]
    sense: str = "min"
    constraints: list[tuple[Sequence[float], str, float]] = field(default_factory=list)
    bounds: list[tuple[float, float | None]] | None = None

    def n_variables(self) -> int:
        return len(self.objective)


@dataclass
class LpSolution:
    status: str
    values: np.ndarray | None = None
    objective_value: float | None = None


def _pivot(tableau: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])


def _run_simplex(tableau: np.ndarray, basis: np.ndarray, eligible: int) -> str:
    """Minimize row 0 in place over columns [0, eligible); Bland's rule."""
    while True:
        reduced = tableau[0, :eligible]
        candidates = np.nonzero(reduced < -_PIVOT_TOL)[0]
        if candidates.size == 0:
            return OPTIMAL
        col = int(candidates[0])  # Bland: lowest eligible index enters
        column = tableau[1:, col]
        rows = np.nonzero(column > _PIVOT_TOL)[0]
        if rows.size == 0:
            return UNBOUNDED
        ratios = tableau[1:, -1][rows] / column[rows]
        best = ratios.min()
        tied = rows[ratios <= best + _PIVOT_TOL]
        # Bland: among tied rows, the basic variable with the lowest index leaves.
        leave = int(tied[np.argmin(basis[tied])])
        _pivot(tableau, leave + 1, col)
        basis[leave] = col


def solve_lp(problem: LpProblem) -> LpSolution:
    """Solve a linear program; deterministic for identical input."""
    n = problem.n_variables()
    if problem.sense not in ("min", "max"):
        raise InputError(f"unknown sense {problem.sense!r}")
    for coeffs, rel, _ in problem.constraints:
        if len(coeffs) != n:
            raise InputError("constraint row length does not match objective")
        if rel not in ("<=", ">=", "=="):
            raise InputError(f"unknown relation {rel!r}")
    bounds = problem.bounds or [(0.0, None)] * n
    if len(bounds) != n:
        raise InputError("bounds length does not match objective")
    for lo, hi in bounds:
        if lo is None or not np.isfinite(lo):
            raise InputError("lower bounds must be finite")
        if hi is not None and hi < lo:
            raise InputError("bound with hi < lo")

    sign = 1.0 if problem.sense == "min" else -1.0
    cost = sign * np.asarray(problem.objective, dtype=float)
    lows = np.array([lo for lo, _ in bounds], dtype=float)

    # Shift x = y + lo so every variable is >= 0, and flatten equalities and
    # upper bounds into <= / >= rows.
    rows: list[np.ndarray] = []
    senses: list[int] = []  # +1 for <=, -1 for >=
    rhss: list[float] = []

    def add(coeffs: np.ndarray, sense_flag: int, rhs: float) -> None:
        rows.append(coeffs)
        senses.append(sense_flag)
        rhss.append(rhs - float(coeffs @ lows))

    for coeffs, rel, rhs in problem.constraints:
        arr = np.asarray(coeffs, dtype=float)
        if rel == "==":
            add(arr, 1, rhs)
            add(arr.copy(), -1, rhs)
        else:
            add(arr, 1 if rel == "<=" else -1, rhs)
    for i, (lo, hi) in enumerate(bounds):
        if hi is not None:
            unit = np.zeros(n)
            unit[i] = 1.0
            add(unit, 1, hi)

    m = len(rows)
    a = np.vstack(rows) if m else np.zeros((0, n))
    b = np.asarray(rhss, dtype=float)
    sense_arr = np.asarray(senses)

    # Normalize to b >= 0 by flipping rows.
    flip = b < 0
    a[flip] *= -1
    b[flip] *= -1
    sense_arr[flip] *= -1

    # Columns: n structural, m slack/surplus, then artificials for >= rows.
    art_rows = [i for i in range(m) if sense_arr[i] < 0]
    n_art = len(art_rows)
    art_start = n + m
    ncols = n + m + n_art

    tableau = np.zeros((m + 1, ncols + 1))
    tableau[1:, :n] = a
    for i in range(m):
        tableau[i + 1, n + i] = float(sense_arr[i])
    for k, i in enumerate(art_rows):
        tableau[i + 1, art_start + k] = 1.0
    tableau[1:, -1] = b

    basis = np.empty(m, dtype=int)
    art_index = {i: art_start + k for k, i in enumerate(art_rows)}
    for i in range(m):
        basis[i] = n + i if sense_arr[i] > 0 else art_index[i]

    if n_art:
        # Phase 1: price out the artificial basics and minimize their sum.
        tableau[0, :] = 0.0
        tableau[0, art_start:ncols] = 1.0
        for i in range(m):
            if basis[i] >= art_start:
                tableau[0] -= tableau[i + 1]
        _run_simplex(tableau, basis, ncols)
        if tableau[0, -1] < -_FEAS_TOL:
            return LpSolution(status=INFEASIBLE)
        # Drive leftover artificials out of the basis; a row with no other
        # nonzero column is redundant and is dropped.
        keep = np.ones(m + 1, dtype=bool)
        for i in range(m):
            if basis[i] >= art_start:
                row = tableau[i + 1, :art_start]
                pivots = np.nonzero(np.abs(row) > _PIVOT_TOL)[0]
                if pivots.size:
                    _pivot(tableau, i + 1, int(pivots[0]))
                    basis[i] = int(pivots[0])
                else:
                    keep[i + 1] = False
        if not keep.all():
            tableau = tableau[keep]
            basis = basis[keep[1:]]
        # Artificials may never re-enter.
        tableau[:, art_start:ncols] = 0.0

    # Phase 2: original objective, priced out over the current basis.
    tableau[0, :] = 0.0
    tableau[0, :n] = cost
    for i in range(len(basis)):
        coeff = tableau[0, basis[i]]
        if coeff != 0.0:
            tableau[0] -= coeff * tableau[i + 1]
    status = _run_simplex(tableau, basis, art_start)
    if status == UNBOUNDED:
        return LpSolution(status=UNBOUNDED)

    shifted = np.zeros(ncols)
    shifted[basis] = tableau[1:, -1]
    values = shifted[:n] + lows
    objective = float(np.dot(np.asarray(problem.objective, dtype=float), values))
    return LpSolution(status=OPTIMAL, values=values, objective_value=objective)
