"""Exhaustive oracles for small networks, plus hardness-reduction builders.

The oracle linearizes the stake-capped cost by enumerating, for each target
set of services, which validators hit their stake cap; each assignment
leaves a plain LP. Exponential in the network size by design: exactness is
the whole point, and the reduction results say no general fast algorithm is
expected. Keep |V| and |S| at about a dozen or below.

The reduction builders construct the networks that tie profitable-attack
search to Subset Sum; they double as randomized correctness fixtures.
"""

from __future__ import annotations

import math
from itertools import combinations
from typing import Sequence

from .lp import OPTIMAL, LpProblem, solve_lp
from .model import (
    Attack,
    InputError,
    Network,
    evaluate_attack,
    is_profitable,
)

__all__ = [
    "min_cost_attack",
    "best_attack",
    "min_budget_bruteforce",
    "best_indivisible_attack",
    "has_profitable_indivisible_attack",
    "build_indivisible_reduction",
    "build_divisible_reduction",
    "subset_sum_bruteforce",
]


def min_cost_attack(
    net: Network, target: Sequence[str]
) -> tuple[float, Attack] | None:
    """Cheapest attack whose attacked set covers ``target``.

    Enumerates the 2^|V| choices of stake-capped validators and solves one
    LP per choice; exact up to LP tolerance. Returns None if no assignment
    is feasible (unreachable for thresholds in [0, 1], kept for safety).
    """
    target = tuple(dict.fromkeys(target))
    if not target:
        raise InputError("target must be non-empty")
    unknown = set(target) - set(net.services)
    if unknown:
        raise InputError(f"unknown services: {sorted(unknown)}")

    validators = net.validators
    n, t = len(validators), len(target)
    var = lambda i, j: i * t + j
    nvars = n * t

    bounds = [
        (0.0, float(net.w(v, s))) for v in validators for s in target
    ]
    base_rows: list[tuple[list[float], str, float]] = []
    for j, s in enumerate(target):
        coeffs = [0.0] * nvars
        for i in range(n):
            coeffs[var(i, j)] = 1.0
        required = float(net.threshold[s]) * float(net.total_allocation(s))
        base_rows.append((coeffs, ">=", required))

    # Validators that cannot reach their cap within the target allocations
    # never appear in a feasible capped set.
    cappable = [
        i
        for i, v in enumerate(validators)
        if sum(net.w(v, s) for s in target) >= net.stake[v]
    ]

    best: tuple[float, Attack] | None = None
    for size in range(len(cappable) + 1):
        for capped in combinations(cappable, size):
            capped_set = set(capped)
            rows = list(base_rows)
            objective = [0.0] * nvars
            constant = 0.0
            for i, v in enumerate(validators):
                if i in capped_set:
                    constant += float(net.stake[v])
                    coeffs = [0.0] * nvars
                    for j in range(t):
                        coeffs[var(i, j)] = 1.0
                    rows.append((coeffs, ">=", float(net.stake[v])))
                else:
                    for j in range(t):
                        objective[var(i, j)] = 1.0
            solution = solve_lp(
                LpProblem(objective=objective, sense="min", constraints=rows, bounds=bounds)
            )
            if solution.status != OPTIMAL:
                continue
            total = constant + solution.objective_value
            if best is None or total < best[0]:
                used = {
                    (validators[i], target[j]): float(solution.values[var(i, j)])
                    for i in range(n)
                    for j in range(t)
                    if solution.values[var(i, j)] > 1e-12
                }
                best = (total, Attack(stake_used=used))
    return best


def best_attack(net: Network) -> tuple[float, Attack]:
    """Highest-margin attack over all non-empty target sets.

    The network is secure iff the returned margin is negative. Targets are
    visited in descending prize order so hopeless ones are pruned early.
    """
    if not net.services:
        raise InputError("network has no services")
    targets = []
    for size in range(1, len(net.services) + 1):
        for combo in combinations(net.services, size):
            targets.append((sum(net.prize[s] for s in combo), combo))
    targets.sort(key=lambda item: (-item[0], item[1]))

    best_margin = -math.inf
    best_attack_found: Attack | None = None
    for prize, combo in targets:
        if prize <= best_margin:  # cost >= 0, so this target cannot win
            break
        result = min_cost_attack(net, combo)
        if result is None:
            continue
        cost, attack = result
        margin = prize - cost
        if margin > best_margin:
            best_margin = margin
            best_attack_found = attack
    return best_margin, best_attack_found


def min_budget_bruteforce(net: Network) -> float:
    """Supremum of safe adversary budgets, by exhaustive attack search."""
    margin, _ = best_attack(net)
    return max(0.0, -margin)


def best_indivisible_attack(net: Network) -> tuple[float, Attack]:
    """Highest-margin attack using full allocations only.

    Pure enumeration over the nonzero (validator, service) edges, pruned by
    the total-prize upper bound; exponential in the edge count, so only for
    reduction-sized networks.
    """
    edges = [(v, s) for (v, s), w in net.allocation.items() if w > 0]
    edges.sort()
    total_prize = sum(net.prize.values())
    best_margin = -math.inf
    best: Attack | None = Attack(stake_used={})

    def recurse(idx: int, chosen: dict) -> None:
        nonlocal best_margin, best
        if idx == len(edges):
            attack = Attack(stake_used=dict(chosen))
            evaluation = evaluate_attack(net, attack)
            if evaluation.attacked_services and evaluation.margin > best_margin:
                best_margin = evaluation.margin
                best = attack
            return
        if total_prize <= best_margin:
            return
        v, s = edges[idx]
        recurse(idx + 1, chosen)
        chosen[(v, s)] = net.w(v, s)
        recurse(idx + 1, chosen)
        del chosen[(v, s)]

    recurse(0, {})
    return best_margin, best


def has_profitable_indivisible_attack(net: Network) -> bool:
    margin, attack = best_indivisible_attack(net)
    if margin == -math.inf:
        return False
    return is_profitable(evaluate_attack(net, attack))


def build_indivisible_reduction(
    elements: Sequence[int], target: int
) -> Network:
    """Network whose profitable indivisible attacks mirror Subset Sum.

    One service with threshold target/total and prize equal to the target;
    one validator per element, fully allocated.
    """
    if not elements or any(e <= 0 for e in elements):
        raise InputError("elements must be positive")
    total = sum(elements)
    if not 0 < target <= total:
        raise InputError("target must satisfy 0 < target <= sum(elements)")
    validators = tuple(f"v{i + 1}" for i in range(len(elements)))
    return Network(
        validators=validators,
        services=("s",),
        stake={v: e for v, e in zip(validators, elements)},
        allocation={(v, "s"): e for v, e in zip(validators, elements)},
        threshold={"s": target / total},
        prize={"s": target},
    )


def build_divisible_reduction(elements: Sequence[int], target: int) -> Network:
    """Network whose profitable divisible attacks mirror Subset Sum.

    Each element gets a private service (threshold 1, prize element/2) plus
    a shared service (threshold target/total, prize target/2); validator i
    allocates its full stake to both its private service and the shared one.
    """
    if not elements or any(e <= 0 for e in elements):
        raise InputError("elements must be positive")
    total = sum(elements)
    if not 0 < target <= total:
        raise InputError("target must satisfy 0 < target <= sum(elements)")
    n = len(elements)
    validators = tuple(f"v{i + 1}" for i in range(n))
    services = tuple(f"s{i + 1}" for i in range(n)) + ("shared",)
    allocation: dict[tuple[str, str], float] = {}
    threshold: dict[str, float] = {}
    prize: dict[str, float] = {}
    for i, e in enumerate(elements):
        allocation[(validators[i], services[i])] = e
        allocation[(validators[i], "shared")] = e
        threshold[services[i]] = 1
        prize[services[i]] = e / 2
    threshold["shared"] = target / total
    prize["shared"] = target / 2
    return Network(
        validators=validators,
        services=services,
        stake={v: e for v, e in zip(validators, elements)},
        allocation=allocation,
        threshold=threshold,
        prize=prize,
    )


def subset_sum_bruteforce(elements: Sequence[int], target: int) -> bool:
    """Ground truth for the reduction tests: plain subset enumeration."""
    n = len(elements)
    for mask in range(1 << n):
        acc = 0
        for i in range(n):
            if mask >> i & 1:
                acc += elements[i]
        if acc == target:
            return True
    return False
