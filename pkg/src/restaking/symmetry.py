"""Exact polynomial-time analysis of symmetric networks.

In a symmetric network (equal stakes, equal per-service allocation columns,
one common threshold) every attack can be replaced by a canonical
consolidated attack with the same prize and no higher cost: the first
floor(threshold * n) validators commit their full allocation and one more
validator commits the fractional remainder. Security and robustness checks
therefore reduce to evaluating a closed-form cost over subsets of services,
and subsets only matter through their (allocation, prize) class counts, so
the enumeration is polynomial per class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Callable, Iterable, Iterator, Mapping

from .model import (
    Attack,
    InputError,
    Network,
    _exact,
    _le,
)

__all__ = [
    "SymmetricNetwork",
    "NotSymmetricError",
    "SearchBracketError",
    "as_symmetric",
    "to_network",
    "consolidated_cost",
    "consolidated_attack",
    "is_secure",
    "is_beta_robust",
    "is_f_beta_robust",
    "SymmetricViolation",
    "find_beta_costly",
    "max_budget",
    "total_weight",
    "SweepTemplate",
    "min_stake_for",
    "secure_predicate",
    "beta_robust_predicate",
    "f_beta_robust_predicate",
]

_REL_TOL = 1e-12


class NotSymmetricError(ValueError):
    """Raised when a network fails one of the three symmetry conditions."""

    def __init__(self, condition: str, message: str):
        super().__init__(message)
        self.condition = condition


class SearchBracketError(RuntimeError):
    """Raised when a stake search cannot bracket a satisfying value."""


@dataclass(frozen=True)
class SymmetricNetwork:
    """Compact form of a symmetric network.

    allocation maps each service to the (common) per-validator allocation;
    prize maps each service to its attack prize. Services listed in
    base_services can never be chosen Byzantine.
    """

    n_validators: int
    stake: float
    allocation: Mapping[str, float]
    threshold: float
    prize: Mapping[str, float]
    base_services: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "base_services", frozenset(self.base_services))
        if self.n_validators < 1:
            raise InputError("need at least one validator")
        if self.stake <= 0:
            raise InputError("stake must be positive")
        if not 0 <= self.threshold <= 1:
            raise InputError("threshold must lie in [0, 1]")
        if set(self.allocation) != set(self.prize):
            raise InputError("allocation and prize must cover the same services")
        for s, w in self.allocation.items():
            if w < 0 or not _le(w, self.stake):
                raise InputError(f"allocation must lie in [0, stake] (service {s!r})")
        for s, p in self.prize.items():
            if p <= 0:
                raise InputError(f"prize must be positive (service {s!r})")
        if not self.base_services <= set(self.allocation):
            raise InputError("base_services must be a subset of services")

    @property
    def services(self) -> tuple[str, ...]:
        return tuple(self.allocation)


def _values_close(a, b) -> bool:
    if _exact(a, b):
        return a == b
    return abs(a - b) <= _REL_TOL * max(1.0, abs(a), abs(b))


def as_symmetric(net: Network) -> SymmetricNetwork:
    """Compact a network, or raise NotSymmetricError naming the failed check."""
    if not net.validators:
        raise NotSymmetricError("stake", "network has no validators")
    v0 = net.validators[0]
    sigma = net.stake[v0]
    for v in net.validators[1:]:
        if not _values_close(net.stake[v], sigma):
            raise NotSymmetricError("stake", f"validator {v!r} has a different stake")
    allocation = {}
    for s in net.services:
        w0 = net.w(v0, s)
        for v in net.validators[1:]:
            if not _values_close(net.w(v, s), w0):
                raise NotSymmetricError(
                    "allocation",
                    f"validator {v!r} allocates differently to service {s!r}",
                )
        allocation[s] = w0
    if not net.services:
        raise NotSymmetricError("threshold", "network has no services")
    theta = net.threshold[net.services[0]]
    for s in net.services[1:]:
        if not _values_close(net.threshold[s], theta):
            raise NotSymmetricError(
                "threshold", f"service {s!r} has a different threshold"
            )
    return SymmetricNetwork(
        n_validators=len(net.validators),
        stake=sigma,
        allocation=allocation,
        threshold=theta,
        prize={s: net.prize[s] for s in net.services},
        base_services=net.base_services,
    )


def to_network(sym: SymmetricNetwork) -> Network:
    """Expand the compact form; validators are named v1..vn."""
    validators = tuple(f"v{i + 1}" for i in range(sym.n_validators))
    return Network(
        validators=validators,
        services=sym.services,
        stake={v: sym.stake for v in validators},
        allocation={
            (v, s): w for v in validators for s, w in sym.allocation.items() if w != 0
        },
        threshold={s: sym.threshold for s in sym.services},
        prize=dict(sym.prize),
        base_services=sym.base_services,
    )


def _threshold_split(sym: SymmetricNetwork):
    """floor and fractional part of threshold * n, snapped for float noise."""
    t = sym.threshold * sym.n_validators
    if _exact(t):
        k = math.floor(t)
    else:
        k = math.floor(t + 1e-9)
    frac = t - k
    if frac < 0:
        frac = 0
    return k, frac


def consolidated_cost(sym: SymmetricNetwork, target: Iterable[str]):
    """Cost of the consolidated attack on the target services.

    With W the summed per-validator allocation over the target, the first
    floor(threshold * n) validators pay min(stake, W) and the fractional
    validator pays min(stake, frac * W).
    """
    target = tuple(target)
    unknown = set(target) - set(sym.services)
    if unknown:
        raise InputError(f"unknown services: {sorted(unknown)}")
    w_total = sum(sym.allocation[s] for s in target)
    k, frac = _threshold_split(sym)
    return k * min(sym.stake, w_total) + min(sym.stake, frac * w_total)


def consolidated_attack(sym: SymmetricNetwork, target: Iterable[str]) -> Attack:
    """The unique consolidated attack hitting exactly the target services.

    Expressed against :func:`to_network` validator ids: validators v1..vk at
    full allocation and v(k+1) at the fractional remainder.
    """
    target = tuple(target)
    unknown = set(target) - set(sym.services)
    if unknown:
        raise InputError(f"unknown services: {sorted(unknown)}")
    k, frac = _threshold_split(sym)
    used: dict[tuple[str, str], float] = {}
    for s in target:
        w = sym.allocation[s]
        if w == 0:
            continue
        for i in range(min(k, sym.n_validators)):
            used[(f"v{i + 1}", s)] = w
        if frac > 0 and k < sym.n_validators:
            used[(f"v{k + 1}", s)] = frac * w
    return Attack(stake_used=used)


def _classes(sym: SymmetricNetwork) -> list[tuple[tuple, list[str]]]:
    """Group services by (allocation, prize); counts fully determine attacks."""
    groups: dict[tuple, list[str]] = {}
    for s in sym.services:
        groups.setdefault((sym.allocation[s], sym.prize[s]), []).append(s)
    return list(groups.items())


def _count_vectors(limits: list[int]) -> Iterator[tuple[int, ...]]:
    yield from product(*(range(c + 1) for c in limits))


def _worst_margin(sym: SymmetricNetwork):
    """Minimum of cost - prize over all non-empty service subsets."""
    classes = _classes(sym)
    k, frac = _threshold_split(sym)
    worst = math.inf
    for counts in _count_vectors([len(ids) for _, ids in classes]):
        if not any(counts):
            continue
        w_total = sum(c * key[0] for c, (key, _) in zip(counts, classes))
        prize = sum(c * key[1] for c, (key, _) in zip(counts, classes))
        cost = k * min(sym.stake, w_total) + min(sym.stake, frac * w_total)
        margin = cost - prize
        if margin < worst:
            worst = margin
    return worst


def is_secure(sym: SymmetricNetwork) -> bool:
    """True iff every consolidated attack costs strictly more than its prize."""
    return is_beta_robust(sym, 0)


def is_beta_robust(sym: SymmetricNetwork, budget) -> bool:
    """True iff every consolidated attack costs strictly more than prize + budget."""
    if budget < 0:
        raise InputError("budget must be non-negative")
    classes = _classes(sym)
    k, frac = _threshold_split(sym)
    for counts in _count_vectors([len(ids) for _, ids in classes]):
        if not any(counts):
            continue
        w_total = sum(c * key[0] for c, (key, _) in zip(counts, classes))
        prize = sum(c * key[1] for c, (key, _) in zip(counts, classes))
        cost = k * min(sym.stake, w_total) + min(sym.stake, frac * w_total)
        if _le(cost, prize + budget):
            return False
    return True


def _slash_counts(
    sym: SymmetricNetwork, byz: dict[tuple, int]
) -> SymmetricNetwork | None:
    """Network left after slashing ``byz[class-key]`` non-base services per class.

    Returns None when no services remain (the vacuous, trivially robust
    case). When slashing wipes the whole stake, the result keeps a positive
    stake but zero allocations, which evaluates identically for attacks
    (every cost term is capped by the zero allocation).
    """
    slashed_total = sum(key[0] * cnt for key, cnt in byz.items())
    new_stake = max(0, sym.stake - slashed_total)
    remaining: dict[str, float] = {}
    prizes: dict[str, float] = {}
    removed = dict(byz)
    for s in sym.services:
        key = (sym.allocation[s], sym.prize[s])
        if s not in sym.base_services and removed.get(key, 0) > 0:
            removed[key] -= 1
            continue
        remaining[s] = min(sym.allocation[s], new_stake)
        prizes[s] = sym.prize[s]
    if not remaining:
        return None
    return SymmetricNetwork(
        n_validators=sym.n_validators,
        stake=new_stake if new_stake > 0 else sym.stake,
        allocation=remaining,
        threshold=sym.threshold,
        prize=prizes,
        base_services=sym.base_services & set(remaining),
    )


def _byzantine_count_choices(
    sym: SymmetricNetwork, weight_cap
) -> Iterator[dict[tuple, int]]:
    """Count vectors over non-base service classes within the weight cap."""
    classes: dict[tuple, int] = {}
    for s in sym.services:
        if s in sym.base_services:
            continue
        key = (sym.allocation[s], sym.prize[s])
        classes[key] = classes.get(key, 0) + 1
    keys = list(classes)
    weights = [
        math.inf if sym.threshold == 0 else key[1] / sym.threshold for key in keys
    ]
    for counts in _count_vectors([classes[key] for key in keys]):
        weight = sum(cnt * w for cnt, w in zip(counts, weights) if cnt)
        if _le(weight, weight_cap):
            yield {key: cnt for key, cnt in zip(keys, counts) if cnt}


def total_weight(sym: SymmetricNetwork):
    """Total prize-to-threshold weight over non-base services."""
    if sym.threshold == 0:
        eligible = [s for s in sym.services if s not in sym.base_services]
        return math.inf if eligible else 0
    return sum(
        sym.prize[s] / sym.threshold
        for s in sym.services
        if s not in sym.base_services
    )


def _weight_cap(sym: SymmetricNetwork, f):
    """Absolute Byzantine weight cap for a fraction f of the total weight."""
    if f == 0:
        return 0
    tw = total_weight(sym)
    if tw == 0:
        return 0
    if math.isinf(f) or math.isinf(tw):
        return math.inf
    return f * tw


def is_f_beta_robust(sym: SymmetricNetwork, f, budget) -> bool:
    """Robustness against a budget after any admissible Byzantine choice.

    ``f`` is a fraction of the total non-base prize-to-threshold weight;
    every Byzantine count combination within the cap is applied and the
    remaining network must stay budget-robust. A choice that removes every
    service is vacuously fine.
    """
    if f < 0:
        raise InputError("f must be non-negative")
    cap = _weight_cap(sym, f)
    for byz in _byzantine_count_choices(sym, cap):
        slashed = _slash_counts(sym, byz)
        if slashed is None:
            continue
        if not is_beta_robust(slashed, budget):
            return False
    return True


@dataclass(frozen=True)
class SymmetricViolation:
    """Witness that a symmetric network is not (f, budget)-robust."""

    byzantine: tuple[str, ...]
    target: tuple[str, ...]
    attack: Attack
    cost: float
    prize: float


def find_beta_costly(sym: SymmetricNetwork, f, budget) -> SymmetricViolation | None:
    """Materialize a violating (Byzantine choice, consolidated attack) pair.

    Returns None when the network is (f, budget)-robust. Byzantine services
    and attack targets are picked deterministically from their equivalence
    classes in service order.
    """
    if budget < 0:
        raise InputError("budget must be non-negative")
    cap = _weight_cap(sym, f)
    for byz in _byzantine_count_choices(sym, cap):
        byz_ids: list[str] = []
        taken = dict(byz)
        for s in sym.services:
            key = (sym.allocation[s], sym.prize[s])
            if s not in sym.base_services and taken.get(key, 0) > 0:
                taken[key] -= 1
                byz_ids.append(s)
        slashed = _slash_counts(sym, byz)
        if slashed is None:
            continue
        classes = _classes(slashed)
        k, frac = _threshold_split(slashed)
        for counts in _count_vectors([len(ids) for _, ids in classes]):
            if not any(counts):
                continue
            w_total = sum(c * key[0] for c, (key, _) in zip(counts, classes))
            prize = sum(c * key[1] for c, (key, _) in zip(counts, classes))
            cost = k * min(slashed.stake, w_total) + min(
                slashed.stake, frac * w_total
            )
            if _le(cost, prize + budget):
                target: list[str] = []
                for c, (_, ids) in zip(counts, classes):
                    target.extend(ids[:c])
                attack = consolidated_attack(slashed, target)
                return SymmetricViolation(
                    byzantine=tuple(byz_ids),
                    target=tuple(target),
                    attack=attack,
                    cost=cost,
                    prize=prize,
                )
    return None


def max_budget(sym: SymmetricNetwork, f) -> float:
    """Supremum of budgets for which the network is (f, budget)-robust.

    Closed form: the minimum over admissible Byzantine choices and attack
    subsets of (consolidated cost - prize) on the slashed network, clamped
    at zero. Returns inf when no attack subset exists at all.
    """
    if f < 0:
        raise InputError("f must be non-negative")
    cap = _weight_cap(sym, f)
    worst = math.inf
    for byz in _byzantine_count_choices(sym, cap):
        slashed = _slash_counts(sym, byz)
        if slashed is None:
            continue
        margin = _worst_margin(slashed)
        if margin < worst:
            worst = margin
    if math.isinf(worst):
        return math.inf
    return max(0, worst)


@dataclass(frozen=True)
class SweepTemplate:
    """Family of symmetric networks used by the stake sweeps.

    Regular services share one threshold and prize and receive the uniform
    allocation degree * stake / n_services per validator. When a base
    service is configured, every validator additionally allocates their
    entire stake to it.
    """

    n_validators: int
    n_services: int
    threshold: float
    prize: float = 1.0
    base_prize: float | None = None
    base_threshold: float | None = None

    def __post_init__(self):
        if self.n_validators < 1 or self.n_services < 1:
            raise InputError("need at least one validator and one service")
        if not 0 < self.threshold <= 1:
            raise InputError("threshold must lie in (0, 1]")
        if self.has_base() and not 0 < self.base_threshold <= 1:
            raise InputError("base_threshold must lie in (0, 1]")

    def has_base(self) -> bool:
        return self.base_prize is not None

    def _allocations(self, stake, degree):
        if stake <= 0:
            raise InputError("stake must be positive")
        if degree < 0 or degree > self.n_services:
            raise InputError(
                "degree must lie in [0, n_services] for the uniform allocation"
            )
        per_service = degree * stake / self.n_services
        allocation = {f"s{i + 1}": per_service for i in range(self.n_services)}
        prize = {f"s{i + 1}": self.prize for i in range(self.n_services)}
        threshold = {f"s{i + 1}": self.threshold for i in range(self.n_services)}
        base: frozenset[str] = frozenset()
        if self.has_base():
            allocation["base"] = stake
            prize["base"] = self.base_prize
            threshold["base"] = self.base_threshold
            base = frozenset({"base"})
        return allocation, prize, threshold, base

    def build(self, stake, degree) -> SymmetricNetwork:
        """Compact symmetric form; requires the base threshold to match."""
        allocation, prize, threshold, base = self._allocations(stake, degree)
        if self.has_base() and self.base_threshold != self.threshold:
            raise InputError(
                "base service must share the common threshold in symmetric form"
            )
        return SymmetricNetwork(
            n_validators=self.n_validators,
            stake=stake,
            allocation=allocation,
            threshold=self.threshold,
            prize=prize,
            base_services=base,
        )

    def build_network(self, stake, degree) -> Network:
        """Full network form; works for any base threshold."""
        allocation, prize, threshold, base = self._allocations(stake, degree)
        validators = tuple(f"v{i + 1}" for i in range(self.n_validators))
        return Network(
            validators=validators,
            services=tuple(allocation),
            stake={v: stake for v in validators},
            allocation={
                (v, s): w for v in validators for s, w in allocation.items() if w != 0
            },
            threshold=threshold,
            prize=prize,
            base_services=base,
        )


def secure_predicate() -> Callable[[SymmetricNetwork], bool]:
    return is_secure


def beta_robust_predicate(budget) -> Callable[[SymmetricNetwork], bool]:
    return lambda sym: is_beta_robust(sym, budget)


def f_beta_robust_predicate(f, budget) -> Callable[[SymmetricNetwork], bool]:
    return lambda sym: is_f_beta_robust(sym, f, budget)


def min_stake_for(
    template: SweepTemplate,
    predicate: Callable[[SymmetricNetwork], bool],
    degree,
    tolerance: float = 1e-6,
) -> float:
    """Infimum per-validator stake satisfying the predicate at this degree.

    The predicate is monotone in the stake because every allocation in the
    template scales with it, so a doubling bracket followed by bisection is
    exact to the tolerance. Raises SearchBracketError when no bracket
    satisfies the predicate (the configuration is unsatisfiable at any
    stake, e.g. slashing can wipe all stake regardless of its size).
    """
    weights = [template.prize / template.threshold]
    if template.has_base():
        weights.append(template.base_prize / template.base_threshold)
    n_all = template.n_services + (1 if template.has_base() else 0)
    hi = max(weights) * n_all
    lo = 0.0

    def check(stake: float) -> bool:
        return predicate(template.build(stake, degree))

    doublings = 0
    while not check(hi):
        hi *= 2
        doublings += 1
        if doublings > 60:
            raise SearchBracketError(
                f"predicate unsatisfiable at any stake; bracket [0, {hi}]"
            )
    while hi - lo > tolerance:
        mid = (lo + hi) / 2
        if check(mid):
            hi = mid
        else:
            lo = mid
    return hi
