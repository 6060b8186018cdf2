"""Reward scheme targeting a network-wide restaking degree.

Each service distributes a reward pool proportionally to allocations, but
only to validators whose restaking degree stays at or below the target.
Under the stated condition on pool sizes (no single service's share of the
total rewards exceeds the full-stake allocation once scaled by the target
degree), allocating target_degree * pool_share * stake to every service is
a Nash equilibrium whose degree is exactly the target.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .model import InputError, Network, restaking_degree

__all__ = [
    "RewardPools",
    "validator_reward",
    "formation_utility",
    "equilibrium_allocations",
    "verify_best_response",
]

_GATE_TOL = 1e-9


@dataclass(frozen=True)
class RewardPools:
    """Per-service reward pools and the target restaking degree."""

    reward: Mapping[str, float]
    target_degree: float

    def __post_init__(self):
        if self.target_degree <= 0:
            raise InputError("target_degree must be positive")
        for s, r in self.reward.items():
            if r <= 0:
                raise InputError(f"reward must be positive (service {s!r})")

    def total(self):
        return sum(self.reward.values())


def _within_target(net: Network, pools: RewardPools, v: str) -> bool:
    degree = restaking_degree(net, v)
    target = pools.target_degree
    return degree <= target + _GATE_TOL * max(1.0, abs(target))


def validator_reward(net: Network, pools: RewardPools, v: str, s: str):
    """Reward of one validator from one service.

    Proportional share of the pool while the validator's degree respects the
    target; zero otherwise. A service nobody allocates to pays nothing.
    """
    if v not in net.stake:
        raise InputError(f"unknown validator {v!r}")
    if s not in pools.reward:
        raise InputError(f"no reward pool for service {s!r}")
    if not _within_target(net, pools, v):
        return 0
    total = net.total_allocation(s)
    if total == 0:
        return 0
    return net.w(v, s) / total * pools.reward[s]


def formation_utility(net: Network, pools: RewardPools, v: str):
    """Total rewards of a validator; the degree gate applies to all of them."""
    if v not in net.stake:
        raise InputError(f"unknown validator {v!r}")
    if not _within_target(net, pools, v):
        return 0
    utility = 0
    for s in net.services:
        if s not in pools.reward:
            continue
        total = net.total_allocation(s)
        if total == 0:
            continue
        utility += net.w(v, s) / total * pools.reward[s]
    return utility


def equilibrium_allocations(
    stakes: Mapping[str, float], pools: RewardPools
) -> dict[tuple[str, str], float]:
    """The equilibrium profile: target_degree * pool share * stake.

    Requires target_degree * reward(s) / total rewards <= 1 for every
    service, otherwise the profile would exceed some validator's stake.
    """
    total = pools.total()
    shares = {}
    for s, r in pools.reward.items():
        share = pools.target_degree * r / total
        if share > 1 + _GATE_TOL:
            raise InputError(
                f"equilibrium violates the stake cap for service {s!r}: "
                f"target_degree * reward share = {share:.6f} > 1"
            )
        shares[s] = share
    return {
        (v, s): shares[s] * sigma for v, sigma in stakes.items() for s in pools.reward
    }


def _deviation_utility(
    rewards: np.ndarray,
    others: np.ndarray,
    candidate: np.ndarray,
    stake: float,
    target: float,
) -> float:
    degree = candidate.sum() / stake
    if degree > target + _GATE_TOL * max(1.0, target):
        return 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        denom = candidate + others
        shares = np.where(denom > 0, candidate / np.where(denom > 0, denom, 1.0), 0.0)
    return float(shares @ rewards)


def verify_best_response(
    net: Network,
    pools: RewardPools,
    v: str,
    grid_resolution: int = 50,
    seed: int = 0,
) -> float:
    """Best utility gain found for one validator over deviations.

    Holding everyone else fixed, searches a deterministic grid (pairwise
    splits of the degree budget, single-service all-ins, scaled-down copies
    of the current profile) plus Dirichlet-sampled points of the
    degree-budget simplex, all clipped at the stake cap. The utility is
    concave inside the degree gate, so this resolution comfortably certifies
    equilibria: at the equilibrium profile the gain stays within 1e-6.
    """
    if v not in net.stake:
        raise InputError(f"unknown validator {v!r}")
    if grid_resolution < 1:
        raise InputError("grid_resolution must be at least 1")
    services = [s for s in net.services if s in pools.reward]
    rewards = np.array([pools.reward[s] for s in services], dtype=float)
    others = np.array(
        [
            sum(net.w(u, s) for u in net.validators if u != v)
            for s in services
        ],
        dtype=float,
    )
    stake = float(net.stake[v])
    target = float(pools.target_degree)
    budget = min(target * stake, stake * len(services))
    cap = stake

    current = np.array([net.w(v, s) for s in services], dtype=float)
    base_utility = _deviation_utility(rewards, others, current, stake, target)

    candidates = [current]
    m = len(services)
    eye = np.eye(m)
    # Single-service all-ins at the stake cap.
    for j in range(m):
        candidates.append(eye[j] * min(budget, cap))
    # Scaled copies of the current profile (explores lower degrees).
    for t in range(grid_resolution + 1):
        candidates.append(current * (t / grid_resolution))
    # Pairwise splits of the full degree budget.
    for j in range(m):
        for k in range(j + 1, m):
            for t in range(grid_resolution + 1):
                frac = t / grid_resolution
                point = np.zeros(m)
                point[j] = min(cap, budget * frac)
                point[k] = min(cap, budget * (1 - frac))
                candidates.append(point)
    # Random interior points of the budget simplex.
    rng = np.random.default_rng(seed)
    if m >= 1:
        dirichlet = rng.dirichlet(np.ones(m), size=grid_resolution)
        for row in dirichlet:
            candidates.append(np.minimum(row * budget, cap))
    # Just past the gate, to confirm over-allocation never pays.
    candidates.append(np.minimum(current * 1.01, cap))

    best = base_utility
    for cand in candidates:
        u = _deviation_utility(rewards, others, cand, stake, target)
        if u > best:
            best = u
    return best - base_utility
