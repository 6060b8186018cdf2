from __future__ import annotations

import random
from fractions import Fraction

import pytest

from restaking.incentives import (
    RewardPools,
    equilibrium_allocations,
    formation_utility,
    validator_reward,
    verify_best_response,
)
from restaking.model import InputError, Network, restaking_degree


def network_with(allocations, stakes, services):
    return Network(
        validators=tuple(stakes),
        services=tuple(services),
        stake=stakes,
        allocation=allocations,
        threshold={s: 0.5 for s in services},
        prize={s: 1 for s in services},
    )


def random_instance(rng):
    m = rng.randint(1, 4)
    n = rng.randint(2, 5)
    rewards = {f"s{j}": rng.uniform(0.5, 3.0) for j in range(m)}
    total = sum(rewards.values())
    target = rng.uniform(0.2, m * 0.99)
    limit = min(total / r for r in rewards.values())
    target = min(target, limit * 0.97)
    pools = RewardPools(reward=rewards, target_degree=target)
    stakes = {f"v{i}": rng.uniform(1.0, 20.0) for i in range(n)}
    return stakes, pools


class TestValidatorReward:
    def test_degree_at_target_is_paid(self):
        pools = RewardPools(reward={"a": 2.0}, target_degree=1.0)
        net = network_with({("v1", "a"): 4, ("v2", "a"): 4}, {"v1": 4, "v2": 4}, ("a",))
        assert validator_reward(net, pools, "v1", "a") == pytest.approx(1.0)

    def test_degree_above_target_pays_nothing(self):
        pools = RewardPools(reward={"a": 2.0, "b": 2.0}, target_degree=1.0)
        net = network_with(
            {("v1", "a"): 4, ("v1", "b"): 1, ("v2", "a"): 4},
            {"v1": 4, "v2": 4},
            ("a", "b"),
        )
        assert validator_reward(net, pools, "v1", "a") == 0

    def test_sole_allocator_collects_full_pool(self):
        pools = RewardPools(reward={"a": 3.0}, target_degree=1.0)
        net = network_with({("v1", "a"): 2}, {"v1": 4, "v2": 4}, ("a",))
        assert validator_reward(net, pools, "v1", "a") == pytest.approx(3.0)

    def test_zero_allocation_service_pays_zero(self):
        pools = RewardPools(reward={"a": 3.0}, target_degree=1.0)
        net = network_with({}, {"v1": 4}, ("a",))
        assert validator_reward(net, pools, "v1", "a") == 0


class TestFormationUtility:
    def test_symmetric_split(self):
        pools = RewardPools(reward={"a": 1.0, "b": 1.0}, target_degree=2.0)
        net = network_with(
            {(v, s): 2 for v in ("v1", "v2") for s in ("a", "b")},
            {"v1": 4, "v2": 4},
            ("a", "b"),
        )
        assert formation_utility(net, pools, "v1") == pytest.approx(1.0)

    def test_over_allocated_validator_gets_zero(self):
        pools = RewardPools(reward={"a": 1.0, "b": 1.0}, target_degree=1.0)
        net = network_with(
            {("v1", "a"): 4, ("v1", "b"): 4},
            {"v1": 4},
            ("a", "b"),
        )
        assert formation_utility(net, pools, "v1") == 0

    def test_everything_zero_allocated(self):
        pools = RewardPools(reward={"a": 1.0}, target_degree=1.0)
        net = network_with({}, {"v1": 4, "v2": 4, "v3": 4}, ("a",))
        assert formation_utility(net, pools, "v1") == 0


class TestEquilibrium:
    def test_equal_rewards_split_evenly(self):
        pools = RewardPools(reward={"a": 1.0, "b": 1.0}, target_degree=1.0)
        w = equilibrium_allocations({"v": 10}, pools)
        assert w[("v", "a")] == pytest.approx(5.0)
        assert w[("v", "b")] == pytest.approx(5.0)

    def test_three_services_degree_two(self):
        pools = RewardPools(reward={s: 1.0 for s in "abc"}, target_degree=2.0)
        w = equilibrium_allocations({"v": 3}, pools)
        assert all(w[("v", s)] == pytest.approx(2.0) for s in "abc")

    def test_single_service_full_stake(self):
        pools = RewardPools(reward={"a": 7.0}, target_degree=1.0)
        w = equilibrium_allocations({"v": 11}, pools)
        assert w[("v", "a")] == pytest.approx(11.0)

    def test_precondition_violation_names_service(self):
        pools = RewardPools(reward={"big": 10.0, "small": 1.0}, target_degree=2.0)
        with pytest.raises(InputError) as err:
            equilibrium_allocations({"v": 1}, pools)
        assert "big" in str(err.value)

    def test_exact_degree_with_rational_arithmetic(self):
        pools = RewardPools(
            reward={"a": Fraction(1), "b": Fraction(2)}, target_degree=Fraction(3, 2)
        )
        stakes = {"v1": Fraction(7), "v2": Fraction(4)}
        w = equilibrium_allocations(stakes, pools)
        net = network_with(w, stakes, ("a", "b"))
        for v in stakes:
            assert restaking_degree(net, v) == Fraction(3, 2)

    def test_scaling_covariance(self):
        rng = random.Random(60)
        for _ in range(20):
            stakes, pools = random_instance(rng)
            scaled = RewardPools(
                reward={s: 7.5 * r for s, r in pools.reward.items()},
                target_degree=pools.target_degree,
            )
            w1 = equilibrium_allocations(stakes, pools)
            w2 = equilibrium_allocations(stakes, scaled)
            for key in w1:
                assert w1[key] == pytest.approx(w2[key], rel=1e-12)


class TestBestResponse:
    def equilibrium_network(self, stakes, pools):
        w = equilibrium_allocations(stakes, pools)
        return network_with(w, stakes, tuple(pools.reward))

    def test_no_gain_at_equilibrium(self):
        rng = random.Random(61)
        for _ in range(15):
            stakes, pools = random_instance(rng)
            net = self.equilibrium_network(stakes, pools)
            for v in net.validators:
                assert verify_best_response(net, pools, v, 30) <= 1e-6

    def test_budget_balance_at_equilibrium(self):
        rng = random.Random(62)
        for _ in range(15):
            stakes, pools = random_instance(rng)
            net = self.equilibrium_network(stakes, pools)
            paid = sum(formation_utility(net, pools, v) for v in net.validators)
            assert paid == pytest.approx(pools.total(), abs=1e-9)

    def test_perturbed_profile_is_improvable(self):
        pools = RewardPools(reward={"a": 1.0, "b": 1.0}, target_degree=1.0)
        stakes = {"v1": 10.0, "v2": 10.0}
        w = equilibrium_allocations(stakes, pools)
        w[("v1", "a")] = 1.0  # v1 badly under-allocates to a
        net = network_with(w, stakes, ("a", "b"))
        assert verify_best_response(net, pools, "v1", 50) > 1e-4

    def test_gate_never_binds_when_target_exceeds_service_count(self):
        # With target_degree >= |S| the scheme is plain proportional reward.
        pools = RewardPools(reward={"a": 1.0, "b": 1.0}, target_degree=2.0)
        stakes = {"v1": 5.0, "v2": 5.0}
        net = network_with(
            {(v, s): 5.0 for v in stakes for s in "ab"}, stakes, ("a", "b")
        )
        for v in stakes:
            assert formation_utility(net, pools, v) == pytest.approx(1.0)
            assert verify_best_response(net, pools, v, 25) <= 1e-6
