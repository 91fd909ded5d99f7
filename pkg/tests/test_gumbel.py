"""Gumbel sampling, halving plans, the sigma transform, and full planning."""
import numpy as np
import pytest

from deskzero.envs import make_environment
from deskzero.errors import ContractViolation
from deskzero.gumbel import (
    CompletedQ,
    completed_q,
    default_sampled_actions,
    gumbel_search,
    improved_policy_target,
    sample_gumbel_top_k,
    sequential_halving_plan,
    sigma,
)
from deskzero.oracle import MinimaxOracle, OracleEvaluator
from deskzero.search import EvalResponse, SearchConfig, SearchNode, expand

from conftest import random_playout


class ZeroGumbelRng:
    """rng.random stub returning exp(-1): -log(-log(u)) == 0 exactly."""

    def random(self, size=None):
        value = np.exp(-1.0)
        return np.full(size, value) if size is not None else value


class TestGumbelTopK:
    def test_k_equal_to_action_count_returns_all(self):
        sample = sample_gumbel_top_k(np.array([0.3, -0.2, 1.0]), 3, np.random.default_rng(0))
        assert sorted(sample.slots) == [0, 1, 2]
        assert not sample.clamped

    def test_zero_noise_hook_gives_top_logits(self):
        logits = np.array([0.5, 2.0, -1.0, 1.0])
        sample = sample_gumbel_top_k(logits, 2, None, noise=np.zeros(4))
        assert sample.slots == [1, 3]

    def test_clamp_recorded(self):
        sample = sample_gumbel_top_k(np.zeros(2), 5, np.random.default_rng(0))
        assert sample.clamped and len(sample.slots) == 2

    def test_gumbel_max_frequency_two_thirds(self):
        # With logits {ln 2, 0}, argmax(G + logits) picks arm 0 w.p. 2/3.
        rng = np.random.default_rng(99)
        logits = np.array([np.log(2.0), 0.0])
        draws = 100_000
        u = rng.random((draws, 2))
        g = -np.log(-np.log(u))
        firsts = np.argmax(g + logits, axis=1)
        freq = float(np.mean(firsts == 0))
        assert abs(freq - 2.0 / 3.0) < 0.01


class TestHalvingPlan:
    def test_sixteen_over_four(self):
        plan = sequential_halving_plan(16, 4)
        assert [(p.size, p.visits, p.extra) for p in plan.phases] == [(4, 2, 0), (2, 4, 0)]
        assert plan.planned_visits == 16

    def test_pure_top_k(self):
        plan = sequential_halving_plan(2, 2)
        assert [(p.size, p.visits) for p in plan.phases] == [(2, 1)]

    def test_single_action(self):
        plan = sequential_halving_plan(7, 1)
        assert [(p.size, p.visits) for p in plan.phases] == [(1, 7)]

    def test_budget_below_m_is_error(self):
        with pytest.raises(ContractViolation):
            sequential_halving_plan(3, 4)

    def test_non_power_of_two_m_is_rounded_down(self):
        plan = sequential_halving_plan(16, 5)
        assert plan.m == 4 and plan.clamped

    def test_minimal_halving_cost_respected(self):
        # m=4 needs at least 4 + 2 = 6 budget; n=5 falls back to m=2.
        plan = sequential_halving_plan(5, 4)
        assert plan.m == 2
        assert plan.planned_visits == 5

    def test_leftover_goes_to_final_phase(self):
        plan = sequential_halving_plan(19, 4)
        assert plan.planned_visits == 19
        assert plan.phases[-1].visits >= plan.phases[0].visits

    @pytest.mark.parametrize("n,m", [(2, 2), (8, 4), (16, 4), (16, 8), (33, 8), (50, 16), (64, 16)])
    def test_budget_exactness_fuzz(self, n, m):
        plan = sequential_halving_plan(n, m)
        assert plan.planned_visits == n
        sizes = [p.size for p in plan.phases]
        assert all(a // 2 == b for a, b in zip(sizes, sizes[1:]))


class TestSigma:
    def test_zero_q_maps_to_zero(self):
        assert sigma(0.0, 10, SearchConfig()) == 0.0

    def test_monotone_in_q(self):
        cfg = SearchConfig()
        assert sigma(0.1, 5, cfg) < sigma(0.2, 5, cfg)

    def test_declared_constants_arithmetic(self):
        cfg = SearchConfig(c_visit=50.0, c_scale=1.0)
        assert sigma(0.2, 10, cfg) == pytest.approx(12.0)


class TestImprovedPolicyTarget:
    def _node(self, logits, legal, visits=None, values=None):
        node = SearchNode(0)
        expand(node, np.asarray(logits, dtype=float), legal)
        if visits is not None:
            node.edge_visits[:] = visits
            node.edge_values[:] = values
        return node

    def test_no_visits_degenerates_to_softmax_of_logits(self):
        logits = np.array([0.8, 0.1, -0.4])
        node = self._node(logits, [0, 1, 2])
        comp = completed_q(node, fallback_value=0.37)
        target = improved_policy_target(node, comp, SearchConfig(), 3)
        expected = np.exp(logits) / np.exp(logits).sum()
        assert np.allclose(target, expected, atol=1e-12)

    def test_dominant_searched_q_shifts_mass(self):
        logits = np.zeros(3)
        node = self._node(logits, [0, 1, 2], visits=[1, 0, 0], values=[0.9])
        comp = completed_q(node, fallback_value=0.0)
        target = improved_policy_target(node, comp, SearchConfig(), 3)
        assert target[0] > 1 / 3
        assert target.sum() == pytest.approx(1.0)

    def test_hand_computed_target(self):
        # Q = {+1 searched, 0 network}, logits = 0, c_visit=50, c_scale=1,
        # max visits 1: scores are sigma = 51 * q.
        node = self._node(np.zeros(2), [0, 1], visits=[1, 0], values=[1.0])
        comp = completed_q(node, fallback_value=0.0)
        target = improved_policy_target(node, comp, SearchConfig(), 2)
        scores = np.array([51.0, 0.0])
        expected = np.exp(scores - scores.max())
        expected /= expected.sum()
        assert np.allclose(target, expected, rtol=1e-12)

    def test_sources_recorded(self):
        node = self._node(np.zeros(3), [0, 1, 2], visits=[2, 0, 1], values=[0.4, 0, -0.2])
        comp = completed_q(node, fallback_value=0.5)
        assert comp.searched.tolist() == [True, False, True]
        assert comp.values[1] == 0.5

    def test_target_is_distribution_on_random_roots(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            n = int(rng.integers(2, 7))
            node = self._node(rng.standard_normal(n), list(range(n)))
            k = int(rng.integers(0, n + 1))
            node.edge_visits[:k] = rng.integers(1, 4, size=k)
            node.edge_values[:k] = rng.uniform(-1, 1, size=k) * node.edge_visits[:k]
            comp = completed_q(node, fallback_value=float(rng.uniform(-1, 1)))
            target = improved_policy_target(node, comp, SearchConfig(), n)
            assert target.min() >= 0.0
            assert target.sum() == pytest.approx(1.0, abs=1e-9)


class TestGumbelSearch:
    def test_degenerate_noise_selects_dominant_logit(self, ttt):
        state = ttt.initial_state()
        for action in (0, 3, 1, 4):
            state, _ = ttt.apply(state, action)  # winning move is 2
        cfg = SearchConfig(two_player=True, planning="env")
        result = gumbel_search(ttt, state, OracleEvaluator(ttt), 2, 2, ZeroGumbelRng(), cfg)
        assert result.selected_action == 2

    def test_budget_exactness(self, ttt):
        cfg = SearchConfig(two_player=True, planning="env")
        for n, m in [(2, 2), (4, 4), (16, 4), (16, 8), (23, 8)]:
            result = gumbel_search(
                ttt, ttt.initial_state(), OracleEvaluator(ttt), n, m,
                np.random.default_rng(n * 31 + m), cfg,
            )
            assert result.visit_counts.sum() == n

    def test_selected_is_most_visited_when_halving(self, ttt):
        cfg = SearchConfig(two_player=True, planning="env")
        rng = np.random.default_rng(0)
        for seed in range(20):
            result = gumbel_search(
                ttt, ttt.initial_state(), OracleEvaluator(ttt), 16, 4,
                np.random.default_rng(seed), cfg,
            )
            assert result.visit_counts[result.selected_action] == result.visit_counts.max()

    def test_logit_shift_invariance_with_fixed_noise(self, ttt):
        class ShiftEvaluator:
            def __init__(self, env, shift):
                self.inner = OracleEvaluator(env)
                self.shift = shift

            def evaluate_batch(self, requests):
                out = self.inner.evaluate_batch(requests)
                for response in out:
                    response.policy_logits = response.policy_logits + self.shift
                return out

        cfg = SearchConfig(two_player=True, planning="env")
        base = gumbel_search(
            ttt, ttt.initial_state(), ShiftEvaluator(ttt, 0.0), 16, 4, ZeroGumbelRng(), cfg
        )
        shifted = gumbel_search(
            ttt, ttt.initial_state(), ShiftEvaluator(ttt, 3.7), 16, 4, ZeroGumbelRng(), cfg
        )
        assert base.selected_action == shifted.selected_action
        assert np.array_equal(base.visit_counts, shifted.visit_counts)

    def test_gumbel_policy_targets_are_improved_policy(self, ttt):
        cfg = SearchConfig(two_player=True, planning="env")
        result = gumbel_search(
            ttt, ttt.initial_state(), OracleEvaluator(ttt), 8, 4,
            np.random.default_rng(4), cfg,
        )
        assert result.improved_policy is not None
        assert result.improved_policy.sum() == pytest.approx(1.0, abs=1e-9)
        # At n=8 most actions are unvisited: the target cannot be the
        # (sparse) visit distribution.
        assert not np.allclose(result.improved_policy, result.visit_distribution)


class BanditEnv:
    """One-step pseudo-environment for planner statistics.

    Only the pieces Gumbel planning touches are implemented; transitions
    are never taken because this is used with model-backed planning.
    """

    def __init__(self, arms):
        self.arms = np.asarray(arms, dtype=float)
        self.env_id = "bandit"
        self.num_players = 1
        self.is_two_player = False
        self.action_space_size = len(arms)
        self.observation_size = len(arms)
        self.typical_game_length = 1

    def initial_state(self):
        return 0

    def to_move(self, state):
        return 0

    def legal_actions(self, state):
        return tuple(range(self.action_space_size))

    def observe(self, state):
        return np.zeros(self.action_space_size)

    def terminal_outcome(self, state):
        from deskzero.envs.base import Outcome

        return Outcome(terminal=False)


class BanditEvaluator:
    def __init__(self, arms, logits):
        self.arms = np.asarray(arms, dtype=float)
        self.logits = np.asarray(logits, dtype=float)

    def evaluate_batch(self, requests):
        out = []
        for request in requests:
            if request.kind == "initial":
                out.append(EvalResponse(
                    policy_logits=self.logits.copy(), value=float(self.arms.mean()),
                    hidden=("root",),
                ))
            else:
                arm = request.action
                out.append(EvalResponse(
                    policy_logits=np.zeros(len(self.arms)),
                    value=float(self.arms[arm]),
                    reward=0.0,
                    hidden=("leaf", arm),
                    legal_actions=(),
                ))
        return out


def bandit_cfg():
    return SearchConfig(
        two_player=False, planning="model", estimated_q_mode="atari",
        discount=1.0, normalize_q=True,
    )


class TestPolicyImprovement:
    def test_bandit_selection_beats_prior_sampling(self):
        arms = np.array([0.9, 0.5, 0.1, 0.0])
        logits = np.array([0.0, 0.5, 0.3, 0.2])
        env = BanditEnv(arms)
        evaluator = BanditEvaluator(arms, logits)
        prior = np.exp(logits) / np.exp(logits).sum()
        expected_prior = float(prior @ arms)
        seeds = 3000
        picked = np.empty(seeds)
        for seed in range(seeds):
            result = gumbel_search(
                env, env.initial_state(), evaluator, 16, 4,
                np.random.default_rng(seed), bandit_cfg(),
            )
            picked[seed] = arms[result.selected_action]
        se = picked.std(ddof=1) / np.sqrt(seeds)
        assert picked.mean() >= expected_prior - 3 * se
        # With n=16 on 4 arms the improvement should be decisive.
        assert picked.mean() > expected_prior + 0.1


def test_default_sampled_actions():
    assert default_sampled_actions(2, 9) == 2
    assert default_sampled_actions(4, 3) == 3
    assert default_sampled_actions(16, 9) == 8
    assert default_sampled_actions(16, 30) == 16
    assert default_sampled_actions(50, 30) == 16
