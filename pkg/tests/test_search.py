"""Tree operations, PUCT selection, estimated Q, and full searches."""
import numpy as np
import pytest

from deskzero.envs import make_environment
from deskzero.errors import ContractViolation
from deskzero.oracle import MinimaxOracle, OracleEvaluator
from deskzero.search import (
    CountingEvaluator,
    EvalResponse,
    SearchConfig,
    SearchNode,
    SearchTree,
    backpropagate,
    estimate_unvisited_q,
    estimated_q,
    expand,
    run_search,
    select_child,
)
from deskzero.search.tree import mark_terminal

from conftest import random_playout


def make_node(priors=None, visits=None, values=None, n=2, player=0):
    node = SearchNode(player)
    logits = np.zeros(n) if priors is None else np.log(np.asarray(priors))
    expand(node, logits, list(range(n)))
    if visits is not None:
        node.edge_visits[:] = visits
    if values is not None:
        node.edge_values[:] = values
    return node


class TestExpand:
    def test_uniform_logits_four_actions(self):
        node = make_node(n=4)
        assert np.allclose(node.priors, 0.25)
        assert np.all(node.edge_visits == 0)
        assert np.all(node.edge_values == 0.0)

    def test_illegal_mass_renormalized(self):
        node = SearchNode(0)
        logits = np.array([2.0, 1.0, 0.0, -1.0, 5.0])
        expand(node, logits, [0, 1, 3])  # actions 2 and 4 illegal
        assert node.priors.sum() == pytest.approx(1.0, abs=1e-12)
        direct = np.exp(logits[[0, 1, 3]])
        assert np.allclose(node.priors, direct / direct.sum())

    def test_double_expansion_is_contract_error(self):
        node = make_node()
        with pytest.raises(ContractViolation):
            expand(node, np.zeros(2), [0, 1])


class TestEstimatedQ:
    def test_atari_no_visits_is_one(self):
        node = make_node(n=3)
        assert estimated_q(node, "atari") == 1.0

    def test_board_no_visits_is_zero(self):
        node = make_node(n=3)
        assert estimated_q(node, "board") == 0.0

    def test_board_two_visited(self):
        node = make_node(n=3, visits=[2, 1, 0], values=[1.0, -0.3, 0.0])
        # Visited Q values are {0.5, -0.3}; (0.5 - 0.3) / (2 + 1)
        assert estimated_q(node, "board") == pytest.approx(0.2 / 3)

    def test_atari_mean_of_visited(self):
        node = make_node(n=3, visits=[2, 1, 0], values=[1.0, -0.3, 0.0])
        assert estimated_q(node, "atari") == pytest.approx((0.5 - 0.3) / 2)

    def test_off_mode(self):
        node = make_node(n=3, visits=[1, 0, 0], values=[0.9, 0, 0])
        assert estimated_q(node, "off") == 0.0

    def test_matches_brute_force_on_random_trees(self):
        rng = np.random.default_rng(12)
        for _ in range(1000):
            n = int(rng.integers(1, 10))
            visits = rng.integers(0, 5, size=n)
            q = rng.uniform(-1, 1, size=n)
            values = q * visits
            node = make_node(n=n, visits=visits, values=values)
            visited = visits > 0
            n_sigma = int(visited.sum())
            q_sigma = float(q[visited].sum())  # independent re-summation
            assert estimated_q(node, "board") == pytest.approx(q_sigma / (n_sigma + 1))
            expected_atari = q_sigma / n_sigma if n_sigma else 1.0
            assert estimated_q(node, "atari") == pytest.approx(expected_atari)


class TestSelectChild:
    def test_all_unvisited_board_mode_picks_highest_prior(self):
        node = make_node(priors=[0.2, 0.5, 0.3])
        cfg = SearchConfig(estimated_q_mode="board")
        assert select_child(node, cfg) == 1

    def test_direct_puct_evaluation(self):
        # Two children, equal priors, one visited with Q = -1.
        node = make_node(priors=[0.5, 0.5], visits=[1, 0], values=[-1.0, 0.0])
        cfg = SearchConfig(c_puct=1.25, estimated_q_mode="board")
        # Child 1: -1 + 1.25 * 0.5 * 1/2 = -0.6875
        # Child 2 (unvisited): Q). = -1/2, score -0.5 + 1.25 * 0.5 * 1 = 0.125
        assert select_child(node, cfg) == 1

    def test_prior_rescaling_preserves_argmax(self):
        logits = np.array([1.0, 0.3, -0.5, 0.2])
        node_a = SearchNode(0)
        expand(node_a, logits, range(4))
        node_b = SearchNode(0)
        expand(node_b, logits + 7.3, range(4))  # softmax-invariant shift
        for node in (node_a, node_b):
            node.edge_visits[:] = [3, 1, 0, 2]
            node.edge_values[:] = [0.6, -0.2, 0.0, 0.4]
        cfg = SearchConfig(estimated_q_mode="board")
        assert select_child(node_a, cfg) == select_child(node_b, cfg)

    def test_argmax_invariant_to_constant_q_shift_when_all_visited(self):
        rng = np.random.default_rng(5)
        cfg = SearchConfig(estimated_q_mode="board")
        for _ in range(50):
            n = int(rng.integers(2, 6))
            node = make_node(
                priors=rng.dirichlet(np.ones(n)),
                visits=rng.integers(1, 6, size=n),
                values=None,
                n=n,
            )
            q = rng.uniform(-1, 1, size=n)
            node.edge_values[:] = q * node.edge_visits
            first = select_child(node, cfg)
            node.edge_values[:] = (q + 0.37) * node.edge_visits
            assert select_child(node, cfg) == first

    def test_unexpanded_node_is_contract_error(self):
        with pytest.raises(ContractViolation):
            select_child(SearchNode(0), SearchConfig())

    def test_tie_breaks_by_prior_then_index(self):
        node = make_node(priors=[0.3, 0.4, 0.3])
        cfg = SearchConfig(estimated_q_mode="board")
        assert select_child(node, cfg) == 1
        node2 = make_node(priors=[0.35, 0.35, 0.3])
        assert select_child(node2, cfg) == 0


class TestBackpropagate:
    def test_two_player_sign_alternation(self):
        cfg = SearchConfig(two_player=True)
        tree = SearchTree(cfg)
        root = SearchNode(0)
        tree.add_node(root)
        expand(root, np.zeros(2), [0, 1])
        mid = SearchNode(1)
        mid_id = tree.add_node(mid)
        expand(mid, np.zeros(2), [0, 1])
        root.child_ids[0] = mid_id
        leaf = SearchNode(0)
        leaf_id = tree.add_node(leaf)
        mid.child_ids[1] = leaf_id
        path = [(0, 0), (mid_id, 1)]
        backpropagate(tree, path, leaf_id, +1.0, cfg)
        assert root.edge_values[0] == +1.0   # root player == leaf player
        assert mid.edge_values[1] == -1.0    # opponent in between
        assert root.edge_visits[0] == 1 and mid.edge_visits[1] == 1

    def test_single_player_discounted_accumulation(self):
        cfg = SearchConfig(two_player=False, discount=0.997)
        tree = SearchTree(cfg)
        root = SearchNode(0)
        tree.add_node(root)
        expand(root, np.zeros(2), [0, 1])
        root.edge_rewards[0] = 1.0
        leaf = SearchNode(0)
        leaf_id = tree.add_node(leaf)
        root.child_ids[0] = leaf_id
        backpropagate(tree, [(0, 0)], leaf_id, 2.0, cfg)
        assert root.edge_values[0] == pytest.approx(1.0 + 0.997 * 2.0)

    def test_root_visits_count_simulations(self):
        env = make_environment("tictactoe")
        cfg = SearchConfig(two_player=True, planning="env")
        result = run_search(env, env.initial_state(), OracleEvaluator(env), 25, cfg)
        assert result.visit_counts.sum() == 24  # root expansion was simulation 1


class EnvApplyCounter:
    """Wrapper recording env.apply calls (planning-isolation checks)."""

    def __init__(self, env):
        self.env = env
        self.apply_calls = 0

    def __getattr__(self, name):
        return getattr(self.env, name)

    def apply(self, state, action):
        self.apply_calls += 1
        return self.env.apply(state, action)


class HashEvaluator:
    """Deterministic stub network with exact batch-invariant outputs.

    Values are derived from a hash of the state key, so "model" planning
    backed by true transitions must match "env" planning move for move.
    """

    def __init__(self, env, two_player=True):
        self.env = env
        self.two_player = two_player

    def _value(self, state):
        h = hash(self.env.state_key(state)) % 1000 / 1000.0
        value = 2.0 * h - 1.0
        return value

    def _logits(self, state):
        rng = np.random.default_rng(abs(hash(self.env.state_key(state))) % (2 ** 32))
        return rng.random(self.env.action_space_size)

    def evaluate_batch(self, requests):
        out = []
        for request in requests:
            if request.kind == "initial":
                state = request.state
                out.append(EvalResponse(
                    policy_logits=self._logits(state),
                    value=self._value(state),
                    hidden=state,
                ))
            else:
                state, reward = self.env.apply(request.hidden, request.action)
                outcome = self.env.terminal_outcome(state)
                if outcome.terminal:
                    player = self.env.to_move(state)
                    value = outcome.z * (1.0 if player == 0 else -1.0)
                    out.append(EvalResponse(
                        policy_logits=np.zeros(self.env.action_space_size),
                        value=value, reward=reward, hidden=state, legal_actions=(),
                    ))
                else:
                    out.append(EvalResponse(
                        policy_logits=self._logits(state),
                        value=self._value(state),
                        reward=reward,
                        hidden=state,
                        legal_actions=self.env.legal_actions(state),
                    ))
        return out


class TestRunSearch:
    def test_single_simulation_only_expands_root(self, ttt):
        cfg = SearchConfig(two_player=True, planning="env")
        evaluator = OracleEvaluator(ttt)
        result = run_search(ttt, ttt.initial_state(), evaluator, 1, cfg)
        assert result.visit_counts.sum() == 0
        assert result.root_value == 0.0  # oracle value of the initial position

    def test_oracle_evaluator_finds_winning_move(self, ttt):
        state = ttt.initial_state()
        for action in (0, 3, 1, 4):
            state, _ = ttt.apply(state, action)
        cfg = SearchConfig(two_player=True, planning="env")
        result = run_search(ttt, state, OracleEvaluator(ttt), 50, cfg)
        assert result.selected_action == 2

    def test_model_planning_never_touches_env_apply(self, ttt):
        counter = EnvApplyCounter(ttt)
        model_env = make_environment("tictactoe")
        evaluator = HashEvaluator(model_env)  # its own env for dynamics
        cfg = SearchConfig(two_player=True, planning="model")
        run_search(counter, counter.initial_state(), evaluator, 40, cfg)
        assert counter.apply_calls == 0

    def test_env_and_perfect_model_planning_agree_on_visits(self, ttt):
        evaluator = HashEvaluator(ttt)
        state = ttt.initial_state()
        for n in (1, 2, 10, 40):
            env_result = run_search(
                ttt, state, evaluator, n, SearchConfig(two_player=True, planning="env")
            )
            model_result = run_search(
                ttt, state, evaluator, n, SearchConfig(two_player=True, planning="model")
            )
            assert np.array_equal(env_result.visit_counts, model_result.visit_counts)
            assert env_result.root_value == pytest.approx(model_result.root_value)
            assert env_result.selected_action == model_result.selected_action

    def test_visit_conservation_at_every_node(self, ttt):
        cfg = SearchConfig(two_player=True, planning="env")
        from deskzero.search.mcts import _root_setup, simulate
        from deskzero.search import drive

        def gen():
            tree = yield from _root_setup(ttt, ttt.initial_state(), cfg, None)
            for _ in range(60):
                yield from simulate(ttt, tree, cfg)
            return tree

        tree = drive([gen()], HashEvaluator(ttt))[0]
        for node in tree.nodes:
            if node.expanded and not node.terminal:
                assert node.visit_count == 1 + node.edge_visits.sum()

    def test_q_bounds_two_player(self, ttt):
        cfg = SearchConfig(two_player=True, planning="env")
        rng = np.random.default_rng(0)
        state = ttt.initial_state()
        for action in (4, 0):
            state, _ = ttt.apply(state, action)
        from deskzero.search.mcts import _root_setup, simulate
        from deskzero.search import drive

        def gen():
            tree = yield from _root_setup(ttt, state, cfg, rng)
            for _ in range(80):
                yield from simulate(ttt, tree, cfg)
            return tree

        tree = drive([gen()], HashEvaluator(ttt))[0]
        for node in tree.nodes:
            if node.expanded and not node.terminal:
                q = node.child_q()
                visited = node.edge_visits > 0
                assert np.all(q[visited] <= 1.0 + 1e-12)
                assert np.all(q[visited] >= -1.0 - 1e-12)

    def test_terminal_root_rejected(self, ttt):
        state = ttt.initial_state()
        for action in (0, 3, 1, 4, 2):
            state, _ = ttt.apply(state, action)
        cfg = SearchConfig(two_player=True, planning="env")
        with pytest.raises(ContractViolation):
            run_search(ttt, state, OracleEvaluator(ttt), 5, cfg)

    def test_batched_driver_answers_every_request_once(self, ttt):
        from deskzero.search import drive, search_gen

        counting = CountingEvaluator(HashEvaluator(ttt))
        gens = [
            search_gen(ttt, ttt.initial_state(), 20, SearchConfig(two_player=True))
            for _ in range(8)
        ]
        results = drive(gens, counting)
        assert len(results) == 8
        assert max(counting.batch_sizes) <= 8
        assert counting.requests_seen == counting.responses_sent


class TestSearchOracleSweep:
    def test_optimal_move_on_sampled_positions(self, ttt):
        """PUCT with a perfect evaluator must play optimally everywhere."""
        oracle = MinimaxOracle(ttt)
        evaluator = OracleEvaluator(ttt)
        cfg = SearchConfig(two_player=True, planning="env")
        rng = np.random.default_rng(123)
        checked = 0
        while checked < 40:
            states, _ = random_playout(ttt, rng)
            state = states[int(rng.integers(len(states) - 1))]
            if ttt.terminal_outcome(state).terminal:
                continue
            result = run_search(ttt, state, evaluator, 50, cfg)
            assert result.selected_action in oracle.best_actions(state)
            checked += 1
