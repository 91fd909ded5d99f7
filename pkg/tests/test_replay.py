"""Replay buffer: storage, n-step returns, sampling, unroll targets."""
import numpy as np
import pytest

from deskzero.envs import make_environment
from deskzero.envs.base import Outcome
from deskzero.errors import ContractViolation
from deskzero.replay import (
    ReplayBuffer,
    Trajectory,
    make_unroll_targets,
    n_step_return,
    trajectory_from_record,
    trajectory_to_record,
)


def single_player_traj(rewards, root_values, action_space=4, env_id="gridreward"):
    n = len(rewards)
    return Trajectory(
        env_id=env_id,
        observations=[np.full(3, float(t)) for t in range(n)],
        actions=[t % action_space for t in range(n)],
        policies=[np.full(action_space, 1.0 / action_space) for _ in range(n)],
        root_values=[float(v) for v in root_values],
        rewards=[float(r) for r in rewards],
        players=[0] * n,
        outcome=Outcome(terminal=True, episode_return=float(sum(rewards))),
    )


def two_player_traj(n, z, action_space=9, env_id="tictactoe"):
    return Trajectory(
        env_id=env_id,
        observations=[np.zeros(3) for _ in range(n)],
        actions=list(range(n)),
        policies=[np.full(action_space, 1.0 / action_space) for _ in range(n)],
        root_values=[0.0] * n,
        rewards=[0.0] * n,
        players=[t % 2 for t in range(n)],
        outcome=Outcome(terminal=True, z=float(z)),
    )


def frame_buffer(capacity=1000, **kw):
    defaults = dict(
        unit="frames", two_player=False, n_steps=5, discount=0.997,
        prioritized=True, action_space_size=4,
    )
    defaults.update(kw)
    return ReplayBuffer(capacity, **defaults)


def game_buffer(capacity=10, **kw):
    defaults = dict(
        unit="games", two_player=True, n_steps=5, discount=1.0,
        prioritized=False, action_space_size=9,
    )
    defaults.update(kw)
    return ReplayBuffer(capacity, **defaults)


class TestPush:
    def test_push_into_empty(self):
        buffer = game_buffer(capacity=2)
        buffer.push(two_player_traj(5, 1.0))
        assert len(buffer) == 1

    def test_fifo_eviction_at_game_capacity(self):
        buffer = game_buffer(capacity=2)
        first = two_player_traj(5, 1.0)
        buffer.push(first)
        buffer.push(two_player_traj(6, -1.0))
        buffer.push(two_player_traj(7, 0.0))
        assert len(buffer) == 2
        assert first not in buffer.trajectories

    def test_frame_capacity_evicts_until_total_fits(self):
        buffer = frame_buffer(capacity=25)
        for _ in range(4):
            buffer.push(single_player_traj([1.0] * 10, [0.0] * 10))
        assert buffer.total_frames <= 25
        assert len(buffer) == 2

    def test_malformed_trajectory_rejected(self):
        buffer = game_buffer()
        bad = two_player_traj(4, 1.0)
        bad.policies[1] = np.array([0.5] * 9)  # does not sum to 1
        with pytest.raises(ContractViolation):
            buffer.push(bad)

    def test_nonzero_midgame_reward_rejected_two_player(self):
        buffer = game_buffer()
        bad = two_player_traj(4, 1.0)
        bad.rewards[1] = 0.5
        with pytest.raises(ContractViolation):
            buffer.push(bad)

    def test_priorities_initialized_from_value_error(self):
        buffer = frame_buffer()
        traj = single_player_traj([1, 0, 0], [0.5, 0.1, 0.2])
        buffer.push(traj)
        z0 = n_step_return(traj, 0, 5, 0.997)
        assert traj.priorities[0] == pytest.approx(abs(0.5 - z0) + 1e-6)


class TestNStepReturn:
    def test_bootstrap_after_five_steps(self):
        traj = single_player_traj([1, 0, 0, 0, 0, 0], [0, 0, 0, 0, 0, 2.0])
        z = n_step_return(traj, 0, 5, 0.997)
        assert z == pytest.approx(1.0 + 0.997 ** 5 * 2.0)
        assert z == pytest.approx(2.97018, abs=1e-4)

    def test_truncates_at_terminal(self):
        traj = single_player_traj([0, 3], [0.0, 0.0])
        assert n_step_return(traj, 0, 5, 0.997) == pytest.approx(0.997 * 3.0)

    def test_two_player_resigns_by_player(self):
        traj = two_player_traj(4, z=1.0)
        assert n_step_return(traj, 0, 5, 1.0) == 1.0
        assert n_step_return(traj, 1, 5, 1.0) == -1.0
        assert n_step_return(traj, 2, 5, 1.0) == 1.0

    def test_long_horizon_equals_monte_carlo_tail(self):
        rng = np.random.default_rng(0)
        rewards = rng.uniform(0, 2, size=8).tolist()
        traj = single_player_traj(rewards, [9.9] * 8)  # bootstrap must be unused
        for t in range(8):
            expected = sum(
                0.997 ** j * rewards[t + j] for j in range(len(rewards) - t)
            )
            assert n_step_return(traj, t, 50, 0.997) == pytest.approx(expected)


class TestSampling:
    def test_empty_buffer_errors(self):
        with pytest.raises(ContractViolation):
            frame_buffer().sample_positions(4, 1.0, 0.4, np.random.default_rng(0))

    def test_equal_priorities_sample_uniformly(self):
        buffer = frame_buffer()
        traj = single_player_traj([1.0] * 4, [0.0] * 4)
        buffer.push(traj)
        for traj_obj in buffer.trajectories:
            traj_obj.priorities[:] = 1.0
        rng = np.random.default_rng(1)
        picks, _ = buffer.sample_positions(100_000, 1.0, 0.4, rng)
        counts = np.bincount([t for _, t in picks], minlength=4)
        expected = 25_000
        sigma = np.sqrt(100_000 * 0.25 * 0.75)
        assert np.all(np.abs(counts - expected) < 3 * sigma)

    def test_alpha_zero_ignores_priorities(self):
        buffer = frame_buffer()
        traj = single_player_traj([1.0, 0.0], [0.0, 0.0])
        buffer.push(traj)
        traj.priorities[:] = [100.0, 1.0]
        rng = np.random.default_rng(2)
        picks, _ = buffer.sample_positions(50_000, 0.0, 0.4, rng)
        count0 = sum(1 for _, t in picks if t == 0)
        sigma = np.sqrt(50_000 * 0.25)
        assert abs(count0 - 25_000) < 3 * sigma

    def test_three_to_one_priorities(self):
        buffer = frame_buffer()
        traj = single_player_traj([1.0, 0.0], [0.0, 0.0])
        buffer.push(traj)
        traj.priorities[:] = [3.0, 1.0]
        rng = np.random.default_rng(3)
        picks, _ = buffer.sample_positions(100_000, 1.0, 0.4, rng)
        count0 = sum(1 for _, t in picks if t == 0)
        sigma = np.sqrt(100_000 * 0.75 * 0.25)
        assert abs(count0 - 75_000) < 3 * sigma

    def test_importance_weights_in_unit_interval(self):
        buffer = frame_buffer()
        rng = np.random.default_rng(4)
        for _ in range(5):
            rewards = rng.uniform(0, 2, size=6).tolist()
            values = rng.uniform(0, 2, size=6).tolist()
            buffer.push(single_player_traj(rewards, values))
        _, weights = buffer.sample_positions(256, 1.0, 0.4, rng)
        assert np.all(weights > 0.0) and np.all(weights <= 1.0)

    def test_board_mode_weights_are_one(self):
        buffer = game_buffer()
        buffer.push(two_player_traj(5, 1.0))
        _, weights = buffer.sample_positions(32, 1.0, 0.4, np.random.default_rng(5))
        assert np.all(weights == 1.0)

    def test_priority_structure_resums_after_interleaving(self):
        buffer = frame_buffer(capacity=40)
        rng = np.random.default_rng(6)
        for round_idx in range(10):
            rewards = rng.uniform(0, 2, size=8).tolist()
            buffer.push(single_player_traj(rewards, rng.uniform(0, 2, size=8).tolist()))
            if round_idx % 2:
                buffer.sample_positions(16, 1.0, 0.4, rng)
            expected = sum(
                float((t.priorities ** 1.0).sum()) for t in buffer.trajectories
            )
            assert buffer.priority_total(1.0) == pytest.approx(expected, abs=1e-6)

    def test_sampling_never_returns_evicted(self):
        buffer = game_buffer(capacity=2)
        keep_a = two_player_traj(5, 1.0)
        keep_b = two_player_traj(5, -1.0)
        gone = two_player_traj(5, 0.0)
        buffer.push(gone)
        buffer.push(keep_a)
        buffer.push(keep_b)
        picks, _ = buffer.sample_positions(200, 1.0, 0.4, np.random.default_rng(7))
        assert all(t is not gone for t, _ in picks)


class TestUnrollTargets:
    def test_k_zero(self):
        traj = single_player_traj([1, 2, 3], [0.1, 0.2, 0.3])
        rng = np.random.default_rng(0)
        target = make_unroll_targets(traj, 1, 0, 5, 0.997, rng, 4)
        assert target.actions.shape == (0,)
        assert target.policies.shape == (1, 4)
        assert target.values[0] == pytest.approx(n_step_return(traj, 1, 5, 0.997))

    def test_terminal_position_gets_absorbing_tail(self):
        traj = single_player_traj([1, 2, 3], [0.1, 0.2, 0.3])
        rng = np.random.default_rng(0)
        target = make_unroll_targets(traj, 2, 5, 5, 0.997, rng, 4)
        assert target.absorbing.tolist() == [False, True, True, True, True, True]
        assert np.all(target.values[1:] == 0.0)
        assert np.all(target.rewards[1:] == 0.0)
        for k in range(1, 6):
            assert np.allclose(target.policies[k], 0.25)
        assert np.all((target.actions >= 0) & (target.actions < 4))

    def test_midgame_targets_match_hand_assembly(self):
        rewards = [1.0, 0.0, 2.0, 0.0, 0.0, 5.0, 0.0]
        values = [0.3, 0.1, 0.6, 0.2, 0.9, 0.4, 0.0]
        traj = single_player_traj(rewards, values)
        rng = np.random.default_rng(1)
        t = 1
        target = make_unroll_targets(traj, t, 3, 2, 0.9, rng, 4)
        for k in range(4):
            expected_value = 0.0
            pos = t + k
            for j in range(2):
                if pos + j < len(rewards):
                    expected_value += 0.9 ** j * rewards[pos + j]
            if pos + 2 < len(rewards):
                expected_value += 0.9 ** 2 * values[pos + 2]
            assert target.values[k] == pytest.approx(expected_value)
        assert target.actions.tolist() == [traj.actions[t], traj.actions[t + 1], traj.actions[t + 2]]
        assert target.rewards.tolist() == [rewards[t], rewards[t + 1], rewards[t + 2]]

    def test_sample_batch_assembles_targets(self):
        buffer = frame_buffer()
        buffer.push(single_player_traj([1.0] * 6, [0.5] * 6))
        batch = buffer.sample_batch(8, 1.0, 0.4, np.random.default_rng(2), k_steps=5)
        assert len(batch) == 8
        for target in batch:
            assert target.policies.shape == (6, 4)
            assert target.actions.shape == (5,)


class TestRecordRoundTrip:
    def test_trajectory_record_round_trip_via_env(self):
        env = make_environment("tictactoe")
        state = env.initial_state()
        moves = [0, 1, 4, 2, 8]  # first player wins on the main diagonal
        observations, players = [], []
        for move in moves:
            observations.append(env.observe(state))
            players.append(env.to_move(state))
            state, _ = env.apply(state, move)
        traj = Trajectory(
            env_id="tictactoe",
            observations=observations,
            actions=moves,
            policies=[np.eye(9)[m] for m in moves],
            root_values=[0.1 * i for i in range(len(moves))],
            rewards=[0.0] * len(moves),
            players=players,
            outcome=env.terminal_outcome(state),
        )
        record = trajectory_to_record(traj)
        back = trajectory_from_record(env, record)
        assert back.actions == traj.actions
        assert back.root_values == traj.root_values
        assert back.players == traj.players
        assert back.outcome == traj.outcome
        for a, b in zip(back.observations, traj.observations):
            assert np.array_equal(a, b)
