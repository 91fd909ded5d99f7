import numpy as np
import pytest

from deskzero.envs import make_environment


@pytest.fixture
def ttt():
    return make_environment("tictactoe")


@pytest.fixture
def othello6():
    return make_environment("othello6")


@pytest.fixture
def othello8():
    return make_environment("othello8")


@pytest.fixture
def grid():
    return make_environment("gridreward")


def random_playout(env, rng, max_moves=500):
    """States and moves of one uniformly random game."""
    state = env.initial_state()
    states = [state]
    moves = []
    while not env.terminal_outcome(state).terminal and len(moves) < max_moves:
        legal = env.legal_actions(state)
        action = legal[int(rng.integers(len(legal)))]
        state, _ = env.apply(state, action)
        states.append(state)
        moves.append(action)
    return states, moves
