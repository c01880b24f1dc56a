"""Shared test oracles: finite differences and brute-force enumeration.

These stay independent of the library paths they check: finite differences
re-run the forward pass, and the trajectory enumerator walks the raw
environment API without touching the dynamic-programming oracle.
"""

import numpy as np
import pytest

from gflowlab.policies import forward_probs_np


def finite_difference_grads(f, store, h=1e-5):
    """Central differences of scalar f() with respect to store.values."""
    base = store.values.copy()
    grads = np.zeros_like(base)
    for i in range(len(base)):
        store.values[i] = base[i] + h
        up = f()
        store.values[i] = base[i] - h
        down = f()
        store.values[i] = base[i]
        grads[i] = (up - down) / (2.0 * h)
    store.values[:] = base
    return grads


def assert_grads_close(actual, expected, rel=1e-4, floor=1e-8):
    """Relative comparison with an absolute floor for near-zero gradients."""
    actual = np.asarray(actual)
    expected = np.asarray(expected)
    scale = np.maximum(np.abs(expected), 1e-6)
    err = np.abs(actual - expected)
    ok = (err / scale < rel) | (err < floor)
    assert ok.all(), f"max rel err {np.max(err / scale)}"


def enumerate_trajectories(env):
    """All complete trajectories as (states, actions) pairs, by DFS."""
    out = []
    stack = [([env.initial_state()], [])]
    while stack:
        states, actions = stack.pop()
        for a in env.forward_actions(states[-1]):
            if a == env.exit_action:
                out.append((states, actions + [a]))
            else:
                stack.append((states + [env.apply(states[-1], a)], actions + [a]))
    return out


def brute_force_terminal_distribution(policy, env):
    """Terminal probabilities by exhaustive path enumeration."""
    totals = {}
    for states, actions in enumerate_trajectories(env):
        probs = forward_probs_np(policy, env, states)
        p = 1.0
        for row, a in enumerate(actions):
            p *= probs[row, a]
        terminal = states[-1]
        totals[terminal] = totals.get(terminal, 0.0) + p
    return totals


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
