"""Exact distribution oracles over enumerable environments.

A dynamic program pushes unit mass from the source along forward action
probabilities in topological order; the probability of terminating at a
state is the mass routed through its exit action. These oracles back the
mean-L1 metric and the analytic convergence checks.
"""

from __future__ import annotations

import numpy as np

from .env import DEFAULT_ENUMERATION_CAP, Environment, EnvState
from .policies import SamplerMod, masked_probs_np


def _policy_probs_chunked(policy, env, states, chunk: int = 8192) -> np.ndarray:
    out = np.empty((len(states), env.n_actions))
    for start in range(0, len(states), chunk):
        batch = states[start:start + chunk]
        logits = policy.forward_logits_np(env.encode_batch(batch))
        mask = np.stack([env.forward_mask(s) for s in batch])
        out[start:start + chunk] = masked_probs_np(logits, mask, SamplerMod())
    return out


def exact_terminal_distribution(policy, env: Environment,
                                cap: int = DEFAULT_ENUMERATION_CAP
                                ) -> dict[EnvState, float]:
    """Terminal-state probabilities induced by the policy's forward rules."""
    states = env.enumerate_states(cap)
    index = {s: i for i, s in enumerate(states)}
    probs = _policy_probs_chunked(policy, env, states)
    mass = np.zeros(len(states))
    mass[index[env.initial_state()]] = 1.0
    exit_action = env.exit_action
    terminal: dict[EnvState, float] = {}
    for i, s in enumerate(states):
        m = mass[i]
        row_mask = env.forward_mask(s)
        if row_mask[exit_action]:
            terminal[s] = m * probs[i, exit_action]
        if m == 0.0:
            continue
        for a in np.flatnonzero(row_mask[:-1]):
            mass[index[env.apply(s, int(a))]] += m * probs[i, a]
    total = sum(terminal.values())
    if abs(total - 1.0) > 1e-9:
        raise RuntimeError(f"terminal mass sums to {total}, expected 1")
    return terminal


def target_distribution(env: Environment,
                        cap: int = DEFAULT_ENUMERATION_CAP) -> dict[EnvState, float]:
    """Reward-proportional distribution over terminable states."""
    states = [s for s in env.enumerate_states(cap) if env.can_terminate(s)]
    log_r = np.array([env.log_reward(s) for s in states])
    log_r -= log_r.max()
    weights = np.exp(log_r)
    weights /= weights.sum()
    return dict(zip(states, weights))
