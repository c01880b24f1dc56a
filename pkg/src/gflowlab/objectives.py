"""Trajectory-balance objective and flow-matching residual checks.

Conventions: the forward product includes the exit step; the backward
product covers transitions between trajectory states only (the sink step is
excluded). Batch losses are averaged over trajectories before backward.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .env import Environment, Trajectory
from .policies import MASK_OFFSET, masked_log_softmax_np


def _forward_pack(env: Environment, trajectories: list[Trajectory]):
    states, masks, chosen, segments = [], [], [], []
    for t_id, traj in enumerate(trajectories):
        for s, a in zip(traj.states, traj.actions):
            states.append(s)
            masks.append(env.forward_mask(s))
            chosen.append(a)
            segments.append(t_id)
    return (env.encode_batch(states), np.stack(masks),
            np.asarray(chosen), np.asarray(segments))


def _backward_pack(env: Environment, trajectories: list[Trajectory]):
    states, masks, chosen, segments = [], [], [], []
    for t_id, traj in enumerate(trajectories):
        for i in range(1, len(traj.states)):
            s = traj.states[i]
            states.append(s)
            masks.append(env.backward_mask(s))
            chosen.append(traj.actions[i - 1])
            segments.append(t_id)
    if not states:
        return None
    return (env.encode_batch(states), np.stack(masks),
            np.asarray(chosen), np.asarray(segments))


def _log_rewards(trajectories, log_rewards) -> np.ndarray:
    if log_rewards is None:
        return np.array([t.log_reward for t in trajectories])
    return np.asarray(log_rewards, dtype=np.float64)


def tb_delta(tape: ad.Tape, policy, env: Environment,
             trajectories: list[Trajectory], log_rewards=None) -> ad.Var:
    """Differentiable signed residual logZ + sum logPF - logR - sum logPB, per trajectory."""
    n = len(trajectories)
    enc, masks, chosen, segments = _forward_pack(env, trajectories)
    logits = policy.forward_logits(tape, enc)
    offsets = tape.constant(np.where(masks, 0.0, MASK_OFFSET))
    masked = logits + offsets
    log_probs = masked - ad.logsumexp(masked, axis=1, keepdims=True)
    picked = ad.take_pairs(log_probs, np.arange(len(chosen)), chosen)
    sum_forward = ad.segment_sum(picked, segments, n)

    log_r = tape.constant(_log_rewards(trajectories, log_rewards))
    log_z = policy.store.leaf(tape, "logZ")
    delta = sum_forward + log_z - log_r

    if not policy.is_tree:
        pack = _backward_pack(env, trajectories)
        if pack is not None:
            enc_b, masks_b, chosen_b, segments_b = pack
            logits_b = policy.backward_logits(tape, enc_b)
            offsets_b = tape.constant(np.where(masks_b, 0.0, MASK_OFFSET))
            masked_b = logits_b + offsets_b
            log_probs_b = masked_b - ad.logsumexp(masked_b, axis=1, keepdims=True)
            picked_b = ad.take_pairs(log_probs_b, np.arange(len(chosen_b)), chosen_b)
            delta = delta - ad.segment_sum(picked_b, segments_b, n)
    return delta


def tb_loss_batch(policy, env: Environment, trajectories: list[Trajectory],
                  log_rewards=None) -> ad.Var:
    """Mean squared residual over the batch, as one differentiable node."""
    tape = ad.Tape()
    return ad.mean(ad.square(tb_delta(tape, policy, env, trajectories, log_rewards)))


def tb_loss(trajectory: Trajectory, policy, env: Environment) -> ad.Var:
    """Squared trajectory-balance residual of a single trajectory."""
    tape = ad.Tape()
    delta = tb_delta(tape, policy, env, [trajectory])
    return ad.vsum(ad.square(delta))


def tb_delta_np(policy, env: Environment, trajectories: list[Trajectory],
                log_rewards=None) -> np.ndarray:
    """Tape-free signed residuals; used for detached loss values."""
    n = len(trajectories)
    enc, masks, chosen, segments = _forward_pack(env, trajectories)
    log_probs = masked_log_softmax_np(policy.forward_logits_np(enc), masks)
    sum_forward = np.zeros(n)
    np.add.at(sum_forward, segments, log_probs[np.arange(len(chosen)), chosen])

    delta = sum_forward + policy.log_z - _log_rewards(trajectories, log_rewards)

    if not policy.is_tree:
        pack = _backward_pack(env, trajectories)
        if pack is not None:
            enc_b, masks_b, chosen_b, segments_b = pack
            log_probs_b = masked_log_softmax_np(policy.backward_logits_np(enc_b), masks_b)
            sum_backward = np.zeros(n)
            np.add.at(sum_backward, segments_b,
                      log_probs_b[np.arange(len(chosen_b)), chosen_b])
            delta = delta - sum_backward
    return delta


def tb_loss_values_np(policy, env: Environment, trajectories: list[Trajectory],
                      log_rewards=None) -> np.ndarray:
    """Detached per-trajectory loss values."""
    return tb_delta_np(policy, env, trajectories, log_rewards) ** 2


def flow_matching_residual(flow: dict, env: Environment, s) -> float:
    """Absolute conservation violation of an edge-flow table at state ``s``.

    The table maps (parent_state, action) to a non-negative flow; the exit
    edge is keyed by the exit action. Outflow includes the exit edge, and at
    terminable states the exit edge is additionally checked against R.
    """
    inflow = sum(flow.get((parent, a), 0.0) for parent, a in env.backward_transitions(s))
    outflow = sum(flow.get((s, a), 0.0) for a in env.forward_actions(s))
    residual = abs(inflow - outflow)
    if env.can_terminate(s):
        exit_flow = flow.get((s, env.exit_action), 0.0)
        residual += abs(exit_flow - np.exp(env.log_reward(s)))
    return float(residual)
