"""Auxiliary reward shaping, RND behavior and batch assembly."""

import math

import numpy as np
import pytest

from gflowlab import autodiff as ad
from gflowlab.env import Trajectory
from gflowlab.envs import ChainEnv, HypergridEnv
from gflowlab.errors import ConfigMismatch, ShapeMismatch
from gflowlab.explorers import (ExplorerConfig, RndConfig, RndState,
                                adaptive_teachers_log_reward,
                                lggfn_aux_log_reward, make_behavior_batch,
                                rnd_bonus, sagfn_aux_log_reward)
from gflowlab.objectives import tb_loss_batch, tb_loss_values_np
from gflowlab.optim import make_optimizer, step
from gflowlab.oracle import exact_terminal_distribution
from gflowlab.policies import SamplerMod, TabularChainPolicy, MlpPolicy, sample_batch

from test_gfn_core import chain_analytic_policy, chain_trajectory


def test_lggfn_reward_arithmetic():
    assert lggfn_aux_log_reward(math.log(1.0), 2.0, 1.0) == pytest.approx(math.log(3.0))
    assert lggfn_aux_log_reward(math.log(5.0), 123.0, 0.0) == math.log(5.0)
    assert lggfn_aux_log_reward(math.log(5.0), 0.0, 3.0) == math.log(5.0)


def test_lggfn_dominance_random_inputs(rng):
    log_r = rng.normal(scale=5.0, size=10 ** 4)
    losses = rng.exponential(scale=10.0, size=10 ** 4)
    lams = rng.uniform(0.0, 4.0, size=10 ** 4)
    for lr, lv, lam in zip(log_r, losses, lams):
        out = lggfn_aux_log_reward(lr, lv, lam)
        assert out >= lr
        if lam * lv == 0.0:
            assert out == lr
        else:
            assert out > lr


def test_adaptive_teachers_formula():
    cfg = ExplorerConfig(kind="adaptive_teachers")
    log_r = math.log(2.0)
    assert adaptive_teachers_log_reward(0.0, log_r, cfg) == \
        pytest.approx(math.log(cfg.at_eps) + 0.5 * log_r)
    plus = adaptive_teachers_log_reward(1.0, log_r, cfg)
    minus = adaptive_teachers_log_reward(-1.0, log_r, cfg)
    assert plus == pytest.approx(math.log(cfg.at_eps + 20.0) + 0.5 * log_r)
    assert minus == pytest.approx(math.log(cfg.at_eps + 1.0) + 0.5 * log_r)
    assert plus > minus
    near_zero = ExplorerConfig(kind="adaptive_teachers", at_alpha=0.0, at_eps=1e-300)
    assert adaptive_teachers_log_reward(2.0, log_r, near_zero) == \
        pytest.approx(math.log(4.0 * 20.0))


# -- RND -----------------------------------------------------------------------

def test_rnd_bonus_zero_when_predictor_equals_target():
    rnd = RndState(4, RndConfig(hidden=(8,), output_dim=5), seed=0)
    rnd.predictor.values[:] = rnd.target.values
    assert rnd_bonus(rnd, np.ones(4)) == 0.0


def test_rnd_shape_mismatch():
    rnd = RndState(4, RndConfig(), seed=0)
    with pytest.raises(ShapeMismatch):
        rnd_bonus(rnd, np.ones(3))


def test_rnd_regression_shrinks_bonus():
    rnd = RndState(6, RndConfig(hidden=(16,), output_dim=8, lr=3e-3), seed=1)
    x = np.linspace(-1, 1, 6)
    initial = rnd_bonus(rnd, x)
    for _ in range(1000):
        rnd.update(x[None, :])
    assert rnd_bonus(rnd, x) < 0.1 * initial


def test_rnd_novel_state_scores_higher(rng):
    env = HypergridEnv(2, 8)
    rnd = RndState(env.encoding_dim, RndConfig(hidden=(32,), output_dim=8, lr=3e-3),
                   seed=2)
    states = env.enumerate_states()
    train = env.encode_batch(states[:32])
    novel = env.encode_batch(states[48:56])
    for _ in range(600):
        rnd.update(train)
    trained_bonus = rnd.bonus(train).mean()
    novel_bonus = rnd.bonus(novel).mean()
    assert novel_bonus > trained_bonus


def test_rnd_target_frozen_bit_exact():
    rnd = RndState(5, RndConfig(hidden=(8,), output_dim=4), seed=3)
    before = rnd.target.values.copy()
    for _ in range(50):
        rnd.update(np.random.default_rng(0).normal(size=(4, 5)))
    assert np.array_equal(before, rnd.target.values)


def test_sagfn_reward_cases(rng):
    env = ChainEnv(6)
    policy = TabularChainPolicy(env)
    traj = sample_batch(policy, env, SamplerMod(), rng, 1)[0]
    rnd = RndState(env.encoding_dim, RndConfig(hidden=(8,), output_dim=4), seed=4)
    log_r = traj.log_reward
    no_bonus = sagfn_aux_log_reward(log_r, traj, rnd, env, beta_aux=1.0, beta_i=0.0)
    assert no_bonus == pytest.approx(log_r)
    rnd.predictor.values[:] = rnd.target.values
    zero_error = sagfn_aux_log_reward(log_r, traj, rnd, env, beta_aux=2.0, beta_i=1.0)
    assert zero_error == pytest.approx(log_r + math.log(2.0))
    fresh = RndState(env.encoding_dim, RndConfig(hidden=(8,), output_dim=4), seed=5)
    with_bonus = sagfn_aux_log_reward(log_r, traj, fresh, env, beta_aux=1.0, beta_i=1.0)
    assert with_bonus > log_r


# -- detachment ------------------------------------------------------------------

def test_aux_update_never_touches_main_grads(rng):
    env = ChainEnv(12)
    main = TabularChainPolicy(env)
    aux = TabularChainPolicy(env)
    trajs = sample_batch(aux, env, SamplerMod(), rng, 8)
    main.store.zero_grads()
    losses = tb_loss_values_np(main, env, trajs)
    aux_log_r = [lggfn_aux_log_reward(t.log_reward, l, 1.0)
                 for t, l in zip(trajs, losses)]
    loss = tb_loss_batch(aux, env, trajs, aux_log_r)
    ad.backward(loss)
    assert np.all(main.store.grads == 0.0)
    assert np.any(aux.store.grads != 0.0)


# -- positive mass on high-loss trajectories ---------------------------------------

def test_aux_target_dominates_reward_share():
    # a perfectly trained auxiliary agent puts at least R(x)/Z_aux on every x
    env = ChainEnv(10)
    frozen_main = TabularChainPolicy(env)   # uniform init
    log_r = np.array([env.log_reward(s) for s in env.enumerate_states()])
    trajs = [chain_trajectory(env, k) for k in range(10)]
    losses = tb_loss_values_np(frozen_main, env, trajs)
    aux_log_r = np.array([lggfn_aux_log_reward(lr, lv, 1.0)
                          for lr, lv in zip(log_r, losses)])
    # closed-form zero-loss configuration for the auxiliary reward
    aux_rewards = np.exp(aux_log_r)
    tail = np.cumsum(aux_rewards[::-1])[::-1]
    theta = np.zeros(10)
    for i in range(9):
        theta[i] = math.log(aux_rewards[i] / tail[i] / (1 - aux_rewards[i] / tail[i]))
    aux = TabularChainPolicy(env)
    aux.store.set_group("theta", theta)
    aux.store.set_group("logZ", np.asarray(math.log(tail[0])))
    assert np.max(tb_loss_values_np(aux, env, trajs, aux_log_r)) < 1e-9

    dist = exact_terminal_distribution(aux, env)
    z_aux = tail[0]
    for s, lr, lv in zip(env.enumerate_states(), log_r, losses):
        share = math.exp(lr) / z_aux
        assert dist[s] >= share - 1e-9
        if lv > 0:
            assert dist[s] > 0.0


# -- batch assembly ----------------------------------------------------------------

def test_on_policy_batch_untagged(rng):
    env = ChainEnv(5)
    main = TabularChainPolicy(env)
    cfg = ExplorerConfig(kind="on_policy")
    main_trajs, aux_trajs = make_behavior_batch(cfg, main, None, env, 16, rng)
    assert len(main_trajs) == 16 and aux_trajs == []


def test_aux_batch_split_half(rng):
    env = ChainEnv(5)
    main, aux = TabularChainPolicy(env), TabularChainPolicy(env, seed=1)
    cfg = ExplorerConfig(kind="lggfn")
    main_trajs, aux_trajs = make_behavior_batch(cfg, main, aux, env, 16, rng)
    assert len(main_trajs) == 8 and len(aux_trajs) == 8


def test_config_mismatch_on_missing_aux(rng):
    env = ChainEnv(5)
    main = TabularChainPolicy(env)
    with pytest.raises(ConfigMismatch):
        make_behavior_batch(ExplorerConfig(kind="lggfn"), main, None, env, 16, rng)
    with pytest.raises(ConfigMismatch):
        make_behavior_batch(ExplorerConfig(kind="on_policy"), main, main, env, 16, rng)


def test_explorer_config_validation():
    with pytest.raises(ConfigMismatch):
        ExplorerConfig(kind="mystery")
    with pytest.raises(ConfigMismatch):
        ExplorerConfig(kind="lggfn", lam=-0.5)
    with pytest.raises(ConfigMismatch):
        ExplorerConfig(kind="tempering", temperature=0.0)
