"""Metric definitions: distances, diversity, structure recovery, top-k."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gflowlab.env import EnvState
from gflowlab.envs import BitSeqEnv, ChainEnv, HypergridEnv
from gflowlab.errors import (DegenerateLabels, DomainMismatch,
                             InsufficientSamples, SizeMismatch)
from gflowlab.metrics import (bitseq_diversity, bitseq_exploration_error,
                              edge_marginals, edge_roc_auc, expected_shd,
                              levenshtein, mean_l1, modes_found,
                              topk_mean_reward)


def dist(values):
    values = np.asarray(values, dtype=float)
    values = values / values.sum()
    return {EnvState(i): v for i, v in enumerate(values)}


def test_mean_l1_examples():
    p = dist([1, 3])
    assert mean_l1(p, p) == 0.0
    a = {EnvState(0): 1.0, EnvState(1): 0.0}
    b = {EnvState(0): 0.0, EnvState(1): 1.0}
    assert mean_l1(a, b) == pytest.approx(1.0)


def test_mean_l1_domain_mismatch():
    with pytest.raises(DomainMismatch):
        mean_l1({EnvState(0): 1.0}, {EnvState(1): 1.0})


@given(st.lists(st.floats(0.01, 10), min_size=2, max_size=6),
       st.lists(st.floats(0.01, 10), min_size=2, max_size=6),
       st.lists(st.floats(0.01, 10), min_size=2, max_size=6))
@settings(max_examples=200)
def test_mean_l1_metric_axioms(a, b, c):
    size = min(len(a), len(b), len(c))
    p, q, r = dist(a[:size]), dist(b[:size]), dist(c[:size])
    assert mean_l1(p, q) == mean_l1(q, p)
    assert mean_l1(p, r) <= mean_l1(p, q) + mean_l1(q, r) + 1e-12
    assert mean_l1(p, p) == 0.0
    if any(abs(p[k] - q[k]) > 1e-12 for k in p):
        assert mean_l1(p, q) > 0.0


def test_empirical_histogram_close_to_oracle(rng):
    env = ChainEnv(6)
    target = {s: env.reward(s.payload) for s in env.enumerate_states()}
    total = sum(target.values())
    target = {s: v / total for s, v in target.items()}
    n = 10 ** 6
    draws = rng.choice(len(target), size=n, p=list(target.values()))
    counts = np.bincount(draws, minlength=len(target)) / n
    empirical = {s: counts[i] for i, s in enumerate(target)}
    # multinomial concentration: per-state noise is below 3 sqrt(p/n)
    bound = 3 * sum(np.sqrt(p * (1 - p) / n) for p in target.values()) / len(target)
    assert mean_l1(empirical, target) < bound


def test_modes_found_counting():
    env = HypergridEnv(2, 8, r0=1e-4)
    assert modes_found([], env) == 0
    modes = env.mode_states()
    assert len(modes) == 4
    samples = modes + modes + [env.initial_state()]
    assert modes_found(samples, env) == 4


def test_bitseq_diversity_counts_distinct_modes():
    env = BitSeqEnv(2)
    mode = env._state("0101")
    partial = env._state("01")
    assert bitseq_diversity([mode, mode, partial], env) == 1


def test_bitseq_diversity_coupon_collector(rng):
    env = BitSeqEnv(8)
    modes = [s for s in env.enumerate_states() if env.is_mode(s)]
    assert len(modes) == 1430
    picks = rng.integers(0, 1430, size=16000)
    distinct = bitseq_diversity([modes[i] for i in picks], env)
    expected = 1430 * (1 - (1 - 1 / 1430) ** 16000)
    assert abs(distinct - expected) < 12


def test_exploration_error_bounds(rng):
    env = BitSeqEnv(8)
    modes = [s for s in env.enumerate_states() if env.is_mode(s)]
    perfect = [modes[i] for i in rng.integers(0, 1430, size=16000)]
    err_perfect = bitseq_exploration_error(perfect, env)
    assert err_perfect == pytest.approx(1 - env.true_mode_mass(), abs=1e-9)
    never = [env._state("0" * 16)] * 16000
    err_never = bitseq_exploration_error(never, env)
    assert err_never == pytest.approx(env.true_mode_mass())
    assert 0.0 <= err_never <= 1.0


def test_expected_shd_examples():
    truth = np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]])
    assert expected_shd([truth], truth) == 0.0
    reversed_one = np.array([[0, 0, 0], [1, 0, 1], [0, 0, 0]])
    assert expected_shd([reversed_one], truth) == 1.0
    empty = np.zeros((3, 3), dtype=int)
    assert expected_shd([empty], truth) == 2.0
    assert expected_shd([truth, empty], truth) == 1.0
    with pytest.raises(SizeMismatch):
        expected_shd([np.zeros((2, 2))], truth)


def test_shd_zero_iff_exact():
    truth = np.array([[0, 1], [0, 0]])
    close = np.array([[0, 0], [0, 0]])
    assert expected_shd([truth, truth], truth) == 0.0
    assert expected_shd([truth, close], truth) > 0.0


def test_roc_auc_examples():
    truth = np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]])
    assert edge_roc_auc(truth.astype(float), truth) == 1.0
    constant = np.full((3, 3), 0.5)
    assert edge_roc_auc(constant, truth) == 0.5


def test_roc_auc_pair_counting_oracle():
    truth = np.array([[0, 1], [0, 0]])
    marginals = np.array([[0.0, 0.4], [0.7, 0.0]])
    # one positive (score .4) vs one negative (score .7): 0 wins of 1 pair
    assert edge_roc_auc(marginals, truth) == 0.0
    marginals = np.array([[0.0, 0.9], [0.7, 0.0]])
    assert edge_roc_auc(marginals, truth) == 1.0


def test_roc_auc_monotone_invariance(rng):
    d = 4
    truth = (rng.random((d, d)) < 0.4).astype(int)
    np.fill_diagonal(truth, 0)
    if truth.sum() in (0, d * d - d):
        truth[0, 1] = 1
        truth[1, 0] = 0
    marginals = rng.random((d, d))
    base = edge_roc_auc(marginals, truth)
    assert edge_roc_auc(np.exp(marginals), truth) == pytest.approx(base)
    assert edge_roc_auc(3.0 * marginals + 2.0, truth) == pytest.approx(base)


def test_roc_auc_degenerate_labels():
    with pytest.raises(DegenerateLabels):
        edge_roc_auc(np.zeros((2, 2)), np.zeros((2, 2), dtype=int))


def test_edge_marginals_frequency():
    a = np.array([[0, 1], [0, 0]])
    b = np.array([[0, 0], [0, 0]])
    marg = edge_marginals([a, a, b, b], 2)
    assert marg[0, 1] == 0.5


@pytest.mark.parametrize("a,b,expected", [
    ("AAA", "AAA", 0), ("AAA", "", 3), ("kitten", "sitting", 3),
    ("", "", 0), ("AC", "CA", 2),
])
def test_levenshtein(a, b, expected):
    assert levenshtein(a, b) == expected


@given(st.text(max_size=12), st.text(max_size=12))
@settings(max_examples=200)
def test_levenshtein_metric_properties(a, b):
    d = levenshtein(a, b)
    assert d == levenshtein(b, a)
    assert d <= max(len(a), len(b))
    assert (d == 0) == (a == b)


def test_topk_mean_reward():
    samples = [("a", 3.0), ("b", 2.0), ("c", 1.0)]
    assert topk_mean_reward(samples, 2) == 2.5
    assert topk_mean_reward(samples, 3) == 2.0
    duplicated = samples + [("a", 3.0)] * 5
    assert topk_mean_reward(duplicated, 2) == 2.5
    with pytest.raises(InsufficientSamples):
        topk_mean_reward(samples, 4)
