"""Evaluation metrics: distribution distance, diversity, structure recovery.

All functions are pure. MetricRecord rows carry only the metrics applicable
to the environment being evaluated; absent metrics stay None.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .env import Environment, EnvState
from .errors import (DegenerateLabels, DomainMismatch, InsufficientSamples,
                     SizeMismatch)

METRIC_COLUMNS = ("mean_l1", "modes_found", "diversity", "exploration_error",
                  "e_shd", "roc_auc")


@dataclass
class MetricRecord:
    iteration: int
    trajectories_consumed: int
    mean_tb_loss: float
    mean_l1: float | None = None
    modes_found: int | None = None
    diversity: int | None = None
    exploration_error: float | None = None
    e_shd: float | None = None
    roc_auc: float | None = None

    def present_metrics(self) -> list[str]:
        return [name for name in METRIC_COLUMNS if getattr(self, name) is not None]

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def mean_l1(p: dict[EnvState, float], q: dict[EnvState, float]) -> float:
    """Mean absolute probability gap over the shared terminal set."""
    if set(p.keys()) != set(q.keys()):
        raise DomainMismatch("distributions are defined on different terminal sets")
    if not p:
        raise DomainMismatch("empty distributions")
    return sum(abs(p[s] - q[s]) for s in p) / len(p)


def modes_found(samples, env: Environment) -> int:
    """Distinct maximal-reward states among the samples."""
    seen = set()
    for s in samples:
        if s.payload not in seen and env.is_mode(s):
            seen.add(s.payload)
    return len(seen)


def bitseq_diversity(samples, env) -> int:
    """Distinct complete balanced sequences among terminal-state samples."""
    return len({s.payload for s in samples if env.is_mode(s)})


def bitseq_exploration_error(samples, env) -> float:
    """|empirical valid-sequence mass - exact target mass|, in [0, 1]."""
    samples = list(samples)
    hits = sum(1 for s in samples if env.is_mode(s))
    empirical = hits / len(samples) if samples else 0.0
    return abs(empirical - env.true_mode_mass())


def _structure_mismatches(adj: np.ndarray, truth: np.ndarray) -> int:
    """Pairwise mismatch count: missing, extra, or reversed edges cost one each."""
    d = truth.shape[0]
    count = 0
    for i in range(d):
        for j in range(i + 1, d):
            got = (adj[i, j], adj[j, i])
            want = (truth[i, j], truth[j, i])
            if got != want:
                count += 1
    return count


def expected_shd(sample_adjacencies, ground_truth: np.ndarray) -> float:
    """Mean structural Hamming distance of sampled DAGs to the ground truth."""
    truth = np.asarray(ground_truth, dtype=int)
    total, n = 0, 0
    for adj in sample_adjacencies:
        adj = np.asarray(adj, dtype=int)
        if adj.shape != truth.shape:
            raise SizeMismatch(f"adjacency {adj.shape} vs truth {truth.shape}")
        total += _structure_mismatches(adj, truth)
        n += 1
    if n == 0:
        raise SizeMismatch("no samples")
    return total / n


def edge_marginals(sample_adjacencies, d: int) -> np.ndarray:
    """Per-edge frequency among posterior samples."""
    out = np.zeros((d, d))
    n = 0
    for adj in sample_adjacencies:
        out += np.asarray(adj, dtype=float)
        n += 1
    return out / max(n, 1)


def edge_roc_auc(marginals: np.ndarray, ground_truth: np.ndarray) -> float:
    """Rank-based AUC over ordered node pairs, ties counted half."""
    marginals = np.asarray(marginals, dtype=float)
    truth = np.asarray(ground_truth, dtype=int)
    if marginals.shape != truth.shape:
        raise SizeMismatch(f"marginals {marginals.shape} vs truth {truth.shape}")
    d = truth.shape[0]
    off = ~np.eye(d, dtype=bool)
    scores = marginals[off]
    labels = truth[off]
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("ground truth has no positive/negative edge pairs")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores))
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum = ranks[labels == 1].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def levenshtein(a: str, b: str) -> int:
    """Edit distance with unit insert/delete/substitute costs."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(min(previous[j] + 1,
                               current[j - 1] + 1,
                               previous[j - 1] + (ca != cb)))
        previous = current
    return previous[-1]


def topk_mean_reward(samples_with_rewards, k: int) -> float:
    """Mean reward of the k best distinct samples."""
    best: dict = {}
    for key, reward in samples_with_rewards:
        if key not in best or reward > best[key]:
            best[key] = reward
    if len(best) < k:
        raise InsufficientSamples(f"need {k} distinct samples, have {len(best)}")
    top = sorted(best.values(), reverse=True)[:k]
    return float(np.mean(top))
