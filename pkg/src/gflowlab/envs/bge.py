"""BGe marginal-likelihood scoring and linear-Gaussian data generation.

The BGe score is the log marginal likelihood of a Gaussian Bayesian network
under a Normal-Wishart prior. It decomposes per node and is identical across
Markov-equivalent structures, which the tests exploit as an oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import SingularCovariance


@dataclass(frozen=True)
class BgeHyperparams:
    """Prior strength for the mean (alpha_mu) and precision (alpha_w).

    ``alpha_w`` must exceed d + 1; the conventional default is d + 2 with a
    zero prior mean and an identity-derived scale matrix.
    """

    alpha_mu: float = 1.0
    alpha_w: float | None = None    # resolved to d + 2 when unset

    def resolve(self, d: int) -> tuple[float, float]:
        alpha_w = self.alpha_w if self.alpha_w is not None else d + 2.0
        if alpha_w <= d + 1:
            raise ValueError(f"alpha_w must exceed d + 1 = {d + 1}")
        return self.alpha_mu, alpha_w


class BgeScore:
    """Decomposable local scores for one dataset, memoised per family."""

    def __init__(self, data: np.ndarray, hyperparams: BgeHyperparams | None = None):
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] < 2:
            raise ValueError("data must be (n_samples >= 2) x d")
        self.data = data
        self.n, self.d = data.shape
        hp = hyperparams or BgeHyperparams()
        self.alpha_mu, self.alpha_w = hp.resolve(self.d)
        self.t = self.alpha_mu * (self.alpha_w - self.d - 1.0) / (self.alpha_mu + 1.0)
        mean = data.mean(axis=0)
        centered = data - mean
        scatter = centered.T @ centered
        mean_term = (self.n * self.alpha_mu / (self.n + self.alpha_mu)) * np.outer(mean, mean)
        self.posterior_scale = self.t * np.eye(self.d) + scatter + mean_term
        self._cache: dict[tuple[int, frozenset[int]], float] = {}

    def _logdet(self, subset: tuple[int, ...]) -> float:
        if not subset:
            return 0.0
        sub = self.posterior_scale[np.ix_(subset, subset)]
        sign, logdet = np.linalg.slogdet(sub)
        if sign <= 0:
            raise SingularCovariance(f"singular posterior scale on {subset}")
        return logdet

    def local_score(self, j: int, parents) -> float:
        """log marginal likelihood of column j given its parent columns."""
        parents = frozenset(int(p) for p in parents)
        if j in parents:
            raise ValueError("a node cannot parent itself")
        key = (j, parents)
        if key in self._cache:
            return self._cache[key]
        ps = tuple(sorted(parents))
        l = len(ps)
        n, d, a_w, a_mu, t = self.n, self.d, self.alpha_w, self.alpha_mu, self.t
        score = (
            0.5 * (math.log(a_mu) - math.log(n + a_mu))
            - 0.5 * n * math.log(math.pi)
            + math.lgamma(0.5 * (n + a_w - d + l + 1))
            - math.lgamma(0.5 * (a_w - d + l + 1))
            + 0.5 * (a_w - d + 2 * l + 1) * math.log(t)
            + 0.5 * (n + a_w - d + l) * self._logdet(ps)
            - 0.5 * (n + a_w - d + l + 1) * self._logdet(tuple(sorted(parents | {j})))
        )
        self._cache[key] = score
        return score

    def graph_score(self, adjacency: np.ndarray) -> float:
        """Sum of local scores: log R of a whole DAG."""
        adjacency = np.asarray(adjacency)
        return sum(self.local_score(j, np.flatnonzero(adjacency[:, j]))
                   for j in range(self.d))


def generate_er_scm(d: int, edge_prob: float, n_samples: int,
                    noise_sigma: float = 1.0, seed: int = 0
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Erdos-Renyi DAG plus linear-Gaussian samples.

    Edges are oriented from the lower to the higher index, so the adjacency
    is strictly upper triangular. Each X_i sums its parents plus N(0, sigma^2)
    noise; an empty parent set contributes zero.
    """
    if d < 2:
        raise ValueError("need at least two nodes")
    if not 0.0 <= edge_prob <= 1.0:
        raise ValueError("edge_prob must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    adjacency = np.zeros((d, d), dtype=int)
    upper = np.triu_indices(d, k=1)
    adjacency[upper] = rng.random(len(upper[0])) < edge_prob
    data = np.zeros((n_samples, d))
    noise = rng.normal(0.0, noise_sigma, size=(n_samples, d))
    for i in range(d):
        parents = np.flatnonzero(adjacency[:, i])
        data[:, i] = data[:, parents].sum(axis=1) + noise[:, i]
    return adjacency, data
