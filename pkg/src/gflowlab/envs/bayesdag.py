"""DAG-building environment scored by the BGe marginal likelihood.

States are DAGs over d labelled nodes; actions add one directed edge that
keeps the graph acyclic, plus exit. Every DAG may terminate. Raw BGe sums
are large negative numbers spanning a huge range, so log rewards are
reported relative to a greedily optimized reference graph; the shift is a
dataset constant, leaving the target posterior untouched while keeping the
learnable log-partition scalar near zero.
"""

from __future__ import annotations

import numpy as np

from ..env import SINK, Environment, EnvState
from ..errors import NoParents, StateSpaceTooLarge
from .bge import BgeHyperparams, BgeScore

# Number of labelled DAGs on d nodes, d = 0..8.
DAG_COUNTS = [1, 1, 3, 25, 543, 29281, 3781503, 1138779265, 783702329343]


def _closure_bits(adj_bits: tuple[int, ...]) -> tuple[int, ...]:
    """Transitive closure as per-node reachability bitmasks."""
    reach = list(adj_bits)
    d = len(reach)
    for _ in range(d):
        changed = False
        for i in range(d):
            merged = reach[i]
            targets = reach[i]
            while targets:
                j = (targets & -targets).bit_length() - 1
                targets &= targets - 1
                merged |= reach[j]
            if merged != reach[i]:
                reach[i] = merged
                changed = True
        if not changed:
            break
    return tuple(reach)


class BayesDagEnv(Environment):
    is_tree = False

    def __init__(self, dataset: np.ndarray, ground_truth: np.ndarray | None = None,
                 hyperparams: BgeHyperparams | None = None, normalize: bool = True):
        dataset = np.asarray(dataset, dtype=np.float64)
        self.d = dataset.shape[1]
        self.dataset = dataset
        self.ground_truth = None if ground_truth is None else np.asarray(ground_truth, dtype=int)
        self.score = BgeScore(dataset, hyperparams)
        self.pairs = [(i, j) for i in range(self.d) for j in range(self.d) if i != j]
        self._pair_index = {pair: k for k, pair in enumerate(self.pairs)}
        self.n_actions = len(self.pairs) + 1
        self.encoding_dim = self.d * self.d
        self.max_trajectory_length = self.d * (self.d - 1) // 2 + 1
        self._shift = self._greedy_reference_score() if normalize else 0.0
        self._enumeration: list[EnvState] | None = None

    def _greedy_reference_score(self) -> float:
        """Total score after greedy single-edge hill climbing from empty."""
        s = self.initial_state()
        total = sum(self.score.local_score(j, ()) for j in range(self.d))
        while True:
            best_gain, best_action = 0.0, None
            adj = self.adjacency(s)
            for k in np.flatnonzero(self.forward_mask(s)[:-1]):
                i, j = self.pairs[k]
                parents = np.flatnonzero(adj[:, j])
                gain = (self.score.local_score(j, tuple(parents) + (i,))
                        - self.score.local_score(j, tuple(parents)))
                if gain > best_gain:
                    best_gain, best_action = gain, int(k)
            if best_action is None:
                return total
            s = self.apply(s, best_action)
            total += best_gain

    # -- state plumbing ------------------------------------------------------
    def _state(self, edges: frozenset[tuple[int, int]]) -> EnvState:
        return EnvState(edges)

    def adjacency(self, s: EnvState) -> np.ndarray:
        adj = np.zeros((self.d, self.d), dtype=int)
        for i, j in s.payload:
            adj[i, j] = 1
        return adj

    def initial_state(self) -> EnvState:
        return self._state(frozenset())

    def _adj_bits(self, edges) -> tuple[int, ...]:
        bits = [0] * self.d
        for i, j in edges:
            bits[i] |= 1 << j
        return tuple(bits)

    def forward_mask(self, s: EnvState) -> np.ndarray:
        edges = s.payload
        reach = _closure_bits(self._adj_bits(edges))
        mask = np.zeros(self.n_actions, dtype=bool)
        for k, (i, j) in enumerate(self.pairs):
            # adding i -> j keeps acyclicity unless j already reaches i
            mask[k] = (i, j) not in edges and not (reach[j] >> i) & 1
        mask[self.exit_action] = True
        return mask

    def apply(self, s: EnvState, a: int):
        self.validate_action(s, a)
        if a == self.exit_action:
            return SINK
        return self._state(s.payload | {self.pairs[a]})

    def backward_transitions(self, s: EnvState):
        edges = s.payload
        if not edges:
            raise NoParents("the empty graph has no parents")
        return [(self._state(edges - {edge}), self._pair_index[edge])
                for edge in sorted(edges)]

    def backward_mask(self, s: EnvState) -> np.ndarray:
        mask = np.zeros(self.n_actions - 1, dtype=bool)
        for edge in s.payload:
            mask[self._pair_index[edge]] = True
        return mask

    # -- reward ---------------------------------------------------------------
    def log_reward(self, s: EnvState) -> float:
        return self.check_log_reward(s)

    def _log_reward_unchecked(self, s: EnvState) -> float:
        total = self.score.graph_score(self.adjacency(s))
        return total - self._shift

    def raw_log_reward(self, s: EnvState) -> float:
        return self._log_reward_unchecked(s) + self._shift

    # -- encoding / enumeration -------------------------------------------------
    def encode(self, s: EnvState) -> np.ndarray:
        return self.adjacency(s).astype(np.float64).reshape(-1)

    def state_count(self) -> int | None:
        return DAG_COUNTS[self.d] if self.d < len(DAG_COUNTS) else None

    def _enumerate(self):
        if self._enumeration is None:
            seen = {frozenset()}
            layers = [[frozenset()]]
            while layers[-1]:
                nxt = set()
                for edges in layers[-1]:
                    s = self._state(edges)
                    mask = self.forward_mask(s)
                    for k in np.flatnonzero(mask[:-1]):
                        child = edges | {self.pairs[k]}
                        if child not in seen:
                            seen.add(child)
                            nxt.add(child)
                layers.append(sorted(nxt, key=lambda e: sorted(e)))
            self._enumeration = [self._state(e) for layer in layers for e in layer]
        return self._enumeration
