"""Codon-level mRNA design for a fixed protein.

At position t only codons synonymous with the t-th amino acid are valid;
exit is valid only once the sequence is complete. The reward linearly
combines GC content, negated folding energy and the codon adaptation index,
plus a tiny positive floor so rewards stay strictly positive for any
non-negative weight choice.
"""

from __future__ import annotations

import math

import numpy as np

from ..env import SINK, Environment, EnvState
from ..errors import IncompleteSequence, NoParents
from .codon_usage import GENETIC_CODE, SYNONYMOUS
from .rna import codon_adaptation_index, gc_content, nussinov_mfe

REWARD_FLOOR = 1e-6


class CodonEnv(Environment):
    is_tree = True

    def __init__(self, protein: str, w1: float = 1.0, w2: float = 0.1, w3: float = 1.0):
        protein = protein.upper().strip()
        if not protein:
            raise ValueError("protein must be non-empty")
        for aa in protein:
            if aa not in SYNONYMOUS:
                raise ValueError(f"unknown amino acid {aa!r}")
        if min(w1, w2, w3) < 0:
            raise ValueError("weights must be non-negative")
        self.protein = protein
        self.w1, self.w2, self.w3 = float(w1), float(w2), float(w3)
        self.length = len(protein)
        self.codon_choices = [SYNONYMOUS[aa] for aa in protein]
        self.n_syn = [len(c) for c in self.codon_choices]
        self.max_syn = max(self.n_syn)
        self.n_actions = self.max_syn + 1
        self._offsets = np.concatenate([[0], np.cumsum([n + 1 for n in self.n_syn])])
        self.encoding_dim = int(self._offsets[-1])
        self.max_trajectory_length = self.length + 1
        self._reward_cache: dict[tuple[int, ...], float] = {}

    def _state(self, codons: tuple[int, ...]) -> EnvState:
        return EnvState(codons)

    def initial_state(self) -> EnvState:
        return self._state(())

    def forward_mask(self, s: EnvState) -> np.ndarray:
        t = len(s.payload)
        mask = np.zeros(self.n_actions, dtype=bool)
        if t < self.length:
            mask[:self.n_syn[t]] = True
        else:
            mask[self.exit_action] = True
        return mask

    def apply(self, s: EnvState, a: int):
        self.validate_action(s, a)
        if a == self.exit_action:
            return SINK
        return self._state(s.payload + (a,))

    def backward_transitions(self, s: EnvState):
        codons = s.payload
        if not codons:
            raise NoParents("the empty sequence has no parents")
        return [(self._state(codons[:-1]), codons[-1])]

    # -- reward ------------------------------------------------------------
    def codons(self, s: EnvState) -> list[str]:
        return [self.codon_choices[t][k] for t, k in enumerate(s.payload)]

    def mrna(self, s: EnvState) -> str:
        return "".join(self.codons(s))

    def decode_protein(self, s: EnvState) -> str:
        return "".join(GENETIC_CODE[c] for c in self.codons(s))

    def reward(self, s: EnvState) -> float:
        codons = s.payload
        if len(codons) != self.length:
            raise IncompleteSequence(f"expected {self.length} codons, got {len(codons)}")
        cached = self._reward_cache.get(codons)
        if cached is not None:
            return cached
        seq = self.mrna(s)
        value = (REWARD_FLOOR
                 + self.w1 * gc_content(seq)
                 - self.w2 * nussinov_mfe(seq)
                 + self.w3 * codon_adaptation_index(self.codons(s)))
        self._reward_cache[codons] = value
        return value

    def _log_reward_unchecked(self, s: EnvState) -> float:
        return math.log(self.reward(s))

    def log_reward(self, s: EnvState) -> float:
        return self.check_log_reward(s)

    # -- encoding / enumeration ----------------------------------------------
    def encode(self, s: EnvState) -> np.ndarray:
        v = np.zeros(self.encoding_dim)
        codons = s.payload
        for t in range(self.length):
            base = self._offsets[t]
            if t < len(codons):
                v[base + codons[t]] = 1.0
            else:
                v[base + self.n_syn[t]] = 1.0
        return v

    def state_count(self) -> int:
        total, prefix = 1, 1
        for n in self.n_syn:
            prefix *= n
            total += prefix
        return total

    def _enumerate(self):
        states = [self._state(())]
        frontier = [()]
        for t in range(self.length):
            frontier = [c + (k,) for c in frontier for k in range(self.n_syn[t])]
            states.extend(self._state(c) for c in frontier)
        return states
