"""Linear chain environment: advance or exit, high reward at both ends."""

from __future__ import annotations

import math

import numpy as np

from ..env import SINK, Environment, EnvState
from ..errors import InvalidAction, NoParents

ADVANCE = 0
EXIT = 1


class ChainEnv(Environment):
    """States s_0..s_{N-1}; every state may exit, the last one must."""

    n_actions = 2
    is_tree = True
    has_modes = True

    def __init__(self, n_states: int, r_end: float = 101.0, r_mid: float = 1.0):
        if n_states < 2:
            raise ValueError("chain needs at least two states")
        if r_end <= 0 or r_mid <= 0:
            raise ValueError("rewards must be strictly positive")
        self.n_states = n_states
        self.r_end = float(r_end)
        self.r_mid = float(r_mid)
        self.encoding_dim = n_states
        self.max_trajectory_length = n_states

    def _state(self, i: int) -> EnvState:
        return EnvState(i, dense_index=i)

    def initial_state(self) -> EnvState:
        return self._state(0)

    def forward_mask(self, s: EnvState) -> np.ndarray:
        return np.array([s.payload < self.n_states - 1, True])

    def apply(self, s: EnvState, a: int):
        self.validate_action(s, a)
        if a == EXIT:
            return SINK
        return self._state(s.payload + 1)

    def backward_transitions(self, s: EnvState):
        if s.payload == 0:
            raise NoParents("the source has no parents")
        return [(self._state(s.payload - 1), ADVANCE)]

    def reward(self, i: int) -> float:
        return self.r_end if i in (0, self.n_states - 1) else self.r_mid

    def _log_reward_unchecked(self, s: EnvState) -> float:
        return math.log(self.reward(s.payload))

    def log_reward(self, s: EnvState) -> float:
        return self.check_log_reward(s)

    def encode(self, s: EnvState) -> np.ndarray:
        v = np.zeros(self.n_states)
        v[s.payload] = 1.0
        return v

    def encode_batch(self, states) -> np.ndarray:
        idx = np.fromiter((s.payload for s in states), dtype=int)
        out = np.zeros((len(idx), self.n_states))
        out[np.arange(len(idx)), idx] = 1.0
        return out

    def is_mode(self, s: EnvState) -> bool:
        return self.reward(s.payload) >= max(self.r_end, self.r_mid)

    def state_count(self) -> int:
        return self.n_states

    def _enumerate(self):
        return [self._state(i) for i in range(self.n_states)]
