"""Bit-sequence environment: append bits, exit anywhere, balanced rewards.

Reading 0 as an opening parenthesis and 1 as a closing one, the full reward
goes only to complete sequences (length 2N) that are balanced. Short
sequences carry a small deceptive reward that can trap greedy training;
everything else sits at a tiny floor.
"""

from __future__ import annotations

import math

import numpy as np

from ..env import SINK, Environment, EnvState
from ..errors import NoParents

APPEND_0 = 0
APPEND_1 = 1
EXIT = 2


def is_balanced(bits: str) -> bool:
    """Prefix-sum test: opens minus closes never negative, zero at the end."""
    depth = 0
    for b in bits:
        depth += 1 if b == "0" else -1
        if depth < 0:
            return False
    return depth == 0


def catalan(n: int) -> int:
    """Exact n-th Catalan number, computed multiplicatively."""
    if n < 0:
        raise ValueError("catalan is defined for n >= 0")
    return math.comb(2 * n, n) // (n + 1)


class BitSeqEnv(Environment):
    n_actions = 3
    is_tree = True
    has_modes = True

    def __init__(self, half_length: int, r_mode: float = 1.0,
                 r_deceptive: float = 1e-3, deceptive_max_len: int = 4,
                 r_floor: float = 1e-6):
        if half_length < 1:
            raise ValueError("half_length must be >= 1")
        if min(r_mode, r_deceptive, r_floor) <= 0:
            raise ValueError("rewards must be strictly positive")
        self.half_length = half_length
        self.full_length = 2 * half_length
        self.r_mode = float(r_mode)
        self.r_deceptive = float(r_deceptive)
        self.deceptive_max_len = int(deceptive_max_len)
        self.r_floor = float(r_floor)
        self.encoding_dim = 3 * self.full_length
        self.max_trajectory_length = self.full_length + 1

    def _state(self, bits: str) -> EnvState:
        return EnvState(bits, dense_index=(1 << len(bits)) - 1 + (int(bits, 2) if bits else 0))

    def initial_state(self) -> EnvState:
        return self._state("")

    def forward_mask(self, s: EnvState) -> np.ndarray:
        can_append = len(s.payload) < self.full_length
        return np.array([can_append, can_append, True])

    def apply(self, s: EnvState, a: int):
        self.validate_action(s, a)
        if a == EXIT:
            return SINK
        return self._state(s.payload + ("0" if a == APPEND_0 else "1"))

    def backward_transitions(self, s: EnvState):
        bits = s.payload
        if not bits:
            raise NoParents("the source has no parents")
        return [(self._state(bits[:-1]), APPEND_0 if bits[-1] == "0" else APPEND_1)]

    def reward(self, bits: str) -> float:
        n = len(bits)
        if n == self.full_length and is_balanced(bits):
            return self.r_mode
        if 0 < n <= self.deceptive_max_len:
            return self.r_deceptive
        return self.r_floor

    def _log_reward_unchecked(self, s: EnvState) -> float:
        return math.log(self.reward(s.payload))

    def log_reward(self, s: EnvState) -> float:
        return self.check_log_reward(s)

    def is_mode(self, s: EnvState) -> bool:
        return len(s.payload) == self.full_length and is_balanced(s.payload)

    def encode(self, s: EnvState) -> np.ndarray:
        v = np.zeros(self.encoding_dim)
        bits = s.payload
        for pos in range(self.full_length):
            symbol = 2 if pos >= len(bits) else int(bits[pos])
            v[3 * pos + symbol] = 1.0
        return v

    def encode_batch(self, states) -> np.ndarray:
        states = list(states)
        out = np.zeros((len(states), self.encoding_dim))
        positions = 3 * np.arange(self.full_length)
        for row, s in enumerate(states):
            bits = s.payload
            symbols = np.full(self.full_length, 2, dtype=int)
            if bits:
                symbols[:len(bits)] = np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")
            out[row, positions + symbols] = 1.0
        return out

    def state_count(self) -> int:
        return (1 << (self.full_length + 1)) - 1

    def _enumerate(self):
        states = [self._state("")]
        frontier = [""]
        for _ in range(self.full_length):
            frontier = [bits + b for bits in frontier for b in ("0", "1")]
            states.extend(self._state(bits) for bits in frontier)
        return states

    # -- closed-form partition helpers --------------------------------------
    def partition_by_length(self) -> float:
        """Total reward mass, summed per length class in closed form."""
        total = 0.0
        for n in range(self.full_length + 1):
            count = 1 << n
            if n == self.full_length:
                balanced = catalan(self.half_length)
                total += balanced * self.r_mode
                rest = count - balanced
                if 0 < n <= self.deceptive_max_len:
                    total += rest * self.r_deceptive
                else:
                    total += rest * self.r_floor
            elif 0 < n <= self.deceptive_max_len:
                total += count * self.r_deceptive
            else:
                total += count * self.r_floor
        return total

    def true_mode_mass(self) -> float:
        """Exact probability mass the target assigns to complete balanced sequences."""
        return catalan(self.half_length) * self.r_mode / self.partition_by_length()
