"""Hypergrid environment: increment one coordinate or exit.

Reward places a plateau ring plus sharper bumps towards the corners of the
grid; the sparsity knob r0 controls the background level.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from ..env import SINK, Environment, EnvState
from ..errors import NoParents, OutOfGrid


def hypergrid_reward(x, height: int, r0: float, r1: float, r2: float) -> float:
    """Reward at integer coordinates ``x`` in [0, height)^d."""
    x = np.asarray(x)
    if np.any(x < 0) or np.any(x >= height):
        raise OutOfGrid(f"{tuple(x)} outside [0, {height})^d")
    z = np.abs(x / height - 0.5)
    band1 = np.all(z > 0.25)
    band2 = np.all((z > 0.3) & (z < 0.4))
    return r0 + r1 * float(band1) + r2 * float(band2)


class HypergridEnv(Environment):
    is_tree = False
    has_modes = True

    def __init__(self, dims: int, height: int, r0: float = 1e-2,
                 r1: float = 0.5, r2: float = 2.0):
        if dims < 1 or height < 2:
            raise ValueError("need dims >= 1 and height >= 2")
        if min(r0, r1, r2) <= 0:
            raise ValueError("rewards must be strictly positive")
        self.dims = dims
        self.height = height
        self.r0, self.r1, self.r2 = float(r0), float(r1), float(r2)
        self.n_actions = dims + 1
        self.encoding_dim = dims * height
        self.max_trajectory_length = dims * (height - 1) + 1
        self._max_reward = self._compute_max_reward()

    # -- state plumbing ----------------------------------------------------
    def _index(self, coords: tuple[int, ...]) -> int:
        idx = 0
        for c in coords:
            idx = idx * self.height + c
        return idx

    def _state(self, coords: tuple[int, ...]) -> EnvState:
        return EnvState(coords, dense_index=self._index(coords))

    def initial_state(self) -> EnvState:
        return self._state((0,) * self.dims)

    def forward_mask(self, s: EnvState) -> np.ndarray:
        mask = np.empty(self.n_actions, dtype=bool)
        coords = s.payload
        for i in range(self.dims):
            mask[i] = coords[i] < self.height - 1
        mask[self.dims] = True
        return mask

    def apply(self, s: EnvState, a: int):
        self.validate_action(s, a)
        if a == self.exit_action:
            return SINK
        coords = list(s.payload)
        coords[a] += 1
        return self._state(tuple(coords))

    def backward_transitions(self, s: EnvState):
        coords = s.payload
        if all(c == 0 for c in coords):
            raise NoParents("the source has no parents")
        parents = []
        for i, c in enumerate(coords):
            if c > 0:
                prev = list(coords)
                prev[i] -= 1
                parents.append((self._state(tuple(prev)), i))
        return parents

    def backward_mask(self, s: EnvState) -> np.ndarray:
        return np.array([c > 0 for c in s.payload])

    # -- reward ------------------------------------------------------------
    def reward(self, s: EnvState) -> float:
        return hypergrid_reward(s.payload, self.height, self.r0, self.r1, self.r2)

    def _log_reward_unchecked(self, s: EnvState) -> float:
        return math.log(self.reward(s))

    def log_reward(self, s: EnvState) -> float:
        return self.check_log_reward(s)

    def _compute_max_reward(self) -> float:
        z = np.abs(np.arange(self.height) / self.height - 0.5)
        any_band1 = bool(np.any(z > 0.25))
        any_band2 = bool(np.any((z > 0.3) & (z < 0.4)))
        best = self.r0
        if any_band1:
            best += self.r1
            if any_band2:
                best += self.r2
        return best

    def is_mode(self, s: EnvState) -> bool:
        return self.reward(s) >= self._max_reward

    def mode_states(self) -> list[EnvState]:
        return [s for s in self._enumerate() if self.is_mode(s)]

    # -- encoding / enumeration --------------------------------------------
    def encode(self, s: EnvState) -> np.ndarray:
        v = np.zeros(self.encoding_dim)
        for i, c in enumerate(s.payload):
            v[i * self.height + c] = 1.0
        return v

    def encode_batch(self, states) -> np.ndarray:
        states = list(states)
        out = np.zeros((len(states), self.encoding_dim))
        coords = np.array([s.payload for s in states])
        rows = np.arange(len(states))
        for i in range(self.dims):
            out[rows, i * self.height + coords[:, i]] = 1.0
        return out

    def state_count(self) -> int:
        return self.height ** self.dims

    def _enumerate(self):
        return [self._state(c) for c in
                itertools.product(range(self.height), repeat=self.dims)]
