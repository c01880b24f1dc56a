"""Environment contract: a pointed DAG of states with terminal rewards.

Every benchmark environment implements this interface. States flow from a
unique source towards a sink sentinel; the exit action is always the last
index of the action alphabet and is the only way to reach the sink.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from .errors import (InvalidAction, NoParents, NotEnumerable, NotTerminable,
                     SinkHasNoActions, StateSpaceTooLarge)

DEFAULT_ENUMERATION_CAP = 2 ** 20


class _Sink:
    """Sentinel for the absorbing sink; not an EnvState."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "<sink>"


SINK = _Sink()


class EnvState:
    """Immutable environment state.

    ``payload`` is environment-specific (coordinate tuple, bit string,
    adjacency bytes, codon tuple). ``dense_index`` is a stable unique rank,
    populated only by environments that can compute it cheaply. Equality and
    hashing use the payload alone, so states from different code paths
    compare equal.
    """

    __slots__ = ("payload", "dense_index")

    def __init__(self, payload: Any, dense_index: int | None = None):
        self.payload = payload
        self.dense_index = dense_index

    def __eq__(self, other):
        return isinstance(other, EnvState) and self.payload == other.payload

    def __hash__(self):
        return hash(self.payload)

    def __repr__(self):
        return f"EnvState({self.payload!r})"


@dataclass
class Trajectory:
    """A validated source-to-sink action sequence.

    ``states`` excludes the sink; ``actions`` has the same length and ends
    with the exit action. ``log_reward`` is log R of the terminating state.
    """

    states: list[EnvState]
    actions: list[int]
    log_reward: float

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def terminal(self) -> EnvState:
        return self.states[-1]


class Environment:
    """Base class; subclasses fill the attributes and the abstract methods.

    All operations are pure functions of their arguments; instances are
    immutable after construction and safe to share across workers.
    """

    n_actions: int          # alphabet size including exit
    encoding_dim: int
    is_tree: bool           # every state has a unique parent
    max_trajectory_length: int

    @property
    def exit_action(self) -> int:
        return self.n_actions - 1

    # -- abstract surface -------------------------------------------------
    def initial_state(self) -> EnvState:
        raise NotImplementedError

    def forward_mask(self, s: EnvState) -> np.ndarray:
        """Boolean validity over the full action alphabet."""
        raise NotImplementedError

    def apply(self, s: EnvState, a: int):
        raise NotImplementedError

    def backward_transitions(self, s: EnvState) -> list[tuple[EnvState, int]]:
        raise NotImplementedError

    def log_reward(self, s: EnvState) -> float:
        raise NotImplementedError

    def encode(self, s: EnvState) -> np.ndarray:
        raise NotImplementedError

    def state_count(self) -> int | None:
        """Total number of states, or None when unknown/unbounded."""
        return None

    # -- shared helpers ----------------------------------------------------
    def forward_actions(self, s) -> list[int]:
        if s is SINK:
            raise SinkHasNoActions("the sink has no forward actions")
        return [int(a) for a in np.flatnonzero(self.forward_mask(s))]

    def backward_mask(self, s: EnvState) -> np.ndarray:
        """Validity over non-exit actions of "a parent produced s via a"."""
        mask = np.zeros(self.n_actions - 1, dtype=bool)
        for _, a in self.backward_transitions(s):
            mask[a] = True
        return mask

    def can_terminate(self, s: EnvState) -> bool:
        return bool(self.forward_mask(s)[self.exit_action])

    def encode_batch(self, states: Iterable[EnvState]) -> np.ndarray:
        return np.stack([self.encode(s) for s in states])

    has_modes: bool = False

    def is_mode(self, s: EnvState) -> bool:
        """Whether ``s`` is a maximal-reward terminal; optional capability."""
        raise NotImplementedError

    def enumerable(self, cap: int = DEFAULT_ENUMERATION_CAP) -> bool:
        count = self.state_count()
        return count is not None and count <= cap

    def enumerate_states(self, cap: int = DEFAULT_ENUMERATION_CAP) -> list[EnvState]:
        """All states in topological order (source first, parents precede children)."""
        count = self.state_count()
        if count is None:
            raise NotEnumerable(f"{type(self).__name__} does not enumerate")
        if count > cap:
            raise StateSpaceTooLarge(count, cap)
        return self._enumerate()

    def _enumerate(self) -> list[EnvState]:
        raise NotEnumerable(f"{type(self).__name__} does not enumerate")

    def check_log_reward(self, s: EnvState) -> float:
        """Guarded log-reward shared by subclasses."""
        if not self.can_terminate(s):
            raise NotTerminable(f"state {s!r} cannot exit")
        value = self._log_reward_unchecked(s)
        if not math.isfinite(value):
            raise NotTerminable(f"non-finite log reward at {s!r}")
        return value

    def _log_reward_unchecked(self, s: EnvState) -> float:
        raise NotImplementedError

    def validate_action(self, s: EnvState, a: int) -> None:
        if a < 0 or a >= self.n_actions or not self.forward_mask(s)[a]:
            raise InvalidAction(f"action {a} invalid at {s!r}")

    def replay(self, trajectory: Trajectory) -> bool:
        """Fold apply over the actions and compare against the stored states."""
        s = self.initial_state()
        if trajectory.states[0] != s:
            return False
        for i, a in enumerate(trajectory.actions):
            if trajectory.states[i] != s:
                return False
            try:
                child = self.apply(s, a)
            except InvalidAction:
                return False
            if a == self.exit_action:
                return child is SINK and i == len(trajectory.actions) - 1
            s = child
        return False
