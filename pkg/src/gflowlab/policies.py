"""Policies over environment actions and trajectory sampling.

An MLP policy shares one backbone between the forward and backward heads,
differing only in the final affine layer, plus a learnable scalar logZ in
its own parameter group. Tree-structured environments have exactly one
parent per state, so their backward policy is hard-coded to probability one
and carries no parameters.

Invalid logits are masked additively with -1e9 before log-softmax, which
keeps the tape free of infinities while contributing zero probability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .env import Environment, EnvState, Trajectory
from .errors import InvalidAction, NoParents, TrajectoryOverrun
from .nn import MlpSpec, ParamStore, glorot_uniform, init_mlp_groups, mlp_group_shapes

MASK_OFFSET = -1e9


@dataclass(frozen=True)
class SamplerMod:
    """Behavior-policy modification: uniform mixing and logit tempering.

    epsilon=0 with temperature=1 reproduces the on-policy sampler exactly.
    """

    epsilon: float = 0.0
    temperature: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.temperature <= 0.0:
            raise ValueError("temperature must be positive")


class MlpPolicy:
    """Shared-backbone policy with forward/backward heads and logZ."""

    kind = "mlp"

    def __init__(self, env: Environment, hidden_dims=(256, 256),
                 activation: str = "relu", seed: int = 0):
        self.input_dim = env.encoding_dim
        self.n_actions = env.n_actions
        self.is_tree = env.is_tree
        self.hidden_dims = tuple(hidden_dims)
        self.activation = activation
        trunk_out = self.hidden_dims[-1] if self.hidden_dims else self.input_dim
        self.trunk_spec = (MlpSpec(self.input_dim, self.hidden_dims[:-1],
                                   self.hidden_dims[-1], activation)
                           if self.hidden_dims else None)
        shapes = mlp_group_shapes(self.trunk_spec, "trunk.") if self.trunk_spec else {}
        shapes["fwd.w"] = (trunk_out, self.n_actions)
        shapes["fwd.b"] = (self.n_actions,)
        if not self.is_tree:
            shapes["bwd.w"] = (trunk_out, self.n_actions - 1)
            shapes["bwd.b"] = (self.n_actions - 1,)
        shapes["logZ"] = ()
        self.store = ParamStore(shapes)
        rng = np.random.default_rng(seed)
        if self.trunk_spec:
            init_mlp_groups(self.store, self.trunk_spec, rng, "trunk.")
        self.store.set_group("fwd.w", glorot_uniform(shapes["fwd.w"], rng))
        if not self.is_tree:
            self.store.set_group("bwd.w", glorot_uniform(shapes["bwd.w"], rng))

    @property
    def log_z(self) -> float:
        return float(self.store.view("logZ"))

    def _trunk(self, tape: ad.Tape, x: ad.Var) -> ad.Var:
        if not self.trunk_spec:
            return x
        h = x
        n_layers = len(self.trunk_spec.layer_dims())
        for i in range(n_layers):
            w = self.store.leaf(tape, f"trunk.w{i}")
            b = self.store.leaf(tape, f"trunk.b{i}")
            h = ad.matmul(h, w) + b
            h = ad.relu(h) if self.activation == "relu" else ad.tanh(h)
        return h

    def _trunk_np(self, x: np.ndarray) -> np.ndarray:
        if not self.trunk_spec:
            return x
        h = x
        n_layers = len(self.trunk_spec.layer_dims())
        for i in range(n_layers):
            h = h @ self.store.view(f"trunk.w{i}") + self.store.view(f"trunk.b{i}")
            h = np.where(h > 0, h, 0.0) if self.activation == "relu" else np.tanh(h)
        return h

    def forward_logits(self, tape: ad.Tape, x) -> ad.Var:
        if not isinstance(x, ad.Var):
            x = tape.constant(np.atleast_2d(np.asarray(x, dtype=np.float64)))
        h = self._trunk(tape, x)
        return ad.matmul(h, self.store.leaf(tape, "fwd.w")) + self.store.leaf(tape, "fwd.b")

    def forward_logits_np(self, x: np.ndarray) -> np.ndarray:
        h = self._trunk_np(np.atleast_2d(x))
        return h @ self.store.view("fwd.w") + self.store.view("fwd.b")

    def backward_logits(self, tape: ad.Tape, x) -> ad.Var | None:
        if self.is_tree:
            return None
        if not isinstance(x, ad.Var):
            x = tape.constant(np.atleast_2d(np.asarray(x, dtype=np.float64)))
        h = self._trunk(tape, x)
        return ad.matmul(h, self.store.leaf(tape, "bwd.w")) + self.store.leaf(tape, "bwd.b")

    def backward_logits_np(self, x: np.ndarray) -> np.ndarray | None:
        if self.is_tree:
            return None
        h = self._trunk_np(np.atleast_2d(x))
        return h @ self.store.view("bwd.w") + self.store.view("bwd.b")

    def describe(self) -> dict:
        return {"kind": "mlp", "hidden": list(self.hidden_dims),
                "activation": self.activation}


class TabularChainPolicy:
    """One exit-logit parameter per chain state: P(exit|s) = sigmoid(theta_s)."""

    kind = "tabular"

    def __init__(self, env: Environment, seed: int = 0):
        if env.n_actions != 2 or not env.is_tree:
            raise ValueError("tabular policy fits the two-action chain only")
        self.n_states = env.encoding_dim
        self.n_actions = 2
        self.is_tree = True
        self.store = ParamStore({"theta": (self.n_states,), "logZ": ()})

    @property
    def log_z(self) -> float:
        return float(self.store.view("logZ"))

    def forward_logits(self, tape: ad.Tape, x) -> ad.Var:
        if not isinstance(x, ad.Var):
            x = tape.constant(np.atleast_2d(np.asarray(x, dtype=np.float64)))
        theta = self.store.leaf(tape, "theta")
        exit_logit = ad.matmul(x, theta)
        zeros = tape.constant(np.zeros(x.value.shape[0]))
        return ad.column_stack([zeros, exit_logit])

    def forward_logits_np(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        exit_logit = x @ self.store.view("theta")
        return np.stack([np.zeros(x.shape[0]), exit_logit], axis=1)

    def backward_logits(self, tape, x):
        return None

    def backward_logits_np(self, x):
        return None

    def describe(self) -> dict:
        return {"kind": "tabular"}


def make_policy(env: Environment, cfg: dict, seed: int):
    if cfg.get("kind", "mlp") == "tabular":
        return TabularChainPolicy(env, seed)
    return MlpPolicy(env, tuple(cfg.get("hidden", [256, 256])),
                     cfg.get("activation", "relu"), seed)


def masked_log_softmax_np(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    z = logits + np.where(mask, 0.0, MASK_OFFSET)
    m = z.max(axis=1, keepdims=True)
    return z - (m + np.log(np.exp(z - m).sum(axis=1, keepdims=True)))


def masked_probs_np(logits: np.ndarray, mask: np.ndarray,
                    mod: SamplerMod = SamplerMod()) -> np.ndarray:
    z = np.where(mask, logits / mod.temperature, MASK_OFFSET)
    z -= z.max(axis=1, keepdims=True)
    p = np.exp(z) * mask
    p /= p.sum(axis=1, keepdims=True)
    if mod.epsilon > 0.0:
        uniform = mask / mask.sum(axis=1, keepdims=True)
        p = (1.0 - mod.epsilon) * p + mod.epsilon * uniform
    return p


def forward_probs_np(policy, env: Environment, states,
                     mod: SamplerMod = SamplerMod()) -> np.ndarray:
    """Behavior-policy action probabilities for a batch of states."""
    states = list(states)
    logits = policy.forward_logits_np(env.encode_batch(states))
    mask = np.stack([env.forward_mask(s) for s in states])
    return masked_probs_np(logits, mask, mod)


def forward_log_prob(policy, env: Environment, s: EnvState, a: int) -> ad.Var:
    """Differentiable log P_F(a | s); masked log-softmax over valid actions."""
    if a not in env.forward_actions(s):
        raise InvalidAction(f"action {a} invalid at {s!r}")
    tape = ad.Tape()
    logits = policy.forward_logits(tape, env.encode(s)[None, :])
    offsets = tape.constant(np.where(env.forward_mask(s), 0.0, MASK_OFFSET)[None, :])
    masked = logits + offsets
    log_probs = masked - ad.logsumexp(masked, axis=1, keepdims=True)
    return ad.vsum(ad.take_pairs(log_probs, np.array([0]), np.array([a])))


def backward_log_prob(policy, env: Environment, s: EnvState, parent_action: int) -> ad.Var:
    """Differentiable log P_B(parent via action | s); exactly 0 for trees."""
    transitions = env.backward_transitions(s)
    if parent_action not in {a for _, a in transitions}:
        raise InvalidAction(f"action {parent_action} is not a parent action of {s!r}")
    tape = ad.Tape()
    if policy.is_tree:
        return tape.constant(0.0)
    logits = policy.backward_logits(tape, env.encode(s)[None, :])
    offsets = tape.constant(np.where(env.backward_mask(s), 0.0, MASK_OFFSET)[None, :])
    masked = logits + offsets
    log_probs = masked - ad.logsumexp(masked, axis=1, keepdims=True)
    return ad.vsum(ad.take_pairs(log_probs, np.array([0]), np.array([parent_action])))


def _choose(rng: np.random.Generator, probs: np.ndarray) -> np.ndarray:
    """Sample one action index per row from a probability matrix."""
    cumulative = probs.cumsum(axis=1)
    draws = rng.random((probs.shape[0], 1))
    idx = (cumulative < draws).sum(axis=1)
    return np.minimum(idx, probs.shape[1] - 1)


def sample_trajectory(policy, env: Environment, mod: SamplerMod,
                      rng: np.random.Generator) -> Trajectory:
    return sample_batch(policy, env, mod, rng, 1)[0]


def sample_batch(policy, env: Environment, mod: SamplerMod,
                 rng: np.random.Generator, n: int) -> list[Trajectory]:
    """Sample n trajectories in lockstep (one policy evaluation per step)."""
    states = [[env.initial_state()] for _ in range(n)]
    actions: list[list[int]] = [[] for _ in range(n)]
    active = list(range(n))
    exit_action = env.exit_action
    guard = env.max_trajectory_length + 1
    for _ in range(guard):
        if not active:
            break
        current = [states[i][-1] for i in active]
        probs = forward_probs_np(policy, env, current, mod)
        chosen = _choose(rng, probs)
        still = []
        for row, i in enumerate(active):
            a = int(chosen[row])
            if probs[row, a] <= 0.0:
                a = int(np.argmax(probs[row]))
            actions[i].append(a)
            if a == exit_action:
                continue
            states[i].append(env.apply(states[i][-1], a))
            still.append(i)
        active = still
    if active:
        raise TrajectoryOverrun(f"{len(active)} trajectories exceeded {guard} steps")
    return [Trajectory(states[i], actions[i], env.log_reward(states[i][-1]))
            for i in range(n)]
