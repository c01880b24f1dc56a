"""Flat parameter storage and a small MLP built on the autodiff tape."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import ShapeMismatch


@dataclass(frozen=True)
class MlpSpec:
    """Architecture of a fully-connected network with raw-logit output."""

    input_dim: int
    hidden_dims: tuple[int, ...]
    output_dim: int
    activation: str = "relu"

    def __post_init__(self):
        dims = (self.input_dim, *self.hidden_dims, self.output_dim)
        if any(d < 1 for d in dims):
            raise ValueError(f"all dims must be >= 1, got {dims}")
        if self.activation not in ("relu", "tanh"):
            raise ValueError(f"unknown activation {self.activation!r}")
        object.__setattr__(self, "hidden_dims", tuple(self.hidden_dims))

    def layer_dims(self) -> list[tuple[int, int]]:
        dims = (self.input_dim, *self.hidden_dims, self.output_dim)
        return [(dims[i], dims[i + 1]) for i in range(len(dims) - 1)]

    def to_dict(self) -> dict:
        return {"input_dim": self.input_dim, "hidden_dims": list(self.hidden_dims),
                "output_dim": self.output_dim, "activation": self.activation}

    @classmethod
    def from_dict(cls, d: dict) -> "MlpSpec":
        return cls(d["input_dim"], tuple(d["hidden_dims"]), d["output_dim"], d["activation"])


class ParamStore:
    """One flat vector of learnable values with named, disjoint groups.

    ``values`` and ``grads`` always have identical length; groups partition
    the vector exactly. ``version`` counts writes (optimizer steps and bulk
    loads), which the trainer uses to assert update ordering.
    """

    def __init__(self, group_shapes: dict[str, tuple[int, ...]]):
        self.groups: dict[str, tuple[int, tuple[int, ...]]] = {}
        offset = 0
        for name, shape in group_shapes.items():
            size = int(np.prod(shape, dtype=int)) if shape else 1
            self.groups[name] = (offset, tuple(shape))
            offset += size
        self.values = np.zeros(offset)
        self.grads = np.zeros(offset)
        self.version = 0

    def __len__(self) -> int:
        return self.values.size

    def _slice(self, name: str) -> tuple[slice, tuple[int, ...]]:
        offset, shape = self.groups[name]
        size = int(np.prod(shape, dtype=int)) if shape else 1
        return slice(offset, offset + size), shape

    def view(self, name: str) -> np.ndarray:
        """Writable view of one group, reshaped to its declared shape."""
        sl, shape = self._slice(name)
        return self.values[sl].reshape(shape)

    def grad_view(self, name: str) -> np.ndarray:
        sl, shape = self._slice(name)
        return self.grads[sl].reshape(shape)

    def set_group(self, name: str, value) -> None:
        sl, shape = self._slice(name)
        value = np.asarray(value, dtype=np.float64)
        if value.shape != shape:
            raise ShapeMismatch(f"group {name!r} has shape {shape}, got {value.shape}")
        self.values[sl] = value.reshape(-1)
        self.version += 1

    def leaf(self, tape: ad.Tape, name: str) -> ad.Var:
        """Expose a group as a differentiable leaf on ``tape``."""
        sl, shape = self._slice(name)
        value = self.values[sl].reshape(shape).copy()
        grads = self.grads

        def hook(g):
            grads[sl] += np.asarray(g).reshape(-1)

        return tape.leaf(value, hook=hook)

    def zero_grads(self) -> None:
        self.grads[:] = 0.0

    def state_dict(self) -> dict:
        return {
            "groups": {name: {"offset": off, "shape": list(shape)}
                       for name, (off, shape) in self.groups.items()},
            "values": self.values.tolist(),
        }

    def load_state_dict(self, state: dict) -> None:
        for name, meta in state["groups"].items():
            if name not in self.groups:
                raise ShapeMismatch(f"unknown group {name!r} in checkpoint")
            off, shape = self.groups[name]
            if off != meta["offset"] or list(shape) != meta["shape"]:
                raise ShapeMismatch(f"group {name!r} layout differs from checkpoint")
        values = np.asarray(state["values"], dtype=np.float64)
        if values.shape != self.values.shape:
            raise ShapeMismatch("checkpoint length differs from store")
        self.values[:] = values
        self.version += 1


def glorot_uniform(shape: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    fan_in, fan_out = shape
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def mlp_group_shapes(spec: MlpSpec, prefix: str = "") -> dict[str, tuple[int, ...]]:
    shapes: dict[str, tuple[int, ...]] = {}
    for i, (fan_in, fan_out) in enumerate(spec.layer_dims()):
        shapes[f"{prefix}w{i}"] = (fan_in, fan_out)
        shapes[f"{prefix}b{i}"] = (fan_out,)
    return shapes


def init_mlp_groups(store: ParamStore, spec: MlpSpec, rng: np.random.Generator,
                    prefix: str = "") -> None:
    """Glorot-uniform weights, zero biases, in place."""
    for i, (fan_in, fan_out) in enumerate(spec.layer_dims()):
        store.set_group(f"{prefix}w{i}", glorot_uniform((fan_in, fan_out), rng))
        store.set_group(f"{prefix}b{i}", np.zeros(fan_out))


def init_params(spec: MlpSpec, seed: int, include_log_z: bool = True) -> ParamStore:
    """Fresh ParamStore for a standalone MLP, reproducible from ``seed``.

    The optional ``logZ`` scalar group starts at zero and gets its own
    learning rate downstream.
    """
    shapes = mlp_group_shapes(spec)
    if include_log_z:
        shapes["logZ"] = ()
    store = ParamStore(shapes)
    rng = np.random.default_rng(seed)
    init_mlp_groups(store, spec, rng)
    return store


def _activate(name: str, h):
    if name == "relu":
        return ad.relu(h)
    return ad.tanh(h)


def _activate_np(name: str, h: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.where(h > 0, h, 0.0)
    return np.tanh(h)


def mlp_forward(tape: ad.Tape, store: ParamStore, spec: MlpSpec, x,
                prefix: str = "") -> ad.Var:
    """Taped forward pass. ``x`` may be a Var, a vector or a matrix.

    Hidden layers apply the activation; the final layer is affine with no
    activation (raw logits).
    """
    squeeze = False
    if not isinstance(x, ad.Var):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
            squeeze = True
        x = tape.constant(x)
    if x.value.shape[1] != spec.input_dim:
        raise ShapeMismatch(f"expected input dim {spec.input_dim}, got {x.value.shape[1]}")
    h = x
    n_layers = len(spec.layer_dims())
    for i in range(n_layers):
        w = store.leaf(tape, f"{prefix}w{i}")
        b = store.leaf(tape, f"{prefix}b{i}")
        h = ad.matmul(h, w) + b
        if i < n_layers - 1:
            h = _activate(spec.activation, h)
    if squeeze:
        h = ad.vsum(h, axis=0)
    return h


def mlp_forward_np(store: ParamStore, spec: MlpSpec, x: np.ndarray,
                   prefix: str = "") -> np.ndarray:
    """Tape-free forward pass with identical arithmetic to ``mlp_forward``."""
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    h = x[None, :] if squeeze else x
    if h.shape[1] != spec.input_dim:
        raise ShapeMismatch(f"expected input dim {spec.input_dim}, got {h.shape[1]}")
    n_layers = len(spec.layer_dims())
    for i in range(n_layers):
        h = h @ store.view(f"{prefix}w{i}") + store.view(f"{prefix}b{i}")
        if i < n_layers - 1:
            h = _activate_np(spec.activation, h)
    return h[0] if squeeze else h
