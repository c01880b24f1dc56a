"""Reverse-mode automatic differentiation on an append-only tape.

Node values are float64 numpy arrays; rank-0 arrays act as scalars. An
array-valued node records one tape entry whose elementwise semantics are
identical to the scalar primitives, so batched code differentiates exactly
like the equivalent scalar program while staying fast enough for training
loops.

A :class:`Var` is a lightweight handle (tape, index). Gradients flow to
leaves, whose hooks accumulate into external storage (see
:class:`gflowlab.nn.ParamStore`).
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, ShapeMismatch


def _as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Tape:
    """Append-only record of one forward pass.

    Each node stores the operation kind, the ids of its input nodes and a
    vector-Jacobian closure mapping the node's output gradient to input
    gradient contributions. Inputs always reference strictly earlier nodes.
    """

    __slots__ = ("values", "kinds", "inputs", "vjps", "hooks")

    def __init__(self):
        self.values: list[np.ndarray] = []
        self.kinds: list[str] = []
        self.inputs: list[tuple[int, ...]] = []
        self.vjps: list[Callable | None] = []
        self.hooks: list[Callable | None] = []

    def __len__(self) -> int:
        return len(self.values)

    def record(self, kind: str, inputs: Sequence["Var"], value: np.ndarray,
               vjp: Callable | None = None, hook: Callable | None = None) -> "Var":
        for v in inputs:
            if v.tape is not self:
                raise ValueError("input Var belongs to a different tape")
        idx = len(self.values)
        self.values.append(value)
        self.kinds.append(kind)
        self.inputs.append(tuple(v.idx for v in inputs))
        self.vjps.append(vjp)
        self.hooks.append(hook)
        return Var(self, idx)

    def constant(self, value) -> "Var":
        return self.record("const", (), _as_array(value))

    def leaf(self, value, hook: Callable | None = None) -> "Var":
        """A gradient sink; ``hook(grad)`` fires once all contributions are in."""
        return self.record("leaf", (), _as_array(value), hook=hook)


class Var:
    """Handle to one tape node."""

    __slots__ = ("tape", "idx")

    def __init__(self, tape: Tape, idx: int):
        self.tape = tape
        self.idx = idx

    @property
    def value(self) -> np.ndarray:
        return self.tape.values[self.idx]

    @property
    def shape(self) -> tuple:
        return self.value.shape

    def item(self) -> float:
        return float(self.value)

    def __repr__(self):
        return f"Var(idx={self.idx}, value={self.value!r})"

    def _coerce(self, other) -> "Var":
        if isinstance(other, Var):
            return other
        return self.tape.constant(other)

    def __add__(self, other):
        return add(self, self._coerce(other))

    def __radd__(self, other):
        return add(self._coerce(other), self)

    def __sub__(self, other):
        return sub(self, self._coerce(other))

    def __rsub__(self, other):
        return sub(self._coerce(other), self)

    def __mul__(self, other):
        return mul(self, self._coerce(other))

    def __rmul__(self, other):
        return mul(self._coerce(other), self)

    def __truediv__(self, other):
        return div(self, self._coerce(other))

    def __rtruediv__(self, other):
        return div(self._coerce(other), self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, self._coerce(other))


def _binary(kind, a: Var, b: Var, value, da, db) -> Var:
    ash, bsh = a.value.shape, b.value.shape

    def vjp(g):
        return (_unbroadcast(da(g), ash), _unbroadcast(db(g), bsh))

    return a.tape.record(kind, (a, b), value, vjp)


def add(a: Var, b: Var) -> Var:
    return _binary("add", a, b, a.value + b.value, lambda g: g, lambda g: g)


def sub(a: Var, b: Var) -> Var:
    return _binary("sub", a, b, a.value - b.value, lambda g: g, lambda g: -g)


def mul(a: Var, b: Var) -> Var:
    av, bv = a.value, b.value
    return _binary("mul", a, b, av * bv, lambda g: g * bv, lambda g: g * av)


def div(a: Var, b: Var) -> Var:
    av, bv = a.value, b.value
    if np.any(bv == 0.0):
        raise DomainError("division by zero")
    out = av / bv
    return _binary("div", a, b, out, lambda g: g / bv, lambda g: -g * av / (bv * bv))


def neg(a: Var) -> Var:
    return a.tape.record("neg", (a,), -a.value, lambda g: (-g,))


def exp(a: Var) -> Var:
    out = np.exp(a.value)
    return a.tape.record("exp", (a,), out, lambda g: (g * out,))


def log(a: Var) -> Var:
    av = a.value
    if np.any(av <= 0.0):
        raise DomainError("log of non-positive value")
    return a.tape.record("log", (a,), np.log(av), lambda g: (g / av,))


def sigmoid(a: Var) -> Var:
    av = a.value
    out = np.where(av >= 0, 1.0 / (1.0 + np.exp(-np.abs(av))),
                   np.exp(-np.abs(av)) / (1.0 + np.exp(-np.abs(av))))
    return a.tape.record("sigmoid", (a,), out, lambda g: (g * out * (1.0 - out),))


def tanh(a: Var) -> Var:
    out = np.tanh(a.value)
    return a.tape.record("tanh", (a,), out, lambda g: (g * (1.0 - out * out),))


def relu(a: Var) -> Var:
    av = a.value
    mask = av > 0
    return a.tape.record("relu", (a,), np.where(mask, av, 0.0), lambda g: (g * mask,))


def square(a: Var) -> Var:
    av = a.value
    return a.tape.record("square", (a,), av * av, lambda g: (2.0 * g * av,))


def maximum(a: Var, b: Var) -> Var:
    """Elementwise max; at ties the gradient goes to the first argument."""
    av, bv = a.value, b.value
    take_a = av >= bv
    return _binary("max", a, b, np.where(take_a, av, bv),
                   lambda g: g * take_a, lambda g: g * (~take_a))


def logsumexp(x, axis: int | None = None, keepdims: bool = False) -> Var:
    """log(sum(exp(x))); accepts a Var or a list of scalar Vars."""
    if isinstance(x, (list, tuple)):
        x = stack(list(x))
    xv = x.value
    m = np.max(xv, axis=axis, keepdims=True)
    out_kd = m + np.log(np.sum(np.exp(xv - m), axis=axis, keepdims=True))
    out = out_kd if keepdims else np.squeeze(out_kd, axis=axis) if axis is not None else out_kd.reshape(())
    weights = np.exp(xv - out_kd)

    def vjp(g):
        g = np.asarray(g)
        if not keepdims and axis is not None:
            g = np.expand_dims(g, axis)
        return (g * weights,)

    return x.tape.record("logsumexp", (x,), out, vjp)


def matmul(a: Var, b: Var) -> Var:
    av, bv = a.value, b.value
    if av.ndim != 2 or bv.ndim not in (1, 2):
        raise ShapeMismatch(f"matmul expects (2d, 1d/2d), got {av.shape} @ {bv.shape}")
    if av.shape[1] != bv.shape[0]:
        raise ShapeMismatch(f"matmul inner dims differ: {av.shape} @ {bv.shape}")
    out = av @ bv
    if bv.ndim == 2:
        vjp = lambda g: (g @ bv.T, av.T @ g)
    else:
        vjp = lambda g: (np.outer(g, bv), av.T @ g)
    return a.tape.record("matmul", (a, b), out, vjp)


def vsum(a: Var, axis: int | None = None, keepdims: bool = False) -> Var:
    av = a.value
    out = np.sum(av, axis=axis, keepdims=keepdims)

    def vjp(g):
        g = np.asarray(g)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, av.shape).copy(),)

    return a.tape.record("sum", (a,), out, vjp)


def mean(a: Var, axis: int | None = None) -> Var:
    av = a.value
    n = av.size if axis is None else av.shape[axis]
    out = np.mean(av, axis=axis)

    def vjp(g):
        g = np.asarray(g)
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / n, av.shape).copy(),)

    return a.tape.record("mean", (a,), out, vjp)


def take_pairs(a: Var, rows: np.ndarray, cols: np.ndarray) -> Var:
    """Gather matrix entries a[rows[i], cols[i]] into a vector."""
    av = a.value
    out = av[rows, cols]

    def vjp(g):
        z = np.zeros_like(av)
        np.add.at(z, (rows, cols), g)
        return (z,)

    return a.tape.record("take_pairs", (a,), out, vjp)


def segment_sum(a: Var, segment_ids: np.ndarray, num_segments: int) -> Var:
    """Sum vector entries into ``num_segments`` buckets."""
    av = a.value
    out = np.zeros(num_segments)
    np.add.at(out, segment_ids, av)
    return a.tape.record("segment_sum", (a,), out, lambda g: (g[segment_ids],))


def stack(vars_: Sequence[Var]) -> Var:
    """Stack same-shape Vars along a new leading axis."""
    value = np.stack([v.value for v in vars_])

    def vjp(g):
        return tuple(g[i] for i in range(len(vars_)))

    return vars_[0].tape.record("stack", tuple(vars_), value, vjp)


def column_stack(vars_: Sequence[Var]) -> Var:
    """Stack 1-d Vars as the columns of a matrix."""
    value = np.stack([v.value for v in vars_], axis=1)

    def vjp(g):
        return tuple(g[:, i] for i in range(len(vars_)))

    return vars_[0].tape.record("column_stack", tuple(vars_), value, vjp)


def backward(loss: Var) -> None:
    """Accumulate d(loss)/d(leaf) into every leaf hook.

    ``loss`` must be a scalar node. Intermediate gradients are discarded once
    consumed; leaf hooks accumulate (callers zero external grads).
    """
    if loss.value.shape != ():
        raise ShapeMismatch(f"backward expects a scalar loss, got shape {loss.value.shape}")
    tape = loss.tape
    grads: list[np.ndarray | None] = [None] * len(tape)
    grads[loss.idx] = np.ones(())
    for i in range(loss.idx, -1, -1):
        g = grads[i]
        if g is None:
            continue
        vjp = tape.vjps[i]
        if vjp is not None:
            for j, gj in zip(tape.inputs[i], vjp(g)):
                if gj is None:
                    continue
                if grads[j] is None:
                    grads[j] = gj
                else:
                    grads[j] = grads[j] + gj
        hook = tape.hooks[i]
        if hook is not None:
            hook(g)
        grads[i] = None
