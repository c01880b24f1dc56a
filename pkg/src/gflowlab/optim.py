"""First-order optimizers over a ParamStore with per-group learning rates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nn import ParamStore

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class OptimizerState:
    kind: str
    lr_vector: np.ndarray
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS
    m: np.ndarray | None = None
    v: np.ndarray | None = None
    step_count: int = 0


def _lr_vector(store: ParamStore, lr: float, lr_overrides: dict[str, float] | None) -> np.ndarray:
    vec = np.full(len(store), lr)
    for name, group_lr in (lr_overrides or {}).items():
        offset, shape = store.groups[name]
        size = int(np.prod(shape, dtype=int)) if shape else 1
        vec[offset:offset + size] = group_lr
    return vec


def make_optimizer(kind: str, store: ParamStore, lr: float,
                   lr_overrides: dict[str, float] | None = None) -> OptimizerState:
    if kind not in ("sgd", "adam"):
        raise ValueError(f"unknown optimizer kind {kind!r}")
    vec = _lr_vector(store, lr, lr_overrides)
    if kind == "adam":
        return OptimizerState("adam", vec, m=np.zeros(len(store)), v=np.zeros(len(store)))
    return OptimizerState("sgd", vec)


def step(opt: OptimizerState, store: ParamStore) -> None:
    """Apply one update from ``store.grads`` and zero the grads."""
    g = store.grads
    if opt.kind == "sgd":
        store.values -= opt.lr_vector * g
    else:
        opt.step_count += 1
        opt.m = opt.beta1 * opt.m + (1.0 - opt.beta1) * g
        opt.v = opt.beta2 * opt.v + (1.0 - opt.beta2) * g * g
        m_hat = opt.m / (1.0 - opt.beta1 ** opt.step_count)
        v_hat = opt.v / (1.0 - opt.beta2 ** opt.step_count)
        store.values -= opt.lr_vector * m_hat / (np.sqrt(v_hat) + opt.eps)
    store.grads[:] = 0.0
    store.version += 1
