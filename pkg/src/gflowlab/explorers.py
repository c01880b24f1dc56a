"""Behavior-policy strategies and auxiliary-agent reward shaping.

The loss-guided strategy trains an auxiliary agent on R + lambda * L, where
L is the main agent's detached trajectory loss, so sampling concentrates on
regions the main agent has not yet learned. Novelty (RND) and the
asymmetric residual-weighted variant are provided as baselines. All
auxiliary rewards are plain floats: no gradient ever flows from an
auxiliary update into the main agent's parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .env import Environment, Trajectory
from .errors import ConfigMismatch, ShapeMismatch
from .nn import MlpSpec, ParamStore, init_mlp_groups, mlp_forward, mlp_forward_np, mlp_group_shapes
from .optim import make_optimizer, step
from .policies import SamplerMod, sample_batch

ON_POLICY_KINDS = ("on_policy", "eps_greedy", "tempering")
AUXILIARY_KINDS = ("lggfn", "sagfn_rnd", "adaptive_teachers")


@dataclass(frozen=True)
class RndConfig:
    """Random-network-distillation shapes; the target net is frozen at init."""

    hidden: tuple[int, ...] = (64,)
    output_dim: int = 16
    lr: float = 1e-3


@dataclass(frozen=True)
class ExplorerConfig:
    kind: str = "on_policy"
    lam: float = 1.0
    epsilon: float = 0.0
    temperature: float = 1.0
    rnd: RndConfig = field(default_factory=RndConfig)
    at_alpha: float = 0.5
    at_c: float = 19.0
    at_eps: float = 1e-8
    beta_e_main: float = 0.0
    beta_e_aux: float = 0.25
    beta_aux: float = 1.0
    beta_main: float = 1.0
    beta_i: float = 1.0
    aux_stop_after: int | None = None

    def __post_init__(self):
        if self.kind not in ON_POLICY_KINDS + AUXILIARY_KINDS:
            raise ConfigMismatch(f"unknown explorer kind {self.kind!r}")
        if self.lam < 0:
            raise ConfigMismatch("lambda must be non-negative")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigMismatch("epsilon must lie in [0, 1]")
        if self.temperature <= 0:
            raise ConfigMismatch("temperature must be positive")

    @property
    def uses_aux(self) -> bool:
        return self.kind in AUXILIARY_KINDS


def lggfn_aux_log_reward(log_r_main: float, main_tb_loss_value: float, lam: float) -> float:
    """log(R + lambda * L), stable in log space; lam * L = 0 returns log R exactly."""
    weighted = lam * main_tb_loss_value
    if weighted < 0:
        raise ValueError("loss value must be non-negative")
    if weighted == 0.0:
        return log_r_main
    return float(np.logaddexp(log_r_main, math.log(weighted)))


def adaptive_teachers_log_reward(delta: float, log_r_main: float,
                                 cfg: ExplorerConfig) -> float:
    """Asymmetric residual weighting: overestimated-reward residuals count 20x."""
    weight = 1.0 + cfg.at_c * (1.0 if delta > 0 else 0.0)
    return math.log(cfg.at_eps + weight * delta * delta) + cfg.at_alpha * log_r_main


class RndState:
    """Frozen target network plus a trained predictor; bonus is their gap."""

    def __init__(self, input_dim: int, cfg: RndConfig, seed: int):
        self.cfg = cfg
        self.target_spec = MlpSpec(input_dim, cfg.hidden, cfg.output_dim)
        self.predictor_spec = MlpSpec(input_dim, cfg.hidden, cfg.output_dim)
        rng = np.random.default_rng(seed)
        self.target = ParamStore(mlp_group_shapes(self.target_spec))
        init_mlp_groups(self.target, self.target_spec, rng)
        self.predictor = ParamStore(mlp_group_shapes(self.predictor_spec))
        init_mlp_groups(self.predictor, self.predictor_spec, rng)
        self.opt = make_optimizer("adam", self.predictor, cfg.lr)

    def bonus(self, features: np.ndarray) -> np.ndarray:
        """Per-row squared prediction error, detached."""
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if features.shape[1] != self.target_spec.input_dim:
            raise ShapeMismatch(f"expected feature dim {self.target_spec.input_dim}, "
                                f"got {features.shape[1]}")
        target_out = mlp_forward_np(self.target, self.target_spec, features)
        predictor_out = mlp_forward_np(self.predictor, self.predictor_spec, features)
        return ((target_out - predictor_out) ** 2).sum(axis=1)

    def update(self, features: np.ndarray) -> None:
        """One predictor step towards the frozen target on this batch."""
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        tape = ad.Tape()
        target_out = tape.constant(mlp_forward_np(self.target, self.target_spec, features))
        predictor_out = mlp_forward(tape, self.predictor, self.predictor_spec, features)
        loss = ad.mean(ad.vsum(ad.square(predictor_out - target_out), axis=1))
        ad.backward(loss)
        step(self.opt, self.predictor)


def rnd_bonus(rnd: RndState, features: np.ndarray) -> float:
    """Exploration bonus of a single state's feature vector."""
    return float(rnd.bonus(np.atleast_2d(features))[0])


def sagfn_aux_log_reward(log_r_main: float, trajectory: Trajectory,
                         rnd: RndState, env: Environment,
                         beta_aux: float = 1.0, beta_i: float = 1.0) -> float:
    """log(beta_aux * R + beta_i * sum of per-state novelty bonuses)."""
    bonus_total = beta_i * float(rnd.bonus(env.encode_batch(trajectory.states)).sum())
    scaled_log_r = log_r_main + math.log(beta_aux)
    if bonus_total <= 0.0:
        return scaled_log_r
    return float(np.logaddexp(scaled_log_r, math.log(bonus_total)))


def behavior_mods(cfg: ExplorerConfig) -> tuple[SamplerMod, SamplerMod | None]:
    """Sampler modifications for the (main, auxiliary) behavior policies."""
    if cfg.kind == "on_policy":
        return SamplerMod(), None
    if cfg.kind == "eps_greedy":
        return SamplerMod(epsilon=cfg.epsilon), None
    if cfg.kind == "tempering":
        return SamplerMod(temperature=cfg.temperature), None
    if cfg.kind == "sagfn_rnd":
        return SamplerMod(epsilon=cfg.beta_e_main), SamplerMod(epsilon=cfg.beta_e_aux)
    return SamplerMod(), SamplerMod()


def make_behavior_batch(cfg: ExplorerConfig, main_policy, aux_policy,
                        env: Environment, batch_size: int,
                        rng: np.random.Generator
                        ) -> tuple[list[Trajectory], list[Trajectory]]:
    """Sample the iteration's trajectories, auxiliary half first.

    Auxiliary strategies split the budget 50/50 between the two agents;
    plain strategies draw the full batch from the (modified) main policy.
    """
    if cfg.uses_aux and aux_policy is None:
        raise ConfigMismatch(f"{cfg.kind} needs an auxiliary agent")
    if not cfg.uses_aux and aux_policy is not None:
        raise ConfigMismatch(f"{cfg.kind} does not take an auxiliary agent")
    main_mod, aux_mod = behavior_mods(cfg)
    if not cfg.uses_aux:
        return sample_batch(main_policy, env, main_mod, rng, batch_size), []
    aux_trajs = sample_batch(aux_policy, env, aux_mod, rng, batch_size // 2)
    main_trajs = sample_batch(main_policy, env, main_mod, rng, batch_size - batch_size // 2)
    return main_trajs, aux_trajs
