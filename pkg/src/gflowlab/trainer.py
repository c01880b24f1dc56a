"""Training loop, evaluation scheduling and run bookkeeping.

One iteration with an auxiliary agent performs, in order: sample the
auxiliary batch, sample the main batch, evaluate the main agent's detached
loss on the auxiliary batch, derive the auxiliary reward, update the
auxiliary agent under that reward, concatenate the batches, update the main
agent under the true reward. Auxiliary trajectories count toward the
trajectory budget, so method comparisons at a fixed budget are fair.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .env import Environment, Trajectory
from .envs import make_env
from .errors import ConfigError, DegenerateLabels, NonFiniteLoss
from .explorers import (AUXILIARY_KINDS, ExplorerConfig, RndConfig, RndState,
                        adaptive_teachers_log_reward, lggfn_aux_log_reward,
                        make_behavior_batch, sagfn_aux_log_reward)
from .metrics import (METRIC_COLUMNS, MetricRecord, bitseq_diversity,
                      bitseq_exploration_error, edge_marginals, edge_roc_auc,
                      expected_shd, mean_l1, modes_found)
from .objectives import tb_loss_batch, tb_delta_np, tb_loss_values_np
from .optim import make_optimizer, step
from .oracle import exact_terminal_distribution, target_distribution
from .policies import SamplerMod, make_policy, sample_batch

DEFAULTS = {
    "batch_size": 16,
    "eval_every": None,        # resolved to iterations (initial + final rows)
    "seed": 0,
    "eval_samples": 16000,
    "eval_posterior_samples": 1000,
    "enumeration_cap": 2 ** 20,
}

OPTIMIZER_DEFAULTS = {"kind": "adam", "lr": 1e-3, "logz_lr": 0.1}


@dataclass
class RunConfig:
    env: dict
    explorer: ExplorerConfig
    policy: dict
    optimizer: dict
    iterations: int
    batch_size: int = 16
    eval_every: int | None = None
    seed: int = 0
    eval_samples: int = 16000
    eval_posterior_samples: int = 1000
    enumeration_cap: int = 2 ** 20

    def __post_init__(self):
        if self.iterations < 1 or self.batch_size < 1:
            raise ConfigError("iterations and batch_size must be positive")
        if self.explorer.uses_aux and self.batch_size % 2 != 0:
            raise ConfigError("auxiliary strategies need an even batch size")

    @property
    def trajectory_budget(self) -> int:
        return self.iterations * self.batch_size

    def to_dict(self) -> dict:
        ex = self.explorer
        return {
            "env": dict(self.env),
            "explorer": {
                "kind": ex.kind, "lambda": ex.lam, "epsilon": ex.epsilon,
                "temperature": ex.temperature,
                "rnd": {"hidden": list(ex.rnd.hidden),
                        "output_dim": ex.rnd.output_dim, "lr": ex.rnd.lr},
                "at_alpha": ex.at_alpha, "at_c": ex.at_c, "at_eps": ex.at_eps,
                "beta_e_main": ex.beta_e_main, "beta_e_aux": ex.beta_e_aux,
                "beta_aux": ex.beta_aux, "beta_main": ex.beta_main,
                "beta_i": ex.beta_i, "aux_stop_after": ex.aux_stop_after,
            },
            "policy": dict(self.policy),
            "optimizer": dict(self.optimizer),
            "iterations": self.iterations,
            "batch_size": self.batch_size,
            "eval_every": self.eval_every,
            "seed": self.seed,
            "eval_samples": self.eval_samples,
            "eval_posterior_samples": self.eval_posterior_samples,
            "enumeration_cap": self.enumeration_cap,
        }


@dataclass
class RunLog:
    records: list[MetricRecord]
    config: dict
    wall_clock: dict[str, float]
    main_policy: object = None
    aux_policy: object = None
    checkpoint: dict | None = None

    @property
    def final(self) -> MetricRecord:
        return self.records[-1]


@dataclass
class TrainState:
    config: RunConfig
    env: Environment
    main_policy: object
    aux_policy: object
    main_opt: object
    aux_opt: object
    rnd: RndState | None
    rng: np.random.Generator
    iteration: int = 0
    consumed: int = 0
    mode_payloads: set = field(default_factory=set)
    window_losses: list[float] = field(default_factory=list)
    wall_clock: dict[str, float] = field(default_factory=lambda: {
        "sampling": 0.0, "updates": 0.0, "evaluation": 0.0})

    def aux_active(self) -> bool:
        cfg = self.config.explorer
        if not cfg.uses_aux:
            return False
        return cfg.aux_stop_after is None or self.iteration < cfg.aux_stop_after


def _aux_log_rewards(cfg: ExplorerConfig, state: TrainState,
                     aux_trajs: list[Trajectory]) -> np.ndarray:
    """Auxiliary rewards from the pre-update main agent, detached."""
    env, main = state.env, state.main_policy
    log_r = np.array([t.log_reward for t in aux_trajs])
    if cfg.kind == "lggfn":
        losses = tb_loss_values_np(main, env, aux_trajs)
        return np.array([lggfn_aux_log_reward(lr, lv, cfg.lam)
                         for lr, lv in zip(log_r, losses)])
    if cfg.kind == "adaptive_teachers":
        deltas = -tb_delta_np(main, env, aux_trajs)
        return np.array([adaptive_teachers_log_reward(d, lr, cfg)
                         for d, lr in zip(deltas, log_r)])
    return np.array([sagfn_aux_log_reward(lr, t, state.rnd, env,
                                          cfg.beta_aux, cfg.beta_i)
                     for lr, t in zip(log_r, aux_trajs)])


def _update(policy, opt, env, trajectories, log_rewards=None) -> float:
    loss = tb_loss_batch(policy, env, trajectories, log_rewards)
    value = float(loss.value)
    if not np.isfinite(value):
        raise NonFiniteLoss(f"training loss became {value}")
    ad.backward(loss)
    step(opt, policy.store)
    return value


def train_iteration(state: TrainState) -> float:
    """One pass of the training loop; returns the main update's loss."""
    cfg = state.config.explorer
    env = state.env
    t0 = time.perf_counter()
    if state.aux_active():
        main_trajs, aux_trajs = make_behavior_batch(
            cfg, state.main_policy, state.aux_policy, env,
            state.config.batch_size, state.rng)
    else:
        main_trajs = sample_batch(state.main_policy, env, SamplerMod(),
                                  state.rng, state.config.batch_size)
        aux_trajs = []
    state.wall_clock["sampling"] += time.perf_counter() - t0

    t0 = time.perf_counter()
    main_loss = None
    if aux_trajs:
        version_before = state.main_policy.store.version
        aux_log_r = _aux_log_rewards(cfg, state, aux_trajs)
        assert state.main_policy.store.version == version_before, \
            "auxiliary reward must use the iteration's starting main parameters"
        _update(state.aux_policy, state.aux_opt, env, aux_trajs, aux_log_r)
        if cfg.kind == "sagfn_rnd":
            feats = env.encode_batch([s for t in aux_trajs for s in t.states])
            state.rnd.update(feats)
        combined = main_trajs + aux_trajs
        main_log_r = None
        if cfg.kind == "sagfn_rnd" and cfg.beta_main != 1.0:
            main_log_r = np.array([t.log_reward for t in combined]) + np.log(cfg.beta_main)
        main_loss = _update(state.main_policy, state.main_opt, env, combined, main_log_r)
    else:
        main_loss = _update(state.main_policy, state.main_opt, env, main_trajs)
    state.wall_clock["updates"] += time.perf_counter() - t0

    state.consumed += len(main_trajs) + len(aux_trajs)
    for traj in main_trajs + aux_trajs:
        if env.has_modes and env.is_mode(traj.terminal):
            state.mode_payloads.add(traj.terminal.payload)
    state.iteration += 1
    state.window_losses.append(main_loss)
    return main_loss


def _eval_rng(seed: int, eval_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, 7777, eval_index]))


def evaluate(state: TrainState, eval_index: int) -> MetricRecord:
    """Metric row for the current parameters; never consumes budget."""
    config, env = state.config, state.env
    t0 = time.perf_counter()
    rng = _eval_rng(config.seed, eval_index)
    if state.window_losses:
        loss = float(np.mean(state.window_losses))
        state.window_losses.clear()
    else:
        probe = sample_batch(state.main_policy, env, SamplerMod(), rng,
                             min(config.batch_size, 64))
        loss = float(np.mean(tb_loss_values_np(state.main_policy, env, probe)))
    record = MetricRecord(iteration=state.iteration,
                          trajectories_consumed=state.consumed,
                          mean_tb_loss=loss)

    enumerable = env.enumerable(config.enumeration_cap)
    if enumerable:
        learned = exact_terminal_distribution(state.main_policy, env,
                                              config.enumeration_cap)
        target = target_distribution(env, config.enumeration_cap)
        record.mean_l1 = mean_l1(learned, target)
    if env.has_modes:
        record.modes_found = len(state.mode_payloads)

    kind = config.env["kind"]
    if kind == "bitseq":
        samples = [t.terminal for t in sample_batch(
            state.main_policy, env, SamplerMod(), rng, config.eval_samples)]
        record.diversity = bitseq_diversity(samples, env)
        record.exploration_error = bitseq_exploration_error(samples, env)
    elif kind == "bayes_dag" and env.ground_truth is not None:
        samples = sample_batch(state.main_policy, env, SamplerMod(), rng,
                               config.eval_posterior_samples)
        adjacencies = [env.adjacency(t.terminal) for t in samples]
        record.e_shd = expected_shd(adjacencies, env.ground_truth)
        try:
            record.roc_auc = edge_roc_auc(edge_marginals(adjacencies, env.d),
                                          env.ground_truth)
        except DegenerateLabels:
            record.roc_auc = None    # truth has no edges (or all edges)
    state.wall_clock["evaluation"] += time.perf_counter() - t0
    return record


def init_state(config: RunConfig) -> TrainState:
    env = make_env(config.env)
    seeds = np.random.SeedSequence(config.seed).spawn(4)
    main = make_policy(env, config.policy, _seed_int(seeds[0]))
    opt_cfg = {**OPTIMIZER_DEFAULTS, **config.optimizer}
    overrides = {"logZ": opt_cfg["logz_lr"]}
    main_opt = make_optimizer(opt_cfg["kind"], main.store, opt_cfg["lr"], overrides)
    aux = aux_opt = rnd = None
    if config.explorer.uses_aux:
        aux = make_policy(env, config.policy, _seed_int(seeds[1]))
        aux_opt = make_optimizer(opt_cfg["kind"], aux.store, opt_cfg["lr"], overrides)
        if config.explorer.kind == "sagfn_rnd":
            rnd = RndState(env.encoding_dim, config.explorer.rnd, _seed_int(seeds[2]))
    rng = np.random.default_rng(seeds[3])
    return TrainState(config, env, main, aux, main_opt, aux_opt, rnd, rng)


def _seed_int(seed_seq: np.random.SeedSequence) -> int:
    return int(seed_seq.generate_state(1)[0])


def run(config: RunConfig) -> RunLog:
    """Execute a full training run; deterministic given the config seed."""
    state = init_state(config)
    eval_every = config.eval_every or config.iterations
    records = [evaluate(state, 0)]
    eval_index = 1
    try:
        for it in range(1, config.iterations + 1):
            train_iteration(state)
            if it % eval_every == 0 or it == config.iterations:
                records.append(evaluate(state, eval_index))
                eval_index += 1
    except NonFiniteLoss as err:
        err.runlog = _finish(state, records)
        raise
    return _finish(state, records)


def _finish(state: TrainState, records: list[MetricRecord]) -> RunLog:
    return RunLog(records=records, config=state.config.to_dict(),
                  wall_clock=dict(state.wall_clock),
                  main_policy=state.main_policy, aux_policy=state.aux_policy,
                  checkpoint=checkpoint_dict(state))


def checkpoint_dict(state: TrainState) -> dict:
    out = {"schema_version": 1,
           "main": {"policy": state.main_policy.describe(),
                    "params": state.main_policy.store.state_dict()}}
    if state.aux_policy is not None:
        out["aux"] = {"policy": state.aux_policy.describe(),
                      "params": state.aux_policy.store.state_dict()}
    return out


def float_repr(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def metrics_csv_lines(runlog: RunLog) -> list[str]:
    """Fixed-order CSV with a schema comment; absent metrics omit their columns."""
    present = [c for c in METRIC_COLUMNS
               if any(getattr(r, c) is not None for r in runlog.records)]
    header = ["iteration", "trajectories_consumed", "mean_tb_loss", *present]
    lines = ["# schema_version=1", ",".join(header)]
    for r in runlog.records:
        row = [str(r.iteration), str(r.trajectories_consumed),
               float_repr(r.mean_tb_loss)]
        row.extend(float_repr(getattr(r, c)) for c in present)
        lines.append(",".join(row))
    return lines


def write_run_outputs(runlog: RunLog, out_dir) -> None:
    from pathlib import Path
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.csv").write_text("\n".join(metrics_csv_lines(runlog)) + "\n")
    (out / "config.resolved.json").write_text(
        json.dumps(runlog.config, indent=2, sort_keys=True) + "\n")
    if runlog.checkpoint is not None:
        (out / "checkpoint.json").write_text(
            json.dumps(runlog.checkpoint, sort_keys=True) + "\n")
