"""Command-line harness: run experiments, sweep grids, emit plot-ready CSV.

Configs are JSON documents mirroring RunConfig plus an output directory and
optional sweep axes (a list in place of any scalar field). Unknown keys are
rejected; the fully-resolved config is echoed next to the metrics so a run
can be reproduced bit-for-bit.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .errors import ConfigError, MissingMetrics, NonFiniteLoss
from .explorers import ExplorerConfig, RndConfig
from .trainer import RunConfig, run, write_run_outputs

OUTPUT_ROOT_ENV = "GFLOWLAB_OUT"

_SCALAR = object()
_SCALAR_LIST = object()

# field path -> (required, default); value shape is scalar unless noted
CONFIG_SCHEMA = {
    "out": (False, None),
    "env.kind": (True, None),
    "env.n_states": (False, None), "env.r_end": (False, 101.0), "env.r_mid": (False, 1.0),
    "env.dims": (False, None), "env.height": (False, None),
    "env.r0": (False, 1e-2), "env.r1": (False, 0.5), "env.r2": (False, 2.0),
    "env.half_length": (False, None), "env.r_mode": (False, 1.0),
    "env.r_deceptive": (False, 1e-3), "env.deceptive_max_len": (False, 4),
    "env.r_floor": (False, 1e-6),
    "env.n_nodes": (False, None), "env.edge_prob": (False, 0.5),
    "env.n_samples": (False, 100), "env.noise_sigma": (False, 1.0),
    "env.data_seed": (False, 0), "env.dataset_csv": (False, None),
    "env.alpha_mu": (False, 1.0), "env.alpha_w": (False, None),
    "env.protein": (False, None), "env.w1": (False, 1.0),
    "env.w2": (False, 0.1), "env.w3": (False, 1.0),
    "explorer.kind": (False, "on_policy"),
    "explorer.lambda": (False, 1.0),
    "explorer.epsilon": (False, 0.0),
    "explorer.temperature": (False, 1.0),
    "explorer.rnd.hidden": (False, [64]),
    "explorer.rnd.output_dim": (False, 16),
    "explorer.rnd.lr": (False, 1e-3),
    "explorer.at_alpha": (False, 0.5), "explorer.at_c": (False, 19.0),
    "explorer.at_eps": (False, 1e-8),
    "explorer.beta_e_main": (False, 0.0), "explorer.beta_e_aux": (False, 0.25),
    "explorer.beta_aux": (False, 1.0), "explorer.beta_main": (False, 1.0),
    "explorer.beta_i": (False, 1.0),
    "explorer.aux_stop_after": (False, None),
    "policy.kind": (False, "mlp"),
    "policy.hidden": (False, [256, 256]),
    "policy.activation": (False, "relu"),
    "optimizer.kind": (False, "adam"),
    "optimizer.lr": (False, 1e-3),
    "optimizer.logz_lr": (False, 0.1),
    "iterations": (False, None),
    "trajectory_budget": (False, None),
    "batch_size": (False, 16),
    "eval_every": (False, None),
    "seed": (False, 0),
    "eval_samples": (False, 16000),
    "eval_posterior_samples": (False, 1000),
    "enumeration_cap": (False, 2 ** 20),
}

# fields whose scalar value is itself a list (never a sweep axis)
LIST_VALUED = {"explorer.rnd.hidden", "policy.hidden"}


def _flatten(doc: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in doc.items():
        path = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{path}."))
        else:
            flat[path] = value
    return flat


def _unflatten(flat: dict) -> dict:
    doc: dict = {}
    for path, value in flat.items():
        parts = path.split(".")
        node = doc
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return doc


def validate_config(doc: dict, allow_axes: bool = False) -> tuple[dict, dict]:
    """Resolve defaults; returns (flat config, sweep axes)."""
    flat = _flatten(doc)
    axes = {}
    for path in flat:
        if path not in CONFIG_SCHEMA:
            raise ConfigError(f"unknown field: {path}")
    for path, (required, default) in CONFIG_SCHEMA.items():
        if path in flat:
            continue
        if required:
            raise ConfigError(f"missing field: {path}")
        flat[path] = default
    for path, value in list(flat.items()):
        if isinstance(value, list) and path not in LIST_VALUED:
            if not allow_axes:
                raise ConfigError(f"field {path} must be a scalar, got a list")
            if not value:
                raise ConfigError(f"sweep axis {path} is empty")
            axes[path] = value
    if flat["iterations"] is None and flat["trajectory_budget"] is None:
        raise ConfigError("missing field: iterations (or trajectory_budget)")
    return flat, axes


def build_run_config(flat: dict) -> RunConfig:
    env = {k.split(".", 1)[1]: v for k, v in flat.items()
           if k.startswith("env.") and v is not None}
    explorer = ExplorerConfig(
        kind=flat["explorer.kind"], lam=flat["explorer.lambda"],
        epsilon=flat["explorer.epsilon"], temperature=flat["explorer.temperature"],
        rnd=RndConfig(tuple(flat["explorer.rnd.hidden"]),
                      flat["explorer.rnd.output_dim"], flat["explorer.rnd.lr"]),
        at_alpha=flat["explorer.at_alpha"], at_c=flat["explorer.at_c"],
        at_eps=flat["explorer.at_eps"],
        beta_e_main=flat["explorer.beta_e_main"], beta_e_aux=flat["explorer.beta_e_aux"],
        beta_aux=flat["explorer.beta_aux"], beta_main=flat["explorer.beta_main"],
        beta_i=flat["explorer.beta_i"], aux_stop_after=flat["explorer.aux_stop_after"])
    policy = {"kind": flat["policy.kind"], "hidden": list(flat["policy.hidden"]),
              "activation": flat["policy.activation"]}
    optimizer = {"kind": flat["optimizer.kind"], "lr": flat["optimizer.lr"],
                 "logz_lr": flat["optimizer.logz_lr"]}
    batch_size = flat["batch_size"]
    iterations = flat["iterations"]
    if iterations is None:
        budget = flat["trajectory_budget"]
        if budget % batch_size != 0:
            raise ConfigError(f"trajectory_budget {budget} is not a multiple of "
                              f"batch_size {batch_size}")
        iterations = budget // batch_size
    return RunConfig(env=env, explorer=explorer, policy=policy, optimizer=optimizer,
                     iterations=iterations, batch_size=batch_size,
                     eval_every=flat["eval_every"], seed=flat["seed"],
                     eval_samples=flat["eval_samples"],
                     eval_posterior_samples=flat["eval_posterior_samples"],
                     enumeration_cap=flat["enumeration_cap"])


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as err:
        raise ConfigError(f"invalid JSON in {path}: {err}")


def _resolve_out_dir(flat: dict, cli_out: str | None) -> Path:
    out = cli_out or flat.get("out")
    if out is None:
        raise ConfigError("missing field: out (or pass --out)")
    root = os.environ.get(OUTPUT_ROOT_ENV)
    path = Path(out)
    if root and not path.is_absolute():
        path = Path(root) / path
    return path


def _check_out_dir(path: Path, force: bool) -> None:
    if path.exists() and any(path.iterdir()) and not force:
        raise ConfigError(f"output directory {path} is not empty (use --force)")


def cmd_run(args) -> int:
    doc = _load_json(args.config)
    flat, _ = validate_config(doc)
    out_dir = _resolve_out_dir(flat, args.out)
    _check_out_dir(out_dir, args.force)
    config = build_run_config(flat)
    try:
        runlog = run(config)
    except NonFiniteLoss as err:
        if err.runlog is not None:
            write_run_outputs(err.runlog, out_dir)
        print(f"error: non-finite loss: {err}", file=sys.stderr)
        return 2
    write_run_outputs(runlog, out_dir)
    return 0


def _sweep_cell_name(assignment: dict) -> str:
    return "__".join(f"{path}={value}" for path, value in assignment.items())


def _run_cell(payload) -> tuple[str, str, dict | None]:
    """One sweep cell in a worker process; returns (name, status, final row)."""
    flat, cell_dir = payload
    try:
        config = build_run_config(flat)
        runlog = run(config)
        write_run_outputs(runlog, cell_dir)
        return (str(cell_dir), "ok", runlog.final.as_dict())
    except NonFiniteLoss as err:
        if err.runlog is not None:
            write_run_outputs(err.runlog, cell_dir)
        return (str(cell_dir), "non_finite_loss", None)
    except Exception as err:          # defect in the cell, not the sweep
        return (str(cell_dir), f"failed: {err}", None)


def cmd_sweep(args) -> int:
    doc = _load_json(args.config)
    flat, axes = validate_config(doc, allow_axes=True)
    if not axes:
        raise ConfigError("sweep config needs at least one list-valued axis")
    if "seed" not in axes:
        raise ConfigError("sweep config needs a seed list")
    out_root = _resolve_out_dir(flat, args.out)
    _check_out_dir(out_root, args.force)
    seed_values = axes.pop("seed")
    cell_axes = sorted(axes.items())
    jobs = []
    for combo in itertools.product(*(values for _, values in cell_axes)):
        assignment = dict(zip((path for path, _ in cell_axes), combo))
        for seed in seed_values:
            cell_flat = dict(flat)
            cell_flat.update(assignment)
            cell_flat["seed"] = seed
            cell_dir = out_root / _sweep_cell_name({**assignment, "seed": seed})
            jobs.append((assignment, seed, (cell_flat, cell_dir)))

    results = {}
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(_run_cell, (payload for _, _, payload in jobs)))
    else:
        outcomes = [_run_cell(payload) for _, _, payload in jobs]
    for (assignment, seed, _), outcome in zip(jobs, outcomes):
        results.setdefault(tuple(sorted(assignment.items())), []).append(outcome)

    summary_path = out_root / "summary.csv"
    any_failed = _write_summary(summary_path, cell_axes, results)
    return 2 if any_failed else 0


def _write_summary(path: Path, cell_axes, results) -> bool:
    metric_names: list[str] = []
    for outcomes in results.values():
        for _, status, final in outcomes:
            if final:
                for name, value in final.items():
                    if value is not None and name not in metric_names:
                        metric_names.append(name)
    any_failed = False
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = [p for p, _ in cell_axes] + ["n_seeds", "status"]
        for name in metric_names:
            header += [f"{name}_mean", f"{name}_std"]
        writer.writerow(header)
        for key in sorted(results):
            outcomes = results[key]
            finals = [final for _, status, final in outcomes if final is not None]
            statuses = [status for _, status, _ in outcomes]
            ok = all(s == "ok" for s in statuses)
            any_failed = any_failed or not ok
            row = [value for _, value in key]
            row += [len(outcomes), "ok" if ok else ";".join(sorted(set(statuses)))]
            for name in metric_names:
                values = [f[name] for f in finals if f.get(name) is not None]
                if values:
                    row += [repr(float(np.mean(values))), repr(float(np.std(values)))]
                else:
                    row += ["", ""]
            writer.writerow(row)
    return any_failed


def cmd_plotdata(args) -> int:
    rows = []
    missing = []
    for run_dir in args.run_dirs:
        run_path = Path(run_dir)
        metrics_path = run_path / "metrics.csv"
        config_path = run_path / "config.resolved.json"
        if not metrics_path.exists() or not config_path.exists():
            missing.append(str(run_path))
            continue
        config = json.loads(config_path.read_text())
        method = config["explorer"]["kind"]
        seed = config["seed"]
        with open(metrics_path) as fh:
            lines = [line for line in fh if not line.startswith("#")]
        reader = csv.DictReader(lines)
        for record in reader:
            x = record["trajectories_consumed" if args.x == "trajectories" else "iteration"]
            for column, value in record.items():
                if column in ("iteration", "trajectories_consumed") or value == "":
                    continue
                rows.append((method, seed, x, column, value))
    if missing:
        for path in missing:
            print(f"error: missing metrics in {path}", file=sys.stderr)
        return 1
    writer = csv.writer(sys.stdout)
    writer.writerow(["method", "seed", "x", "metric", "value"])
    writer.writerows(rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gflowlab",
                                     description="GFlowNet experiment harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one training run from a JSON config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--force", action="store_true",
                       help="allow writing into a non-empty directory")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run the cartesian product of sweep axes")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--force", action="store_true")
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.set_defaults(func=cmd_sweep)

    p_plot = sub.add_parser("plotdata", help="emit long-format CSV from run dirs")
    p_plot.add_argument("run_dirs", nargs="+")
    p_plot.add_argument("--x", choices=("trajectories", "iterations"),
                        default="trajectories")
    p_plot.set_defaults(func=cmd_plotdata)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
