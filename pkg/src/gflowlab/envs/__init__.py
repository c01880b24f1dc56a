"""Benchmark environments and their construction from config dictionaries."""

from __future__ import annotations

import csv

import numpy as np

from ..errors import ConfigError
from .bayesdag import BayesDagEnv
from .bge import BgeHyperparams, BgeScore, generate_er_scm
from .bitseq import BitSeqEnv, catalan, is_balanced
from .chain import ChainEnv
from .codon import CodonEnv
from .hypergrid import HypergridEnv, hypergrid_reward
from .rna import codon_adaptation_index, gc_content, nussinov_mfe

__all__ = [
    "BayesDagEnv", "BgeHyperparams", "BgeScore", "BitSeqEnv", "ChainEnv",
    "CodonEnv", "HypergridEnv", "catalan", "generate_er_scm", "gc_content",
    "codon_adaptation_index", "hypergrid_reward", "is_balanced", "make_env",
    "nussinov_mfe", "load_dataset_csv", "save_dataset_csv",
]


def load_dataset_csv(path) -> tuple[list[str], np.ndarray]:
    """Read a samples-by-nodes dataset; header row holds the node names."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader]
    return header, np.asarray(rows)


def save_dataset_csv(path, names, data) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        writer.writerows(np.asarray(data).tolist())


def make_env(cfg: dict):
    """Build an environment from a resolved config section."""
    kind = cfg.get("kind")
    if kind == "chain":
        return ChainEnv(cfg["n_states"], cfg.get("r_end", 101.0), cfg.get("r_mid", 1.0))
    if kind == "hypergrid":
        return HypergridEnv(cfg["dims"], cfg["height"], cfg.get("r0", 1e-2),
                            cfg.get("r1", 0.5), cfg.get("r2", 2.0))
    if kind == "bitseq":
        return BitSeqEnv(cfg["half_length"], cfg.get("r_mode", 1.0),
                         cfg.get("r_deceptive", 1e-3),
                         cfg.get("deceptive_max_len", 4),
                         cfg.get("r_floor", 1e-6))
    if kind == "bayes_dag":
        hp = BgeHyperparams(cfg.get("alpha_mu", 1.0), cfg.get("alpha_w"))
        if cfg.get("dataset_csv"):
            _, data = load_dataset_csv(cfg["dataset_csv"])
            truth = None
        else:
            truth, data = generate_er_scm(cfg["n_nodes"], cfg.get("edge_prob", 0.5),
                                          cfg.get("n_samples", 100),
                                          cfg.get("noise_sigma", 1.0),
                                          cfg.get("data_seed", 0))
        return BayesDagEnv(data, ground_truth=truth, hyperparams=hp)
    if kind == "codon":
        return CodonEnv(cfg["protein"], cfg.get("w1", 1.0), cfg.get("w2", 0.1),
                        cfg.get("w3", 1.0))
    raise ConfigError(f"unknown environment kind {kind!r}")
