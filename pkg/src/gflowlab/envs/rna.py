"""RNA sequence scores: base-pair-maximisation folding energy, GC content, CAI.

The folding energy is a Nussinov-style dynamic program with pair energies
GC = -3, AU = -2, GU = -1 and a minimum hairpin loop of three unpaired
bases. It is a documented proxy used for relative comparisons only, not a
thermodynamic model.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import InvalidBase
from .codon_usage import RELATIVE_ADAPTIVENESS

PAIR_ENERGY = {
    ("G", "C"): -3.0, ("C", "G"): -3.0,
    ("A", "U"): -2.0, ("U", "A"): -2.0,
    ("G", "U"): -1.0, ("U", "G"): -1.0,
}

MIN_HAIRPIN = 3


def transcribe(seq: str) -> str:
    return seq.upper().replace("T", "U")


def nussinov_mfe(seq: str) -> float:
    """Minimal total pairing energy of a non-crossing structure (<= 0)."""
    rna = transcribe(seq)
    for base in rna:
        if base not in "ACGU":
            raise InvalidBase(f"invalid base {base!r}")
    n = len(rna)
    if n == 0:
        return 0.0
    energy = np.zeros((n, n))
    for span in range(MIN_HAIRPIN + 1, n):
        for i in range(n - span):
            j = i + span
            best = energy[i + 1, j]
            for k in range(i + MIN_HAIRPIN + 1, j + 1):
                pair = PAIR_ENERGY.get((rna[i], rna[k]))
                if pair is None:
                    continue
                inner = energy[i + 1, k - 1] if k - 1 > i + 1 else 0.0
                rest = energy[k + 1, j] if k + 1 <= j else 0.0
                best = min(best, pair + inner + rest)
            energy[i, j] = best
    return float(energy[0, n - 1])


def gc_content(seq: str) -> float:
    if not seq:
        return 0.0
    return sum(1 for b in seq.upper() if b in "GC") / len(seq)


def codon_adaptation_index(codons: list[str]) -> float:
    """Geometric mean of relative synonymous-codon usage weights."""
    if not codons:
        raise ValueError("need at least one codon")
    log_sum = 0.0
    for codon in codons:
        if codon not in RELATIVE_ADAPTIVENESS:
            raise InvalidBase(f"codon {codon!r} is not a coding codon")
        log_sum += math.log(RELATIVE_ADAPTIVENESS[codon])
    return math.exp(log_sum / len(codons))
