"""Folding-energy oracle, CAI/GC properties and the codon environment."""

import itertools
import math

import numpy as np
import pytest

from gflowlab.envs import CodonEnv, codon_adaptation_index, gc_content, nussinov_mfe
from gflowlab.envs.codon_usage import CODON_USAGE, GENETIC_CODE, SYNONYMOUS
from gflowlab.envs.rna import MIN_HAIRPIN, PAIR_ENERGY, transcribe
from gflowlab.errors import IncompleteSequence, InvalidBase


def enumerate_min_energy(rna: str) -> float:
    """Oracle: enumerate every non-crossing structure and take the best energy."""

    def structures(i, j):
        if i >= j:
            yield ()
            return
        yield from structures(i + 1, j)
        for k in range(i + MIN_HAIRPIN + 1, j + 1):
            energy = PAIR_ENERGY.get((rna[i], rna[k]))
            if energy is None:
                continue
            for inner in structures(i + 1, k - 1):
                for outer in structures(k + 1, j):
                    yield ((i, k, energy),) + inner + outer

    best = 0.0
    for structure in structures(0, len(rna) - 1):
        total = sum(e for _, _, e in structure)
        best = min(best, total)
    return best


def test_no_pairs_zero_energy():
    assert nussinov_mfe("AAAA") == 0.0
    assert nussinov_mfe("") == 0.0


def test_three_gc_pairs():
    seq = "GGGAAACCC"
    assert nussinov_mfe(seq) == -9.0
    assert enumerate_min_energy(transcribe(seq)) == -9.0


def test_invalid_base():
    with pytest.raises(InvalidBase):
        nussinov_mfe("AXGC")


def test_dna_transcription_accepted():
    assert nussinov_mfe("GGGTTTCCC") == nussinov_mfe("GGGUUUCCC")


def test_dp_matches_enumeration_random_strings(rng):
    for _ in range(30):
        length = int(rng.integers(0, 15))
        seq = "".join(rng.choice(list("ACGU"), size=length))
        assert nussinov_mfe(seq) == enumerate_min_energy(seq)


def test_appending_never_raises_energy(rng):
    for _ in range(20):
        seq = "".join(rng.choice(list("ACGU"), size=12))
        energies = [nussinov_mfe(seq[:k]) for k in range(len(seq) + 1)]
        assert all(b <= a for a, b in zip(energies, energies[1:]))


def test_gc_content():
    assert gc_content("ATGC") == 0.5
    assert gc_content("AAAA") == 0.0
    assert gc_content("GGCC") == 1.0


def test_cai_all_optimal_is_exactly_one():
    protein = "MKTAYIAKQR"
    best = [max(SYNONYMOUS[aa], key=lambda c: CODON_USAGE[c]) for aa in protein]
    assert codon_adaptation_index(best) == 1.0


def test_cai_below_one_for_rare_codons():
    assert codon_adaptation_index(["CGT"]) < 1.0     # rare arginine codon


# -- environment ---------------------------------------------------------------

def test_met_only_protein_forced():
    env = CodonEnv("M")
    assert env.state_count() == 2
    states = env.enumerate_states()
    full = states[-1]
    assert env.mrna(full) == "ATG"
    assert gc_content(env.mrna(full)) == pytest.approx(1.0 / 3.0)
    assert env.forward_actions(states[0]) == [0]
    assert env.forward_actions(full) == [env.exit_action]


def test_decoding_reproduces_protein(rng):
    protein = "MKTAYIAKQR"
    env = CodonEnv(protein)
    for _ in range(50):
        s = env.initial_state()
        for t in range(env.length):
            s = env.apply(s, int(rng.integers(env.n_syn[t])))
        assert env.decode_protein(s) == protein


def test_incomplete_sequence_rejected():
    env = CodonEnv("MK")
    with pytest.raises(IncompleteSequence):
        env.reward(env.apply(env.initial_state(), 0))


def test_exit_only_at_full_length():
    env = CodonEnv("MKT")
    s = env.initial_state()
    for t in range(3):
        assert not env.forward_mask(s)[env.exit_action]
        s = env.apply(s, 0)
    assert env.forward_mask(s)[env.exit_action]
    assert env.forward_actions(s) == [env.exit_action]


def test_reward_positive_even_with_zero_weights():
    env = CodonEnv("MKT", w1=0.0, w2=0.0, w3=0.0)
    s = env.initial_state()
    for t in range(3):
        s = env.apply(s, 0)
    assert np.exp(env.log_reward(s)) > 0.0


def test_reward_components_combine():
    env = CodonEnv("MK", w1=2.0, w2=0.5, w3=3.0)
    s = env.apply(env.apply(env.initial_state(), 0), 0)
    seq = env.mrna(s)
    expected = (1e-6 + 2.0 * gc_content(seq) - 0.5 * nussinov_mfe(seq)
                + 3.0 * codon_adaptation_index(env.codons(s)))
    assert np.exp(env.log_reward(s)) == pytest.approx(expected, rel=1e-12)


def test_gc_maximal_when_gc_codons_available():
    env = CodonEnv("GPA")   # all three have codons with G/C-rich options
    best_gc = [max(SYNONYMOUS[aa], key=lambda c: gc_content(c)) for aa in "GPA"]
    indices = tuple(SYNONYMOUS[aa].index(c) for aa, c in zip("GPA", best_gc))
    s = env.initial_state()
    for k in indices:
        s = env.apply(s, k)
    got = gc_content(env.mrna(s))
    for other in env.enumerate_states():
        if len(other.payload) == 3:
            assert gc_content(env.mrna(other)) <= got + 1e-12


def test_usage_table_consistency():
    # every coding codon has a usage entry and synonym groups share an amino acid
    for codon, aa in GENETIC_CODE.items():
        if aa != "*":
            assert codon in CODON_USAGE
    for aa, codons in SYNONYMOUS.items():
        assert all(GENETIC_CODE[c] == aa for c in codons)
        assert max(CODON_USAGE[c] for c in codons) > 0
