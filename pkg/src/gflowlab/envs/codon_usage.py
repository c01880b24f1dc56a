"""Embedded reference tables for codon-level sequence design.

``GENETIC_CODE`` is the standard 64-codon table (DNA alphabet, stop codons
map to ``*``). ``CODON_USAGE`` holds approximate human codon-usage fractions
per amino acid; only the ratios within a synonymous family matter for the
adaptation index, so two-digit precision is adequate and documented here as
the bundled reference set.
"""

GENETIC_CODE = {
    "TTT": "F", "TTC": "F",
    "TTA": "L", "TTG": "L", "CTT": "L", "CTC": "L", "CTA": "L", "CTG": "L",
    "ATT": "I", "ATC": "I", "ATA": "I",
    "ATG": "M",
    "GTT": "V", "GTC": "V", "GTA": "V", "GTG": "V",
    "TCT": "S", "TCC": "S", "TCA": "S", "TCG": "S", "AGT": "S", "AGC": "S",
    "CCT": "P", "CCC": "P", "CCA": "P", "CCG": "P",
    "ACT": "T", "ACC": "T", "ACA": "T", "ACG": "T",
    "GCT": "A", "GCC": "A", "GCA": "A", "GCG": "A",
    "TAT": "Y", "TAC": "Y",
    "CAT": "H", "CAC": "H",
    "CAA": "Q", "CAG": "Q",
    "AAT": "N", "AAC": "N",
    "AAA": "K", "AAG": "K",
    "GAT": "D", "GAC": "D",
    "GAA": "E", "GAG": "E",
    "TGT": "C", "TGC": "C",
    "TGG": "W",
    "CGT": "R", "CGC": "R", "CGA": "R", "CGG": "R", "AGA": "R", "AGG": "R",
    "GGT": "G", "GGC": "G", "GGA": "G", "GGG": "G",
    "TAA": "*", "TAG": "*", "TGA": "*",
}

CODON_USAGE = {
    "TTT": 0.46, "TTC": 0.54,
    "TTA": 0.08, "TTG": 0.13, "CTT": 0.13, "CTC": 0.20, "CTA": 0.07, "CTG": 0.40,
    "ATT": 0.36, "ATC": 0.47, "ATA": 0.17,
    "ATG": 1.00,
    "GTT": 0.18, "GTC": 0.24, "GTA": 0.12, "GTG": 0.46,
    "TCT": 0.19, "TCC": 0.22, "TCA": 0.15, "TCG": 0.05, "AGT": 0.15, "AGC": 0.24,
    "CCT": 0.29, "CCC": 0.32, "CCA": 0.28, "CCG": 0.11,
    "ACT": 0.25, "ACC": 0.36, "ACA": 0.28, "ACG": 0.11,
    "GCT": 0.27, "GCC": 0.40, "GCA": 0.23, "GCG": 0.11,
    "TAT": 0.44, "TAC": 0.56,
    "CAT": 0.42, "CAC": 0.58,
    "CAA": 0.27, "CAG": 0.73,
    "AAT": 0.47, "AAC": 0.53,
    "AAA": 0.43, "AAG": 0.57,
    "GAT": 0.46, "GAC": 0.54,
    "GAA": 0.42, "GAG": 0.58,
    "TGT": 0.46, "TGC": 0.54,
    "TGG": 1.00,
    "CGT": 0.08, "CGC": 0.18, "CGA": 0.11, "CGG": 0.20, "AGA": 0.21, "AGG": 0.21,
    "GGT": 0.16, "GGC": 0.34, "GGA": 0.25, "GGG": 0.25,
}

SYNONYMOUS = {}
for codon, aa in GENETIC_CODE.items():
    if aa != "*":
        SYNONYMOUS.setdefault(aa, []).append(codon)
for aa in SYNONYMOUS:
    SYNONYMOUS[aa].sort()

RELATIVE_ADAPTIVENESS = {}
for aa, codons in SYNONYMOUS.items():
    best = max(CODON_USAGE[c] for c in codons)
    for c in codons:
        RELATIVE_ADAPTIVENESS[c] = CODON_USAGE[c] / best
