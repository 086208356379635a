"""Shared test helpers: independent oracle paths and random-state builders."""

import math

import numpy as np

from fusionlab import fock, qubits
from fusionlab.qubits import AnalyzerSetting, QubitState, ket

SQRT2 = math.sqrt(2.0)


def kraus_fusion(o, p, outcome="+"):
    """Qubit-level fusion path: Kraus operator, branch dephasing, white noise.

    Independent of the optical pipeline; used as the oracle side of the
    two-route equivalence checks.
    """
    c12 = QubitState((1, 2), vector=(ket("H+") + ket("V-")) / SQRT2)
    c34 = QubitState((3, 4), vector=(ket("H+") + ket("V-")) / SQRT2)
    joint = qubits.tensor(c12, c34)
    prob, fused = qubits.fusion_kraus(joint, 2, 3, outcome)
    fused = qubits.dephase_coherence(fused, o)
    fused = qubits.apply_white_noise(fused, p)
    return prob, fused


def fock_word_expectation(state, paths, word):
    """Pauli-word expectation measured optically: plates, then H/V detection.

    X analysis is a half-wave plate at pi/8, Y analysis a quarter-wave plate
    at pi/4, Z analysis a bare polarizer; outcome H counts +1, V counts -1.
    """
    s = state
    for path, letter in zip(paths, word):
        if letter == "X":
            s = fock.apply_waveplate(s, path, "half", math.pi / 8)
        elif letter == "Y":
            s = fock.apply_waveplate(s, path, "quarter", math.pi / 4)
        elif letter != "Z":
            raise ValueError(f"unsupported letter {letter!r}")
    total = 0.0
    stack = [(s, 0, 1.0, 1)]
    while stack:
        cur, k, prob, sign = stack.pop()
        if k == len(paths):
            total += prob * sign
            continue
        branches = fock.detect_polarization(cur, paths[k], AnalyzerSetting.z())
        for outcome, p_out, branch in branches:
            if p_out == 0.0:
                continue
            flip = 1 if outcome == "H" else -1
            stack.append((branch, k + 1, prob * p_out, sign * flip))
    return total


def random_fock_state(rng, paths, n_terms=3, photons_per_term=4):
    registry = fock.registry_for(paths)
    terms = {}
    for _ in range(n_terms):
        occ = [0] * len(registry)
        for _ in range(photons_per_term):
            occ[rng.integers(len(registry))] += 1
        amp = complex(rng.normal(), rng.normal())
        occ = tuple(occ)
        terms[occ] = terms.get(occ, 0j) + amp
    return fock.FockState(registry, terms).normalize()


def random_qubit_state(rng, labels):
    dim = 2 ** len(labels)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return QubitState(labels, vector=v / np.linalg.norm(v))
