"""Tabletop pipeline: two Bell-pair sources, a fusion PBS, and post-selection.

Source 1 emits photons on paths 1 and 2, source 2 on paths 3 and 4.  Half-wave
plates on paths 2 and 4 rotate each pair into the two-qubit-cluster form
|H+> + |V->.  Photons 2 and 3 meet at the PBS; accepting exactly one photon on
the detector output and analyzing it in the +/- basis leaves photons (1, 3, 4)
in the three-photon linear cluster (|+H+> +/- |-V->)/sqrt(2).

Partial distinguishability is modeled by splitting the wavepacket of the
photon entering the PBS from source 2 (path 3) into matched/orthogonal
components before the beam splitter; this fixed choice is physically
symmetric and keeps runs reproducible.
"""

from __future__ import annotations

import math

from . import fock
from . import qubits
from .qubits import HADAMARD, NoiseModel, QubitState, gaussian_overlap

SOURCE_1 = (1, 2)
SOURCE_2 = (3, 4)
DETECTOR_PATH = 2   # PBS output watched by the heralding detector
KEPT_PATH = 3       # PBS output kept in the cluster
CLUSTER_LABELS = (1, 3, 4)


def bell_pair(label_i: int, label_j: int) -> fock.FockState:
    """(|HH> + |VV>)/sqrt(2) on two fresh spatial paths."""
    hh = fock.photons((label_i, "H"), (label_j, "H"))
    vv = fock.photons((label_i, "V"), (label_j, "V"))
    return (hh + vv) * (1.0 / math.sqrt(2.0))


def two_qubit_cluster(pair: fock.FockState, rotated_path: int) -> fock.FockState:
    """Rotate one photon of a Bell pair from H/V to +/- with a half-wave plate."""
    return fock.apply_waveplate(pair, rotated_path, "half", math.pi / 8)


def overlap_from_delay(delay_fs: float, coherence_time_fs: float = 740.0) -> float:
    """Wavepacket overlap o = exp(-(tau/tau_c)^2); o(0) = 1, decreasing in |tau|."""
    return gaussian_overlap(delay_fs, coherence_time_fs)


def fuse_type1_fock(noise: NoiseModel, detector_outcome: str = "+"):
    """Run the optical pipeline and return (joint probability, FockState).

    The probability is P(exactly one photon at the detector AND the requested
    +/- outcome); for the ideal input it is 1/4 per outcome, 1/2 summed.
    """
    overlap = noise.effective_overlap()
    c12 = two_qubit_cluster(bell_pair(*SOURCE_1), SOURCE_1[1])
    c34 = two_qubit_cluster(bell_pair(*SOURCE_2), SOURCE_2[1])
    state = fock.tensor(c12, c34)
    state = fock.split_temporal(state, SOURCE_2[0], overlap)
    state = fock.apply_pbs(state, SOURCE_1[1], SOURCE_2[0], DETECTOR_PATH, KEPT_PATH)
    p_success, state = fock.project_photon_count(state, DETECTOR_PATH, 1)
    if p_success == 0.0:
        return 0.0, state
    branches = fock.detect_polarization(state, DETECTOR_PATH, qubits.AnalyzerSetting.x())
    for outcome, p_outcome, branch in branches:
        if outcome == detector_outcome:
            return p_success * p_outcome, branch
    raise ValueError(f"unknown detector outcome {detector_outcome!r}")


def fuse_type1(noise: NoiseModel, detector_outcome: str = "+"):
    """Fuse two Bell pairs into the three-photon cluster on labels (1, 3, 4).

    Returns (joint probability of success and the requested detector outcome,
    post-selected state with white noise applied).  At overlap 1 and white
    noise 0 the "+" outcome is exactly (|+H+> + |-V->)/sqrt(2).
    """
    prob, branch = fuse_type1_fock(noise, detector_outcome)
    state = fock.to_qubit_state(branch)
    state = qubits.apply_white_noise(state, noise.white_noise)
    return prob, state


def cluster_to_ghz(state: QubitState) -> QubitState:
    """Hadamard the outer photons: ideal cluster -> (|HHH> + |VVV>)/sqrt(2)."""
    if state.n != 3:
        raise ValueError("expected a three-photon cluster state")
    out = qubits.apply_unitary(state, state.labels[0], HADAMARD)
    out = qubits.apply_unitary(out, state.labels[2], HADAMARD)
    return out
