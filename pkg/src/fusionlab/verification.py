"""Deterministic verification harness: histograms, interference scan, Mermin test.

Every experiment produces a :class:`RunReport` that is reproducible bit-exactly
from (settings, seed).  All randomness flows from one integer seed through a
single splitting rule: the generator for setting/point ``i`` is seeded with
``seed ^ i`` (see :func:`setting_seed`).

Exact outcome probabilities are always computed; sampling is layered on top
and switched off entirely with ``shots = 0``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import qubits, tabletop
from .errors import ValidationError
from .qubits import AnalyzerSetting, NoiseModel, QubitState

MERMIN_WORDS = ("XYY", "YXY", "YYX", "XXX")
LOCAL_REALISM_BOUND = 2.0
HYBRID_BOUND = 2.0 * math.sqrt(2.0)

DESIRED_DEFAULT = {"xzx": ("+H+", "-V-")}


def setting_seed(seed: int, index: int) -> int:
    """Per-setting/per-point seed: the master seed XOR the setting index."""
    return int(seed) ^ int(index)


def sample_multinomial(probabilities, shots: int, seed: int) -> np.ndarray:
    """Deterministic multinomial draw; counts sum to ``shots``."""
    p = np.asarray(probabilities, dtype=float)
    if np.any(p < -1e-12):
        raise ValueError("negative probability")
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {total!r}")
    if shots == 0:
        return np.zeros(len(p), dtype=np.int64)
    rng = np.random.default_rng(seed)
    return rng.multinomial(shots, p / total).astype(np.int64)


def significance(value: float, sigma: float, threshold: float) -> float:
    """How many standard deviations |value| exceeds the threshold by."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return (abs(value) - threshold) / sigma


# -- run reports ---------------------------------------------------------------


@dataclass
class RunReport:
    """Serializable record of one experiment.

    ``probabilities`` holds the exact outcome distribution (dict outcome ->
    probability, or point key -> distribution for scans); ``counts`` mirrors
    it with sampled integers and is None in exact mode; ``statistics`` holds
    the derived scalars.  Settings echo every input including the seed.
    """

    experiment: str
    settings: dict
    probabilities: dict
    counts: dict | None
    statistics: dict = field(default_factory=dict)

    def validate(self) -> "RunReport":
        for key, dist in self._distributions():
            total = sum(dist.values())
            if abs(total - 1.0) > 1e-10:
                raise ValidationError(
                    f"{self.experiment}: probabilities for {key} sum to {total!r}")
            if self.counts is not None:
                counts = self.counts[key] if key is not None else self.counts
                shots = self.settings.get("shots", 0)
                if shots and sum(counts.values()) != shots:
                    raise ValidationError(
                        f"{self.experiment}: counts for {key} do not sum to shots")
        return self

    def _distributions(self):
        """Yield (key, distribution) pairs; key None for flat reports."""
        if not self.probabilities:
            return
        first = next(iter(self.probabilities.values()))
        if isinstance(first, dict):
            for key, dist in self.probabilities.items():
                yield key, dist
        else:
            yield None, self.probabilities

    # -- serialization -----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "settings": self.settings,
            "probabilities": self.probabilities,
            "counts": self.counts,
            "statistics": self.statistics,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        return cls(experiment=data["experiment"], settings=data["settings"],
                   probabilities=data["probabilities"], counts=data["counts"],
                   statistics=data["statistics"])

    def to_json_bytes(self) -> bytes:
        text = json.dumps(self.to_dict(), sort_keys=True, indent=2,
                          ensure_ascii=False, allow_nan=False)
        return (text + "\n").encode("utf-8")

    @classmethod
    def from_json_bytes(cls, blob: bytes) -> "RunReport":
        return cls.from_dict(json.loads(blob.decode("utf-8")))

    def csv_rows(self) -> tuple[list[str], list[list]]:
        """Header and data rows; one row per outcome or scan point."""
        counts = self.counts or {}
        if self.experiment == "hom_scan":
            header = ["delay_fs", "overlap", "p_H+H", "p_H-H",
                      "count_H+H", "count_H-H"]
            rows = []
            for key in (str(d) for d in self.settings["delays_fs"]):
                dist = self.probabilities[key]
                cnt = counts.get(key, {})
                rows.append([key, self.statistics["overlaps"][key],
                             dist["H+H"], dist["H-H"],
                             cnt.get("H+H", ""), cnt.get("H-H", "")])
            return header, rows
        if self.experiment == "correlations":
            header = ["angle_deg", "p_coincidence", "count_coincidence",
                      "count_total"]
            rows = []
            for key in (str(a) for a in self.settings["swept_angles_deg"]):
                dist = self.probabilities[key]
                cnt = counts.get(key, {})
                total = sum(cnt.values()) if cnt else ""
                rows.append([key, dist["tt"], cnt.get("tt", ""), total])
            return header, rows
        if self.experiment == "mermin":
            header = ["term", "expectation_exact", "expectation_sampled"]
            sampled = self.statistics.get("sampled_expectations") or {}
            rows = [[w, self.statistics["exact_expectations"][w],
                     sampled.get(w, "")] for w in MERMIN_WORDS]
            return header, rows
        if self.experiment == "graph":
            return ["line"], [[line] for line in
                              self.statistics.get("adjacency", "").splitlines()]
        header = ["outcome", "probability", "count"]
        rows = [[key, p, counts.get(key, "")]
                for key, p in sorted(self.probabilities.items())]
        return header, rows

    def to_csv_bytes(self) -> bytes:
        header, rows = self.csv_rows()
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return buf.getvalue().encode("utf-8")


def noise_settings(noise: NoiseModel) -> dict:
    return {
        "overlap": noise.overlap,
        "white_noise": noise.white_noise,
        "delay_fs": noise.delay_fs,
        "coherence_time_fs": noise.coherence_time_fs,
    }


# -- outcome distributions ------------------------------------------------------


def outcome_distribution(state: QubitState, settings):
    """Joint outcome labels and exact probabilities for per-qubit analyzers."""
    settings = list(settings)
    if len(settings) != state.n:
        raise ValueError("one analyzer per qubit required")
    pairs = [s.eigenstates() for s in settings]
    labels = [s.outcome_labels() for s in settings]
    names, probs = [], []
    rho = None if state.is_pure else state.density()
    vec = state.vector() if state.is_pure else None
    for choice in product((0, 1), repeat=state.n):
        e = np.array([1.0 + 0j])
        for k, c in enumerate(choice):
            e = np.kron(e, pairs[k][c])
        if vec is not None:
            p = abs(np.vdot(e, vec)) ** 2
        else:
            p = float(np.real(np.vdot(e, rho @ e)))
        names.append("".join(labels[k][c] for k, c in enumerate(choice)))
        probs.append(float(p))
    return names, np.array(probs)


# -- experiments -----------------------------------------------------------------


def polarization_histogram(state: QubitState, bases, shots: int, seed: int,
                           desired=None) -> RunReport:
    """Eight-outcome coincidence histogram of a three-photon state.

    ``desired`` names the outcomes counted as signal for the signal-to-noise
    ratio (mean desired probability over mean undesired probability); by
    default the two most likely outcomes are taken.
    """
    if state.n != 3:
        raise ValueError("expected a three-photon state")
    bases = list(bases)
    names, probs = outcome_distribution(state, bases)
    if desired is None:
        desired = tuple(n for n, _ in sorted(zip(names, probs),
                                             key=lambda x: (-x[1], x[0]))[:2])
    desired = tuple(desired)
    unknown = set(desired) - set(names)
    if unknown:
        raise ValueError(f"desired outcomes not in the distribution: {sorted(unknown)}")
    d_mask = np.array([n in desired for n in names])
    mean_d = float(probs[d_mask].mean())
    mean_u = float(probs[~d_mask].mean())
    stats = {
        "desired": list(desired),
        "snr_exact": (mean_d / mean_u) if mean_u > 1e-15 else None,
    }
    counts = None
    if shots > 0:
        sampled = sample_multinomial(probs, shots, seed)
        counts = {n: int(c) for n, c in zip(names, sampled)}
        c = sampled.astype(float)
        cd, cu = c[d_mask], c[~d_mask]
        if cu.mean() > 0:
            snr = float(cd.mean() / cu.mean())
            # first-order multinomial error propagation on the two means
            var = c * (1.0 - c / shots)
            var_d = (var[d_mask].sum()
                     - 2 * (cd[:, None] * cd[None, :] / shots)[np.triu_indices(len(cd), 1)].sum())
            var_u = (var[~d_mask].sum()
                     - 2 * (cu[:, None] * cu[None, :] / shots)[np.triu_indices(len(cu), 1)].sum())
            var_d /= len(cd) ** 2
            var_u /= len(cu) ** 2
            err = snr * math.sqrt(var_d / cd.mean() ** 2 + var_u / cu.mean() ** 2)
            stats["snr_sampled"] = snr
            stats["snr_sampled_err"] = err
        else:
            stats["snr_sampled"] = None
            stats["snr_sampled_err"] = None
    report = RunReport(
        experiment="histogram",
        settings={"bases": "".join(_basis_token(b) for b in bases),
                  "shots": shots, "seed": seed},
        probabilities={n: float(p) for n, p in zip(names, probs)},
        counts=counts,
        statistics=stats,
    )
    return report.validate()


def _basis_token(setting: AnalyzerSetting) -> str:
    return {"pauli_x": "x", "pauli_y": "y", "pauli_z": "z"}.get(
        setting.kind, f"linear({setting.theta:.6g})")


DIAGONAL_BASES = (AnalyzerSetting.z(), AnalyzerSetting.x(), AnalyzerSetting.z())


def hom_scan(delays_fs, noise: NoiseModel, shots_per_point: int, seed: int) -> RunReport:
    """Two-photon interference scan: diagonal-basis rates versus delay.

    At each delay the fused state is rebuilt with overlap
    o(tau) = o_max * exp(-(tau/tau_c)^2), where o_max is the noise model's
    explicit overlap if set (the zero-delay ceiling) and 1 otherwise.  The
    reported zero-delay visibility is (P[H+H] - P[H-H]) / (P[H+H] + P[H-H])
    evaluated at tau = 0.
    """
    delays = [float(d) for d in delays_fs]
    cap = noise.overlap if noise.overlap is not None else 1.0
    tau_c = noise.coherence_time_fs

    def point(tau: float):
        o = cap * qubits.gaussian_overlap(tau, tau_c)
        model = NoiseModel(overlap=o, white_noise=noise.white_noise,
                           coherence_time_fs=tau_c)
        _, state = tabletop.fuse_type1(model, "+")
        names, probs = outcome_distribution(state, DIAGONAL_BASES)
        return o, names, probs

    probabilities, counts, overlaps = {}, {}, {}
    for i, tau in enumerate(delays):
        o, names, probs = point(tau)
        key = str(tau)
        overlaps[key] = o
        probabilities[key] = {n: float(p) for n, p in zip(names, probs)}
        if shots_per_point > 0:
            sampled = sample_multinomial(probs, shots_per_point,
                                         setting_seed(seed, i))
            counts[key] = {n: int(c) for n, c in zip(names, sampled)}
    _, names0, probs0 = point(0.0)
    p_plus = float(probs0[names0.index("H+H")])
    p_minus = float(probs0[names0.index("H-H")])
    visibility = (p_plus - p_minus) / (p_plus + p_minus)
    stats = {"zero_delay_visibility": visibility, "overlaps": overlaps,
             "overlap_cap": cap}
    report = RunReport(
        experiment="hom_scan",
        settings={"delays_fs": delays, "shots": shots_per_point, "seed": seed,
                  **noise_settings(noise)},
        probabilities=probabilities,
        counts=counts if shots_per_point > 0 else None,
        statistics=stats,
    )
    return report.validate()


# -- Mermin test -----------------------------------------------------------------


@dataclass
class MerminResult:
    """Outcome of the three-photon Mermin test A = XYY + YXY + YYX - XXX."""

    term_expectations: dict
    exact_expectations: dict
    sampled_expectations: dict | None
    a_value: float
    abs_a: float
    sigma: float
    verdict: str
    probabilities: dict
    counts: dict | None


def _word_settings(word: str):
    return [AnalyzerSetting.from_token(c.lower()) for c in word]


def _outcome_sign(name: str) -> int:
    sign = 1
    for c in name:
        if c in ("-", "V", "R", "r"):
            sign = -sign
    return sign


def mermin_test(state: QubitState, shots_per_setting: int, seed: int,
                sigma_factor: float = 0.0) -> MerminResult:
    """Evaluate the Mermin operator on a GHZ-frame three-photon state.

    Exact expectations are always computed; with ``shots_per_setting > 0`` the
    four settings are sampled independently (setting i seeded ``seed ^ i``)
    and the sampled expectations drive the verdict.  The standard error uses
    independent-setting propagation, sigma^2 = sum_w (1 - E_w^2) / shots.
    Verdicts compare |A| - sigma_factor * sigma against 2 (local realism) and
    2 sqrt(2) (hybrid models).
    """
    if state.n != 3:
        raise ValueError("expected a three-photon state")
    exact, sampled, probabilities, counts = {}, {}, {}, {}
    for i, word in enumerate(MERMIN_WORDS):
        names, probs = outcome_distribution(state, _word_settings(word))
        signs = np.array([_outcome_sign(n) for n in names])
        exact[word] = float(np.dot(signs, probs))
        probabilities[word] = {n: float(p) for n, p in zip(names, probs)}
        if shots_per_setting > 0:
            c = sample_multinomial(probs, shots_per_setting, setting_seed(seed, i))
            counts[word] = {n: int(k) for n, k in zip(names, c)}
            sampled[word] = float(np.dot(signs, c) / shots_per_setting)
    use = sampled if shots_per_setting > 0 else exact
    a_value = use["XYY"] + use["YXY"] + use["YYX"] - use["XXX"]
    abs_a = abs(a_value)
    if shots_per_setting > 0:
        sigma = math.sqrt(sum((1.0 - use[w] ** 2) / shots_per_setting
                              for w in MERMIN_WORDS))
    else:
        sigma = 0.0
    effective = abs_a - sigma_factor * sigma
    if effective > HYBRID_BOUND:
        verdict = "genuine_tripartite"
    elif effective > LOCAL_REALISM_BOUND:
        verdict = "local_realism_violated"
    else:
        verdict = "none"
    return MerminResult(
        term_expectations=dict(use),
        exact_expectations=exact,
        sampled_expectations=sampled if shots_per_setting > 0 else None,
        a_value=float(a_value),
        abs_a=float(abs_a),
        sigma=float(sigma),
        verdict=verdict,
        probabilities=probabilities,
        counts=counts if shots_per_setting > 0 else None,
    )


def mermin_report(state: QubitState, shots_per_setting: int, seed: int,
                  sigma_factor: float = 0.0, extra_settings=None) -> RunReport:
    """Wrap :func:`mermin_test` into a RunReport."""
    result = mermin_test(state, shots_per_setting, seed, sigma_factor)
    stats = {
        "exact_expectations": result.exact_expectations,
        "sampled_expectations": result.sampled_expectations,
        "a_value": result.a_value,
        "abs_a": result.abs_a,
        "sigma": result.sigma,
        "verdict": result.verdict,
        "local_realism_bound": LOCAL_REALISM_BOUND,
        "hybrid_bound": HYBRID_BOUND,
    }
    settings = {"shots": shots_per_setting, "seed": seed,
                "sigma_factor": sigma_factor}
    if extra_settings:
        settings.update(extra_settings)
    report = RunReport("mermin", settings, result.probabilities,
                       result.counts, stats)
    return report.validate()


# -- correlation fringes ------------------------------------------------------------


def correlation_scan(state: QubitState, measured_label, setting: AnalyzerSetting,
                     kept_outcome: str, fixed, swept, shots_per_point: int,
                     seed: int) -> RunReport:
    """Conditional two-photon coincidences versus the swept polarizer angle.

    The ``measured_label`` photon is analyzed in ``setting`` and the
    ``kept_outcome`` branch retained; the remaining pair is analyzed by two
    linear polarizers, (fixed_label, fixed_angle_deg) and (swept_label,
    angles_deg).  Angles are degrees here (the experimentalist convention of
    the whole reporting layer) and radians inside.  Reported per angle:
    P(both transmitted | kept outcome).  Fringe visibility is
    (max - min)/(max + min) over the swept exact curve.
    """
    fixed_label, fixed_angle_deg = fixed
    swept_label, angles_deg = swept
    angles_deg = [float(a) for a in angles_deg]
    branches = qubits.measure(state, measured_label, setting)
    for outcome, prob_kept, conditional in branches:
        if outcome == kept_outcome:
            break
    else:
        raise ValueError(f"outcome {kept_outcome!r} not produced by the analyzer")
    if conditional is None:
        raise ValidationError(f"kept outcome {kept_outcome!r} has zero probability")
    pair_settings = {fixed_label: AnalyzerSetting.linear(math.radians(fixed_angle_deg))}
    probabilities, counts = {}, {}
    curve = []
    for i, angle in enumerate(angles_deg):
        pair_settings[swept_label] = AnalyzerSetting.linear(math.radians(angle))
        ordered = [pair_settings[label] for label in conditional.labels]
        names, probs = outcome_distribution(conditional, ordered)
        dist = {n: float(p) for n, p in zip(names, probs)}
        key = str(angle)
        probabilities[key] = dist
        curve.append(dist["tt"])
        if shots_per_point > 0:
            sampled = sample_multinomial(probs, shots_per_point,
                                         setting_seed(seed, i))
            counts[key] = {n: int(c) for n, c in zip(names, sampled)}
    curve_arr = np.array(curve)
    peak, trough = float(curve_arr.max()), float(curve_arr.min())
    visibility = ((peak - trough) / (peak + trough)
                  if peak + trough > 1e-15 else None)
    stats = {"visibility": visibility, "prob_kept_outcome": float(prob_kept),
             "kept_outcome": kept_outcome, "max_coincidence": peak,
             "min_coincidence": trough}
    report = RunReport(
        experiment="correlations",
        settings={
            "measured_label": measured_label,
            "measured_basis": _basis_token(setting),
            "kept_outcome": kept_outcome,
            "fixed_label": fixed_label,
            "fixed_angle_deg": fixed_angle_deg,
            "swept_label": swept_label,
            "swept_angles_deg": angles_deg,
            "shots": shots_per_point,
            "seed": seed,
        },
        probabilities=probabilities,
        counts=counts if shots_per_point > 0 else None,
        statistics=stats,
    )
    return report.validate()
