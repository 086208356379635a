import math

import numpy as np
import pytest

from fusionlab import qubits, tabletop
from fusionlab.errors import ValidationError
from fusionlab.qubits import AnalyzerSetting, NoiseModel, QubitState, ket
from fusionlab.verification import (
    MERMIN_WORDS,
    RunReport,
    correlation_scan,
    hom_scan,
    mermin_report,
    mermin_test,
    outcome_distribution,
    polarization_histogram,
    sample_multinomial,
    setting_seed,
    significance,
)

from util import fock_word_expectation

SQRT2 = math.sqrt(2.0)
XZX = (AnalyzerSetting.x(), AnalyzerSetting.z(), AnalyzerSetting.x())
ZXZ = (AnalyzerSetting.z(), AnalyzerSetting.x(), AnalyzerSetting.z())


def fused(o=None, p=0.0):
    _, s = tabletop.fuse_type1(NoiseModel(overlap=o, white_noise=p), "+")
    return s


# -- multinomial sampling -----------------------------------------------------------


def test_multinomial_point_mass():
    counts = sample_multinomial([1.0, 0.0, 0.0], 500, seed=1)
    assert list(counts) == [500, 0, 0]


def test_multinomial_deterministic():
    a = sample_multinomial([0.25] * 4, 1000, seed=42)
    b = sample_multinomial([0.25] * 4, 1000, seed=42)
    assert np.array_equal(a, b)


def test_multinomial_uniform_moments():
    counts = sample_multinomial([1 / 8] * 8, 8000, seed=3)
    assert counts.sum() == 8000
    bound = 3 * math.sqrt(8000 * (1 / 8) * (7 / 8))
    assert np.all(np.abs(counts - 1000) <= bound)


def test_multinomial_converges():
    probs = np.array([0.5, 0.3, 0.15, 0.05])
    shots = 10 ** 6
    counts = sample_multinomial(probs, shots, seed=11)
    freq = counts / shots
    se = np.sqrt(probs * (1 - probs) / shots)
    assert np.all(np.abs(freq - probs) <= 3 * se)


def test_multinomial_rejects_bad_distribution():
    with pytest.raises(ValueError):
        sample_multinomial([0.5, 0.2], 10, seed=0)


def test_seed_splitting_rule():
    assert setting_seed(12, 0) == 12
    assert setting_seed(12, 3) == 12 ^ 3


# -- significance ------------------------------------------------------------------


def test_significance_values():
    assert significance(3.10, 0.03, 2.0) == pytest.approx(36.6667, abs=1e-3)
    assert significance(3.10, 0.03, 2 * SQRT2) == pytest.approx(9.052, abs=1e-2)
    assert significance(2.0, 0.1, 2.0) == 0.0


def test_significance_needs_positive_sigma():
    with pytest.raises(ValueError):
        significance(3.0, 0.0, 2.0)


# -- histogram ----------------------------------------------------------------------


def test_histogram_ideal_distribution():
    rep = polarization_histogram(fused(), XZX, 0, 7)
    assert rep.probabilities["+H+"] == pytest.approx(0.5, abs=1e-12)
    assert rep.probabilities["-V-"] == pytest.approx(0.5, abs=1e-12)
    others = [v for k, v in rep.probabilities.items() if k not in ("+H+", "-V-")]
    assert max(others) < 1e-12
    assert rep.statistics["snr_exact"] is None
    assert rep.counts is None


@pytest.mark.parametrize("p", [0.05, 0.125, 0.3])
def test_histogram_snr_closed_form(p):
    rep = polarization_histogram(fused(p=p), XZX, 0, 7, desired=("+H+", "-V-"))
    assert rep.statistics["snr_exact"] == pytest.approx((4 * (1 - p) + p) / p, abs=1e-9)


def test_histogram_diagonal_selection_rule():
    rep = polarization_histogram(fused(), ZXZ, 0, 7)
    occupied = {"H+H", "H-V", "V+V", "V-H"}
    for name, prob in rep.probabilities.items():
        if name in occupied:
            assert prob == pytest.approx(0.25, abs=1e-12)
        else:
            assert prob <= 1e-10


def test_histogram_sampling():
    rep = polarization_histogram(fused(p=0.125), XZX, 10000, 21,
                                 desired=("+H+", "-V-"))
    assert sum(rep.counts.values()) == 10000
    assert rep.statistics["snr_sampled"] == pytest.approx(29.0, rel=0.25)
    assert rep.statistics["snr_sampled_err"] > 0
    again = polarization_histogram(fused(p=0.125), XZX, 10000, 21,
                                   desired=("+H+", "-V-"))
    assert rep.counts == again.counts


def test_histogram_desired_defaults_to_top_two():
    rep = polarization_histogram(fused(p=0.125), XZX, 0, 7)
    assert set(rep.statistics["desired"]) == {"+H+", "-V-"}


def test_histogram_rejects_unknown_desired():
    with pytest.raises(ValueError, match="desired"):
        polarization_histogram(fused(), XZX, 0, 7, desired=("+H?",))


# -- interference scan -----------------------------------------------------------------


def test_hom_scan_zero_delay_visibility_hits_cap():
    rep = hom_scan([-740.0, 0.0, 740.0], NoiseModel(overlap=0.78), 0, 5)
    assert rep.statistics["zero_delay_visibility"] == pytest.approx(0.78, abs=1e-10)


def test_hom_scan_dip_shape():
    delays = [float(d) for d in np.linspace(-1480, 1480, 21)]
    rep = hom_scan(delays, NoiseModel(), 0, 5)
    minus = [rep.probabilities[str(d)]["H-H"] for d in delays]
    # symmetric in tau
    assert np.allclose(minus, minus[::-1], atol=1e-12)
    # monotone in |tau|
    right = minus[10:]
    assert all(a <= b + 1e-12 for a, b in zip(right, right[1:]))
    # ideal zero delay: the unwanted component vanishes
    assert rep.probabilities[str(0.0)]["H-H"] == pytest.approx(0.0, abs=1e-12)


def test_hom_scan_large_delay_equalizes_rates():
    rep = hom_scan([1e5], NoiseModel(), 0, 5)
    dist = rep.probabilities[str(1e5)]
    assert dist["H+H"] == pytest.approx(dist["H-H"], abs=1e-10)
    assert dist["H+H"] == pytest.approx(1 / 8, abs=1e-10)


def test_hom_scan_fully_distinguishable_is_flat():
    rep = hom_scan([-500.0, 0.0, 500.0], NoiseModel(overlap=0.0), 0, 5)
    for d in (-500.0, 0.0, 500.0):
        dist = rep.probabilities[str(d)]
        assert dist["H+H"] == pytest.approx(dist["H-H"], abs=1e-12)


def test_hom_scan_sampled_counts():
    rep = hom_scan([0.0, 300.0], NoiseModel(), 400, 5)
    for key, counts in rep.counts.items():
        assert sum(counts.values()) == 400


# -- Mermin test ------------------------------------------------------------------------


def ghz(o=None, p=0.0):
    return tabletop.cluster_to_ghz(fused(o, p))


def test_mermin_ideal():
    result = mermin_test(ghz(), 0, 1)
    assert result.abs_a == pytest.approx(4.0, abs=1e-10)
    assert result.sigma == 0.0
    assert result.verdict == "genuine_tripartite"
    assert result.exact_expectations["XXX"] == pytest.approx(1.0, abs=1e-10)
    for w in ("XYY", "YXY", "YYX"):
        assert result.exact_expectations[w] == pytest.approx(-1.0, abs=1e-10)


def test_mermin_tracks_overlap():
    result = mermin_test(ghz(o=0.775), 0, 1)
    assert result.abs_a == pytest.approx(3.10, abs=1e-10)


def test_mermin_maximally_mixed():
    state = qubits.apply_white_noise(ghz(), 1.0)
    result = mermin_test(state, 0, 1)
    assert result.abs_a == pytest.approx(0.0, abs=1e-12)
    assert result.verdict == "none"


@pytest.mark.parametrize("o,verdict", [
    (0.45, "none"),
    (0.55, "local_realism_violated"),
    (0.70, "local_realism_violated"),
    (0.72, "genuine_tripartite"),
    (0.80, "genuine_tripartite"),
])
def test_mermin_verdict_boundaries(o, verdict):
    assert mermin_test(ghz(o=o), 0, 1).verdict == verdict


def test_mermin_sampled_statistics():
    result = mermin_test(ghz(o=0.775), 2000, 99)
    manual = math.sqrt(sum((1 - result.sampled_expectations[w] ** 2) / 2000
                           for w in MERMIN_WORDS))
    assert result.sigma == pytest.approx(manual)
    assert result.counts is not None
    for counts in result.counts.values():
        assert sum(counts.values()) == 2000
    repeat = mermin_test(ghz(o=0.775), 2000, 99)
    assert repeat.counts == result.counts


def test_mermin_sampled_estimate_tracks_exact():
    hits = 0
    runs = 200
    for seed in range(runs):
        result = mermin_test(ghz(o=0.775), 1000, seed)
        if abs(result.abs_a - 3.10) <= 4 * result.sigma:
            hits += 1
    assert hits >= 0.98 * runs


def test_mermin_report_round_trip():
    rep = mermin_report(ghz(o=0.775), 500, 4)
    blob = rep.to_json_bytes()
    back = RunReport.from_json_bytes(blob)
    assert back == rep
    assert back.to_json_bytes() == blob


# -- circular analysis equivalence ---------------------------------------------------------


@pytest.mark.parametrize("o", [1.0, 0.7])
def test_optical_and_projector_expectations_agree(o):
    from fusionlab import fock

    _, branch = tabletop.fuse_type1_fock(NoiseModel(overlap=o), "+")
    q = tabletop.cluster_to_ghz(fock.to_qubit_state(branch))
    # optical route: the GHZ rotation done with plates, then plate+polarizer
    # analysis of each Pauli word on the raw fock state
    rotated = fock.apply_waveplate(branch, 1, "half", math.pi / 8)
    rotated = fock.apply_waveplate(rotated, 4, "half", math.pi / 8)
    for word in MERMIN_WORDS:
        optical = fock_word_expectation(rotated, (1, 3, 4), word)
        projector = qubits.expectation(q, word)
        assert optical == pytest.approx(projector, abs=1e-10)


# -- correlation fringes ---------------------------------------------------------------


ANGLES = [float(a) for a in range(0, 181, 10)]


def test_correlations_sigma_z_suppressed_setting():
    rep = correlation_scan(fused(), 3, AnalyzerSetting.z(), "H",
                           (1, -45.0), (4, ANGLES), 0, 3)
    assert rep.statistics["max_coincidence"] < 1e-12
    assert rep.statistics["visibility"] is None


def test_correlations_sigma_z_two_to_one_ratio():
    rep45 = correlation_scan(fused(), 3, AnalyzerSetting.z(), "H",
                             (1, 45.0), (4, ANGLES), 0, 3)
    rep90 = correlation_scan(fused(), 3, AnalyzerSetting.z(), "H",
                             (1, 90.0), (4, ANGLES), 0, 3)
    for a in ANGLES:
        p45 = rep45.probabilities[str(a)]["tt"]
        p90 = rep90.probabilities[str(a)]["tt"]
        assert p45 == pytest.approx(2 * p90, abs=1e-12)


def test_correlations_sigma_x_cosine_law():
    rep = correlation_scan(fused(), 3, AnalyzerSetting.x(), "+",
                           (1, 45.0), (4, ANGLES), 0, 3)
    for a in ANGLES:
        expected = math.cos(math.radians(45.0 - a)) ** 2 / 2
        assert rep.probabilities[str(a)]["tt"] == pytest.approx(expected, abs=1e-10)


def test_correlations_visibility_tracks_overlap():
    rep = correlation_scan(fused(o=0.79), 3, AnalyzerSetting.x(), "+",
                           (1, 0.0), (4, ANGLES), 0, 3)
    assert rep.statistics["visibility"] == pytest.approx(0.79, abs=1e-10)


def test_correlations_sampling_deterministic():
    rep = correlation_scan(fused(), 3, AnalyzerSetting.x(), "+",
                           (1, 45.0), (4, ANGLES[:5]), 200, 8)
    again = correlation_scan(fused(), 3, AnalyzerSetting.x(), "+",
                             (1, 45.0), (4, ANGLES[:5]), 200, 8)
    assert rep.counts == again.counts
    for counts in rep.counts.values():
        assert sum(counts.values()) == 200


def test_correlations_zero_probability_condition():
    state = QubitState((1, 3, 4), vector=ket("HHH"))
    with pytest.raises(ValidationError, match="zero probability"):
        correlation_scan(state, 3, AnalyzerSetting.z(), "V",
                         (1, 0.0), (4, ANGLES), 0, 3)


# -- reports ---------------------------------------------------------------------------


def test_report_json_round_trip_exact():
    rep = polarization_histogram(fused(p=0.1), XZX, 5000, 13,
                                 desired=("+H+", "-V-"))
    blob = rep.to_json_bytes()
    back = RunReport.from_json_bytes(blob)
    assert back == rep
    assert back.to_json_bytes() == blob


def test_report_csv_shapes():
    rep = polarization_histogram(fused(), XZX, 0, 7)
    lines = rep.to_csv_bytes().decode().splitlines()
    assert lines[0] == "outcome,probability,count"
    assert len(lines) == 9

    delays = [float(d) for d in np.linspace(-1000, 1000, 21)]
    scan = hom_scan(delays, NoiseModel(), 0, 5)
    lines = scan.to_csv_bytes().decode().splitlines()
    assert len(lines) == 22


def test_report_validation_catches_bad_distribution():
    rep = RunReport("histogram", {"shots": 0}, {"a": 0.6, "b": 0.6}, None, {})
    with pytest.raises(ValidationError, match="sum"):
        rep.validate()


def test_report_validation_catches_count_mismatch():
    rep = RunReport("histogram", {"shots": 10}, {"a": 1.0}, {"a": 7}, {})
    with pytest.raises(ValidationError, match="counts"):
        rep.validate()


def test_outcome_distribution_requires_matching_settings():
    with pytest.raises(ValueError):
        outcome_distribution(fused(), [AnalyzerSetting.z()])
