"""Energy-detection tests.

The Gaussian tail quantile is checked against scipy's normal distribution
(an independent implementation route: erfcinv here, Cephes ndtri there)
before the threshold formula that uses it.
"""
import math

import numpy as np
import pytest
from scipy.stats import norm

from blocksense import (
    DetectionReport,
    decide_and_score,
    detection_threshold,
    gaussian_tail_quantile,
    make_block_spec,
    sample_occupancy,
)
from blocksense.spectrum import SpectrumInstance


def instance_from_states(states):
    states = np.asarray(states, dtype=bool)
    spec = make_block_spec([states.size], [0.5])
    x = np.where(states, 1.0, 0.0)
    return SpectrumInstance(spec=spec, states=states, x=x)


# ------------------------------------------------------------- quantile


def test_tail_quantile_matches_scipy_isf():
    for p in [0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99]:
        assert gaussian_tail_quantile(p) == pytest.approx(norm.isf(p), abs=1e-12)


def test_tail_quantile_hand_values():
    assert gaussian_tail_quantile(0.5) == pytest.approx(0.0, abs=1e-15)
    assert gaussian_tail_quantile(0.05) == pytest.approx(1.6448536269514722, abs=1e-10)


def test_tail_quantile_rejects_degenerate_targets():
    for p in [0.0, 1.0, -0.1, 1.1]:
        with pytest.raises(ValueError):
            gaussian_tail_quantile(p)


# ------------------------------------------------------------ threshold


def test_threshold_formula():
    lam = detection_threshold(noise_energy_mean=27.0 * 0.09, m=27, pf_target=0.05)
    assert lam == pytest.approx(0.09 * (1 + math.sqrt(2) * norm.isf(0.05)), abs=1e-12)


def test_threshold_at_half_target_is_noise_floor():
    # Qinv(0.5) = 0, so the threshold is exactly the per-measurement energy
    assert detection_threshold(13.5, m=27, pf_target=0.5) == pytest.approx(0.5, abs=1e-15)


def test_threshold_decreases_as_target_loosens():
    grid = [0.05, 0.1, 0.2, 0.3, 0.5]
    lams = [detection_threshold(2.7, 27, pf) for pf in grid]
    assert all(b < a for a, b in zip(lams, lams[1:]))


def test_threshold_validates_inputs():
    with pytest.raises(ValueError):
        detection_threshold(1.0, 0, 0.1)
    with pytest.raises(ValueError):
        detection_threshold(-1.0, 8, 0.1)
    with pytest.raises(ValueError):
        detection_threshold(1.0, 8, 0.0)


# -------------------------------------------------------------- scoring


def test_perfect_recovery_scores_perfectly():
    truth = instance_from_states([1, 0, 1, 0, 0, 1])
    report = decide_and_score(truth.x, truth, threshold=0.25, pf_target=0.1)
    assert report.pd == 1.0
    assert report.pf == 0.0
    assert report.pf_target == 0.1
    np.testing.assert_array_equal(report.decisions, truth.states)


def test_zero_threshold_declares_everything_occupied():
    truth = instance_from_states([1, 0, 1, 0])
    report = decide_and_score(np.zeros(4), truth, threshold=0.0)
    assert report.decisions.all()
    assert report.pd == 1.0 and report.pf == 1.0


def test_tie_counts_as_occupied():
    truth = instance_from_states([1, 0])
    x_hat = np.array([2.0, 2.0])
    report = decide_and_score(x_hat, truth, threshold=4.0)  # energies exactly 4
    assert report.decisions.tolist() == [True, True]


def test_missed_and_false_bands_scored_conditionally():
    truth = instance_from_states([1, 1, 0, 0])
    x_hat = np.array([3.0, 0.0, 3.0, 0.0])
    report = decide_and_score(x_hat, truth, threshold=1.0)
    assert report.pd == 0.5
    assert report.pf == 0.5


def test_all_occupied_gives_none_false_alarm_rate():
    truth = instance_from_states([1, 1, 1])
    report = decide_and_score(np.ones(3), truth, threshold=0.5)
    assert report.pd == 1.0
    assert report.pf is None


def test_all_vacant_gives_none_detection_rate():
    truth = instance_from_states([0, 0, 0])
    report = decide_and_score(np.zeros(3), truth, threshold=0.5)
    assert report.pd is None
    assert report.pf == 0.0


def test_score_validates_shapes_and_rates():
    truth = instance_from_states([1, 0])
    with pytest.raises(ValueError):
        decide_and_score(np.ones(3), truth, threshold=1.0)
    with pytest.raises(ValueError):
        DetectionReport(decisions=np.ones(2, dtype=bool), threshold=1.0, pd=1.5, pf=0.0)


def test_complex_estimates_use_magnitude_energy():
    truth = instance_from_states([1, 0])
    x_hat = np.array([1.0 + 1.0j, 0.1j])
    report = decide_and_score(x_hat, truth, threshold=1.5)
    assert report.decisions.tolist() == [True, False]


# ---------------------------------------------- threshold calibration law


def test_false_alarm_calibration_under_design_model():
    # The threshold reads lambda = mu * (1 + sqrt(2) * Qinv(pf)) with
    # mu = E||eta||^2 / m: it treats the per-band energy statistic as Gaussian
    # with mean mu and standard deviation sqrt(2) * mu.  Under exactly that
    # model the realized false-alarm rate must reproduce the target for every
    # grid point — a self-consistency check of the quantile direction and the
    # sqrt(2) factor, independent of any physical noise pipeline.
    m = 27
    sigma = 0.7
    mu = sigma**2  # E||eta||^2 / m for iid noise
    rng = np.random.default_rng(6)
    energies = rng.normal(loc=mu, scale=math.sqrt(2) * mu, size=200_000)
    rows = []
    for pf_target in [0.05, 0.1, 0.2, 0.3, 0.5]:
        lam = detection_threshold(m * sigma**2, m, pf_target)
        realized = float(np.mean(energies >= lam))
        rows.append((pf_target, realized, realized - pf_target))
        assert abs(realized - pf_target) < 0.01
    # diagnostic table for the curious (-s shows it)
    print("\npf_target  realized  deviation")
    for target, realized, dev in rows:
        print(f"{target:9.2f}  {realized:8.4f}  {dev:+9.4f}")
