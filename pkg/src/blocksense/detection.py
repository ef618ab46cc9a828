"""Per-band energy detection over a recovered spectrum estimate.

A band is declared occupied when its recovered energy |x_hat_i|^2 reaches a
threshold calibrated from the known noise level and a false-alarm target;
detection/false-alarm rates are scored against the ground-truth occupancy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcinv

from .spectrum import SpectrumInstance


@dataclass(frozen=True)
class DetectionReport:
    """Per-band decisions and the empirical rates they induce.

    ``pd`` is the fraction of truly occupied bands declared occupied, ``pf``
    the fraction of truly vacant bands declared occupied; either is None when
    its denominator is empty (no occupied / no vacant bands).
    """

    decisions: np.ndarray
    threshold: float
    pd: float | None
    pf: float | None
    pf_target: float | None = None

    def __post_init__(self) -> None:
        for name, rate in (("pd", self.pd), ("pf", self.pf)):
            if rate is not None and not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")


def gaussian_tail_quantile(p: float) -> float:
    """Inverse of the standard normal tail Q(x) = Pr(N(0,1) > x)."""
    if not 0.0 < p < 1.0:
        raise ValueError("tail probability must lie strictly between 0 and 1")
    return math.sqrt(2.0) * float(erfcinv(2.0 * p))


def detection_threshold(noise_energy_mean: float, m: int, pf_target: float) -> float:
    """Energy threshold lambda = (E[||eta||^2]/m) * (1 + sqrt(2) * Qinv(pf_target)).

    ``noise_energy_mean`` is the analytic expected noise energy (m * sigma^2
    for i.i.d. Gaussian noise — treated as known, not estimated from a single
    realization). Decreasing the false-alarm target strictly increases the
    threshold. pf_target must lie strictly inside (0, 1).
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if noise_energy_mean < 0:
        raise ValueError("noise_energy_mean must be nonnegative")
    quantile = gaussian_tail_quantile(pf_target)  # raises on pf_target in {0, 1}
    return (noise_energy_mean / m) * (1.0 + math.sqrt(2.0) * quantile)


def decide_and_score(
    x_hat: np.ndarray,
    truth: SpectrumInstance,
    threshold: float,
    pf_target: float | None = None,
) -> DetectionReport:
    """Threshold per-band energies and score against the true occupancy.

    Band i is declared occupied iff |x_hat_i|^2 >= threshold (ties count as
    occupied). Rates are conditional empirical frequencies: pd over truly
    occupied bands, pf over truly vacant ones; a rate with no qualifying
    bands is reported as None.
    """
    x_hat = np.asarray(x_hat)
    if x_hat.shape != truth.states.shape:
        raise ValueError("x_hat and the truth instance disagree on the number of bands")
    energies = np.abs(x_hat) ** 2
    decisions = energies >= threshold
    occupied = truth.states
    vacant = ~occupied
    pd = float(np.mean(decisions[occupied])) if occupied.any() else None
    pf = float(np.mean(decisions[vacant])) if vacant.any() else None
    return DetectionReport(
        decisions=decisions,
        threshold=float(threshold),
        pd=pd,
        pf=pf,
        pf_target=pf_target,
    )
