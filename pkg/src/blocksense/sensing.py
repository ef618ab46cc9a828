"""Sub-Nyquist acquisition: Bernoulli sensing matrices and calibrated noise.

Measurements follow y = A x + eta with A an m-by-n matrix of i.i.d. entries
+-1/sqrt(m) (zero mean, variance 1/m, unit column norms) and eta i.i.d.
zero-mean Gaussian. The noise level is either given directly or calibrated so
a target SNR holds in expectation, and the residual budget epsilon is set so
the ground truth is feasible with high probability.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .spectrum import SpectrumInstance

_RANK_TOL = 1e-10
_MAX_MATRIX_RETRIES = 100

#: Pr(chi2_m > m + 2*sqrt(2m)), the documented ground-truth infeasibility rate
#: of the epsilon rule below (about 2.3% for the m of interest).
FEASIBILITY_SLACK_FACTOR = 2.0


@dataclass(frozen=True)
class SensingSystem:
    """Sensing matrix plus the noise level and residual budget used with it."""

    A: np.ndarray
    m: int
    n: int
    noise_sigma: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self) -> None:
        A = np.asarray(self.A, dtype=np.float64)
        if A.shape != (self.m, self.n):
            raise ValueError(f"matrix shape {A.shape} does not match (m, n)=({self.m}, {self.n})")
        if self.noise_sigma < 0 or self.epsilon < 0:
            raise ValueError("noise_sigma and epsilon must be nonnegative")
        object.__setattr__(self, "A", A)

    def with_noise(self, noise_sigma: float, epsilon: float) -> "SensingSystem":
        return dataclasses.replace(self, noise_sigma=noise_sigma, epsilon=epsilon)


@dataclass(frozen=True)
class MeasurementSet:
    """One acquisition: y = system.A @ truth.x + eta, exactly.

    ``system`` carries the calibrated noise level and epsilon actually used;
    ``eta`` is retained for diagnostics (realized SNR, feasibility checks).
    """

    y: np.ndarray
    eta: np.ndarray
    truth: SpectrumInstance
    system: SensingSystem


def generate_sensing_matrix(m: int, n: int, rng: np.random.Generator) -> SensingSystem:
    """Draw an m-by-n matrix with i.i.d. entries +-1/sqrt(m).

    Columns have exactly unit norm. Full row rank is checked numerically
    (smallest singular value > 1e-10); a rank-deficient draw — possible at
    tiny sizes — is redrawn from the same stream, so the result is still
    deterministic given the generator state.
    """
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    scale = 1.0 / math.sqrt(m)
    for _ in range(_MAX_MATRIX_RETRIES):
        A = (rng.integers(0, 2, size=(m, n)) * 2 - 1) * scale
        smallest = np.linalg.svd(A, compute_uv=False)[-1]
        if smallest > _RANK_TOL:
            return SensingSystem(A=A, m=m, n=n)
    raise RuntimeError(f"could not draw a full-rank {m}x{n} sign matrix in {_MAX_MATRIX_RETRIES} tries")


def residual_budget(noise_sigma: float, m: int) -> float:
    """epsilon = sigma * sqrt(m + 2*sqrt(2m)).

    A high-probability upper bound on the Gaussian noise norm: the truth
    satisfies ||A x - y|| = ||eta|| <= epsilon in about 97.7% of draws
    (exactly Pr(chi2_m <= m + 2*sqrt(2m)) for the real pipeline).
    """
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be nonnegative")
    return noise_sigma * math.sqrt(m + FEASIBILITY_SLACK_FACTOR * math.sqrt(2.0 * m))


def acquire_measurements(
    system: SensingSystem,
    inst: SpectrumInstance,
    rng: np.random.Generator,
    *,
    noise_sigma: float | None = None,
    snr_db: float | None = None,
    snr_mode: str = "sensing",
) -> MeasurementSet:
    """Synthesize y = A x + eta with a direct or SNR-calibrated noise level.

    Exactly one of ``noise_sigma`` and ``snr_db`` must be given. With
    ``snr_db``, sigma is calibrated so the expected ratio hits the target:
    ``snr_mode="sensing"`` targets ||A x||^2 / E||eta||^2 and
    ``snr_mode="received"`` targets ||x||^2 / E||eta||^2. The returned
    system carries the calibrated sigma and the residual budget epsilon.
    """
    if (noise_sigma is None) == (snr_db is None):
        raise ValueError("specify exactly one of noise_sigma and snr_db")
    if system.n != inst.spec.n:
        raise ValueError("system and instance disagree on the number of bands")
    x = inst.x
    complex_pipeline = np.iscomplexobj(x)
    Ax = system.A @ x
    if snr_db is not None:
        if snr_mode == "sensing":
            signal_power = float(np.linalg.norm(Ax) ** 2)
        elif snr_mode == "received":
            signal_power = float(np.linalg.norm(x) ** 2)
        else:
            raise ValueError(f"unknown snr_mode {snr_mode!r}")
        if signal_power == 0.0:
            raise ValueError("SNR target is undefined for a zero signal; give noise_sigma instead")
        # E||eta||^2 = m * sigma^2; solve for sigma at the linear-scale target.
        sigma = math.sqrt(signal_power / (system.m * 10.0 ** (snr_db / 10.0)))
    else:
        sigma = float(noise_sigma)
        if sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
    if complex_pipeline:
        # Circular Gaussian with E|eta_k|^2 = sigma^2 per component.
        eta = (rng.standard_normal(system.m) + 1j * rng.standard_normal(system.m)) * (sigma / math.sqrt(2.0))
    else:
        eta = rng.standard_normal(system.m) * sigma
    epsilon = residual_budget(sigma, system.m)
    calibrated = system.with_noise(noise_sigma=sigma, epsilon=epsilon)
    return MeasurementSet(y=Ax + eta, eta=eta, truth=inst, system=calibrated)


def sensing_snr_db(system: SensingSystem, inst: SpectrumInstance, eta: np.ndarray) -> float:
    """Realized measurement-domain SNR, 10*log10(||A x||^2 / ||eta||^2)."""
    noise_power = float(np.linalg.norm(eta) ** 2)
    if noise_power == 0.0:
        raise ValueError("SNR is undefined for zero noise")
    return 10.0 * math.log10(float(np.linalg.norm(system.A @ inst.x) ** 2) / noise_power)


def received_snr_db(inst: SpectrumInstance, eta: np.ndarray) -> float:
    """Realized signal-domain SNR, 10*log10(||x||^2 / ||eta||^2)."""
    noise_power = float(np.linalg.norm(eta) ** 2)
    if noise_power == 0.0:
        raise ValueError("SNR is undefined for zero noise")
    return 10.0 * math.log10(float(np.linalg.norm(inst.x) ** 2) / noise_power)
