"""Block-structured occupancy model for a wideband of n contiguous bands.

The wideband is partitioned into disjoint contiguous blocks; every band in
block i is occupied independently with probability p_i. The total number of
occupied bands X = sum_i H_i is Poisson-binomial; this module provides exact
sampling, the exact PMF (convolution dynamic program), a Chernoff-style lower
bound on Pr(X <= k0), and the smallest sparsity level whose exceedance
probability is below a target.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np


@dataclass(frozen=True)
class BlockSpec:
    """Ordered block structure: ``blocks[i] = (n_i, p_i)``.

    n_i is the number of contiguous bands in block i and p_i the per-band
    occupancy probability. Blocks tile the wideband in order, so band index
    maps to exactly one block.
    """

    blocks: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        if not self.blocks:
            raise ValueError("at least one block is required")
        norm = []
        for i, (size, prob) in enumerate(self.blocks):
            if int(size) != size or size < 1:
                raise ValueError(f"block {i}: size must be a positive integer, got {size!r}")
            if not 0.0 <= prob <= 1.0:
                raise ValueError(f"block {i}: occupancy probability must lie in [0, 1], got {prob!r}")
            norm.append((int(size), float(prob)))
        object.__setattr__(self, "blocks", tuple(norm))

    @property
    def g(self) -> int:
        return len(self.blocks)

    @property
    def n(self) -> int:
        return sum(size for size, _ in self.blocks)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([size for size, _ in self.blocks], dtype=np.int64)

    @property
    def probs(self) -> np.ndarray:
        return np.array([prob for _, prob in self.blocks], dtype=np.float64)

    @property
    def average_block_sparsity(self) -> np.ndarray:
        """k-bar_i = n_i * p_i, the expected occupied count per block."""
        return self.sizes * self.probs

    @property
    def mean_occupancy(self) -> float:
        """Expected total number of occupied bands, sum_i n_i p_i."""
        return float(np.sum(self.average_block_sparsity))

    def band_probabilities(self) -> np.ndarray:
        """Length-n vector of per-band occupancy probabilities."""
        return np.repeat(self.probs, self.sizes)

    def band_to_block(self) -> np.ndarray:
        """Length-n vector mapping band index -> block index."""
        return np.repeat(np.arange(self.g), self.sizes)

    def block_slices(self) -> list[slice]:
        edges = np.concatenate([[0], np.cumsum(self.sizes)])
        return [slice(int(edges[i]), int(edges[i + 1])) for i in range(self.g)]


@dataclass(frozen=True)
class SpectrumInstance:
    """One occupancy realization with its frequency-domain amplitudes.

    ``x[i]`` is nonzero exactly when ``states[i]`` is True, so the ground
    truth is exactly sparse with ``support`` as its support set.
    """

    spec: BlockSpec
    states: np.ndarray
    x: np.ndarray
    support: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        states = np.asarray(self.states, dtype=bool)
        x = np.asarray(self.x)
        if states.shape != (self.spec.n,) or x.shape != (self.spec.n,):
            raise ValueError("states and x must both have length spec.n")
        if np.any((x != 0) != states):
            raise ValueError("x must be nonzero exactly on the occupied bands")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "support", np.flatnonzero(states))

    @property
    def occupancy(self) -> int:
        return int(self.support.size)


@dataclass(frozen=True)
class OccupancyPmf:
    """Exact distribution of the occupied-band count: ``probabilities[k] = Pr(X = k)``."""

    probabilities: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probabilities, dtype=np.float64)
        if p.ndim != 1 or p.size < 1:
            raise ValueError("probabilities must be a nonempty 1-D vector")
        if np.any(p < -1e-15) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "probabilities", p)

    @property
    def mean(self) -> float:
        k = np.arange(self.probabilities.size)
        return float(np.dot(k, self.probabilities))

    def cdf(self, k: int) -> float:
        """Pr(X <= k)."""
        if k < 0:
            return 0.0
        return float(np.sum(self.probabilities[: min(k, self.probabilities.size - 1) + 1]))


def sample_occupancy(
    spec: BlockSpec,
    rng: np.random.Generator,
    amplitude_scale: float = 1.0,
    complex_amplitudes: bool = False,
) -> SpectrumInstance:
    """Draw one occupancy realization and its band amplitudes.

    Each band flips an independent Bernoulli(p_i) coin for its block's p_i.
    Occupied bands receive amplitudes with magnitude uniform on
    ``[0.5, 1.5] * amplitude_scale``; the default pipeline is real-valued
    (uniformly random sign), and ``complex_amplitudes=True`` switches to a
    uniformly random phase on [0, 2*pi).

    Deterministic given the generator state.
    """
    if amplitude_scale <= 0:
        raise ValueError("amplitude_scale must be positive")
    band_p = spec.band_probabilities()
    states = rng.random(spec.n) < band_p
    magnitudes = rng.uniform(0.5, 1.5, size=spec.n) * amplitude_scale
    if complex_amplitudes:
        phases = rng.uniform(0.0, 2.0 * np.pi, size=spec.n)
        x = np.where(states, magnitudes * np.exp(1j * phases), 0.0 + 0.0j)
    else:
        signs = np.where(rng.random(spec.n) < 0.5, -1.0, 1.0)
        x = np.where(states, magnitudes * signs, 0.0)
    return SpectrumInstance(spec=spec, states=states, x=x)


def occupancy_pmf(spec: BlockSpec) -> OccupancyPmf:
    """Exact Poisson-binomial PMF of the occupied-band count.

    Iterative convolution over bands: O(n^2) time, O(n) space. Exact up to
    floating point, unlike the exponential sum over all supports.
    """
    pmf = np.array([1.0])
    for p in spec.band_probabilities():
        nxt = np.zeros(pmf.size + 1)
        nxt[:-1] = pmf * (1.0 - p)
        nxt[1:] += pmf * p
        pmf = nxt
    # Clip tiny negative round-off before the invariant check.
    pmf = np.maximum(pmf, 0.0)
    pmf /= pmf.sum()
    return OccupancyPmf(probabilities=pmf)


class ChernoffBound(NamedTuple):
    """Lower bound on Pr(X <= k0); ``informative`` is False when k0 <= E[X]."""

    value: float
    informative: bool


def chernoff_tail_bound(spec: BlockSpec, k0: float) -> ChernoffBound:
    """Closed-form lower bound on Pr(X <= k0): ``1 - e^(k0 - s) / (k0/s)^k0``.

    Here ``s = sum_i n_i p_i`` is the mean occupancy. The bound is informative
    only for k0 above the mean; at or below it the value 0 is returned with
    ``informative=False``.
    """
    s = spec.mean_occupancy
    if s <= 0:
        # Degenerate spectrum that is never occupied: Pr(X <= k0) = 1 for k0 >= 0.
        return ChernoffBound(value=1.0 if k0 >= 0 else 0.0, informative=k0 >= 0)
    if k0 <= s:
        return ChernoffBound(value=0.0, informative=False)
    log_term = (k0 - s) - k0 * math.log(k0 / s)
    value = 1.0 - math.exp(log_term)
    return ChernoffBound(value=min(max(value, 0.0), 1.0), informative=True)


def select_sparsity_level(spec: BlockSpec, alpha: float) -> int:
    """Smallest integer k0 with ``chernoff_tail_bound(spec, k0) >= 1 - alpha``.

    alpha is the tolerated probability that the occupancy exceeds k0, judged
    by the closed-form bound (conservative relative to the exact PMF). If no
    k0 <= n satisfies the target, n is returned with a warning.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    start = max(int(math.floor(spec.mean_occupancy)) + 1, 1)
    for k0 in range(start, spec.n + 1):
        if chernoff_tail_bound(spec, k0).value >= 1.0 - alpha:
            return k0
    warnings.warn(
        f"no sparsity level <= n={spec.n} meets exceedance target {alpha}; returning n",
        stacklevel=2,
    )
    return spec.n


def make_block_spec(sizes: Sequence[int], probs: Sequence[float]) -> BlockSpec:
    """Convenience constructor from parallel size/probability sequences."""
    if len(sizes) != len(probs):
        raise ValueError("sizes and probs must have equal length")
    return BlockSpec(blocks=tuple((int(s), float(p)) for s, p in zip(sizes, probs)))
