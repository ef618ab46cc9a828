"""Sparse-recovery solvers.

Four recovery schemes over the same sensing system:

- ``solve_weighted_l1``: block-weighted l1 minimization subject to a residual
  ball, min sum_l w_l ||x_l||_1 s.t. ||A x - y||_2 <= epsilon, solved by ADMM
  with closed-form proximal steps (weighted soft-threshold, ball projection).
- ``solve_l1``: the same program with uniform weights (plain l1 / LASSO-type
  recovery in constrained form); literally a delegation.
- ``omp``: orthogonal matching pursuit (greedy column selection + refit).
- ``cosamp``: compressive sampling matching pursuit (merge top-2k proxy
  support with the current one, least squares, prune to k).

All solvers are pure functions of their inputs and deterministic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .sensing import SensingSystem
from .spectrum import BlockSpec


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances shared by the iterative solvers.

    ``tol`` scales the ADMM primal/dual stopping residuals by sqrt(n);
    ``tol_feas`` is the absolute slack allowed on ||A x - y|| <= epsilon.
    """

    rho: float = 1.0
    max_iter: int = 10_000
    tol: float = 1e-6
    tol_feas: float = 1e-6

    def __post_init__(self) -> None:
        if self.rho <= 0 or self.max_iter < 1 or self.tol <= 0 or self.tol_feas < 0:
            raise ValueError("invalid solver options")


@dataclass(frozen=True)
class WeightVector:
    """Per-block positive weights summing to 1, with per-band expansion."""

    omega: np.ndarray
    spec: BlockSpec

    def __post_init__(self) -> None:
        omega = np.asarray(self.omega, dtype=np.float64)
        if omega.shape != (self.spec.g,):
            raise ValueError("need one weight per block")
        if np.any(omega <= 0):
            raise ValueError("weights must be strictly positive")
        if abs(omega.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        kbar = self.spec.average_block_sparsity
        for i in range(self.spec.g):
            for j in range(self.spec.g):
                if kbar[i] > kbar[j] and not omega[i] < omega[j]:
                    raise ValueError("weights must decrease as average block sparsity grows")
        object.__setattr__(self, "omega", omega)

    def per_band(self) -> np.ndarray:
        """Length-n weights: each block's weight replicated across its bands."""
        return np.repeat(self.omega, self.spec.sizes)

    @staticmethod
    def uniform(n: int) -> "WeightVector":
        """Weight 1 on a single block covering all n bands (plain l1)."""
        return WeightVector(omega=np.array([1.0]), spec=BlockSpec(blocks=((n, 0.5),)))


@dataclass(frozen=True)
class RecoveryResult:
    """Outcome of one solve: estimate, fit quality, and termination info."""

    x_hat: np.ndarray
    residual_norm: float
    objective: float
    iterations: int
    converged: bool
    solver_id: str
    epsilon: float = field(default=0.0)


def compute_weights(spec: BlockSpec) -> WeightVector:
    """Block weights inversely proportional to average block sparsity.

    w_i = (1/kbar_i) / sum_j (1/kbar_j) with kbar_i = n_i * p_i. Sparser
    blocks (smaller kbar) get larger weights; weights sum to 1.
    """
    kbar = spec.average_block_sparsity
    if np.any(kbar <= 0):
        raise ValueError(
            "every block needs positive average sparsity (n_i * p_i > 0); "
            "merge or exclude blocks with p_i = 0 before computing weights"
        )
    inv = 1.0 / kbar
    return WeightVector(omega=inv / inv.sum(), spec=spec)


def _shrink(t: np.ndarray, threshold: np.ndarray) -> np.ndarray:
    """Proximal map of the weighted l1 norm (handles real sign or complex phase)."""
    mag = np.abs(t)
    scale = np.maximum(mag - threshold, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(mag > 0, t * (scale / np.where(mag > 0, mag, 1.0)), 0.0 * t)
    return out


def _real_factor_solve(cf, b: np.ndarray) -> np.ndarray:
    """cho_solve with a real factor against a possibly complex right-hand side."""
    if np.iscomplexobj(b):
        return cho_solve(cf, b.real) + 1j * cho_solve(cf, b.imag)
    return cho_solve(cf, b)


def _feasibility_polish(A: np.ndarray, x: np.ndarray, y: np.ndarray, epsilon: float) -> np.ndarray:
    """Shift x along range(A^T) so ||A x - y|| lands on (just inside) the ball."""
    r = A @ x - y
    rnorm = float(np.linalg.norm(r))
    if rnorm <= epsilon:
        return x
    gram = cho_factor(A @ A.T)
    target = epsilon * (1.0 - 1e-12)
    correction = _real_factor_solve(gram, r * (1.0 - target / rnorm))
    return x - A.T @ correction


def solve_weighted_l1(
    system: SensingSystem,
    y: np.ndarray,
    weights: WeightVector | np.ndarray,
    options: SolverOptions | None = None,
    epsilon: float | None = None,
) -> RecoveryResult:
    """Block-weighted l1 recovery: min sum_l w_l ||x_l||_1 s.t. ||A x - y|| <= eps.

    ADMM with a three-way splitting: x carries the coupling, v the weighted
    soft-threshold, z the ball projection. The x-update inverts I + A^T A via
    the matrix-inversion lemma (one m-by-m Cholesky per solve), the penalty is
    rebalanced from the primal/dual residual ratio every 10 iterations, and a
    final range-space correction guarantees the returned point is feasible to
    within ``options.tol_feas`` even at loose stopping tolerances.

    ``weights`` is either a block-level :class:`WeightVector` or a raw
    length-n array of strictly positive per-band weights; the argmin is
    invariant to rescaling all weights by a common positive factor.
    ``epsilon`` defaults to the system's residual budget. Non-convergence
    within ``options.max_iter`` is reported via ``converged=False``.
    """
    opts = options or SolverOptions()
    A = system.A
    m, n = A.shape
    y = np.asarray(y)
    if y.shape != (m,):
        raise ValueError("y must have length m")
    eps = system.epsilon if epsilon is None else float(epsilon)
    if eps < 0:
        raise ValueError("epsilon must be nonnegative")
    if isinstance(weights, WeightVector):
        w_band = weights.per_band()
    else:
        w_band = np.asarray(weights, dtype=np.float64)
        if np.any(w_band <= 0):
            raise ValueError("per-band weights must be strictly positive")
    if w_band.shape != (n,):
        raise ValueError("weights do not match the band count")

    gram = cho_factor(np.eye(m) + A @ A.T)
    dtype = np.complex128 if np.iscomplexobj(y) else np.float64
    x = np.zeros(n, dtype=dtype)
    v = np.zeros(n, dtype=dtype)
    z = np.zeros(m, dtype=dtype)
    u1 = np.zeros(n, dtype=dtype)
    u2 = np.zeros(m, dtype=dtype)
    rho = opts.rho
    tol_abs = opts.tol * math.sqrt(n)
    converged = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        rhs = (v - u1) + A.T @ (z - u2)
        x = rhs - A.T @ _real_factor_solve(gram, A @ rhs)
        Ax = A @ x
        v_old, z_old = v, z
        v = _shrink(x + u1, w_band / rho)
        q = Ax + u2
        d = q - y
        dn = float(np.linalg.norm(d))
        z = y + d * (eps / dn) if dn > eps else q
        u1 = u1 + x - v
        u2 = u2 + Ax - z
        r_primal = math.sqrt(float(np.linalg.norm(x - v)) ** 2 + float(np.linalg.norm(Ax - z)) ** 2)
        s_dual = rho * float(np.linalg.norm((v - v_old) + A.T @ (z - z_old)))
        if r_primal < tol_abs and s_dual < tol_abs:
            converged = True
            break
        if it % 10 == 0:
            if r_primal > 10.0 * s_dual:
                rho *= 2.0
                u1 = u1 / 2.0
                u2 = u2 / 2.0
            elif s_dual > 10.0 * r_primal:
                rho /= 2.0
                u1 = u1 * 2.0
                u2 = u2 * 2.0

    x_hat = _feasibility_polish(A, v, y, eps)
    residual = float(np.linalg.norm(A @ x_hat - y))
    objective = float(np.sum(w_band * np.abs(x_hat)))
    return RecoveryResult(
        x_hat=x_hat,
        residual_norm=residual,
        objective=objective,
        iterations=it,
        converged=converged,
        solver_id="weighted_l1",
        epsilon=eps,
    )


def solve_l1(
    system: SensingSystem,
    y: np.ndarray,
    options: SolverOptions | None = None,
    epsilon: float | None = None,
) -> RecoveryResult:
    """Plain l1 recovery: the weighted program with uniform weights."""
    result = solve_weighted_l1(system, y, WeightVector.uniform(system.n), options, epsilon)
    return RecoveryResult(
        x_hat=result.x_hat,
        residual_norm=result.residual_norm,
        objective=result.objective,
        iterations=result.iterations,
        converged=result.converged,
        solver_id="lasso",
        epsilon=result.epsilon,
    )


def _greedy_converged(residual: float, system: SensingSystem, tol_feas: float, residual_tol: float) -> bool:
    return residual <= max(system.epsilon + tol_feas, residual_tol)


def omp(
    system: SensingSystem,
    y: np.ndarray,
    k_max: int | None = None,
    residual_tol: float = 0.0,
    tol_feas: float = 1e-6,
) -> RecoveryResult:
    """Orthogonal matching pursuit.

    Repeatedly selects the column most correlated with the residual (ties
    break to the lowest index) and least-squares refits on the selected
    support; stops after ``k_max`` atoms or when the residual norm drops to
    ``residual_tol``. Requires ``k_max <= m``. Binary-valued sensing columns
    can be exactly linearly dependent, so the refit uses the minimum-norm
    least-squares solution; a dependent pick leaves the residual unchanged
    and the loop exits on the repeated-index check.
    """
    A = system.A
    m, n = A.shape
    y = np.asarray(y)
    if k_max is None:
        k_max = m
    if not 1 <= k_max <= m:
        raise ValueError(f"k_max must satisfy 1 <= k_max <= m={m}, got {k_max}")
    ynorm = float(np.linalg.norm(y))
    dtype = np.complex128 if np.iscomplexobj(y) else np.float64
    x_hat = np.zeros(n, dtype=dtype)
    if ynorm == 0.0:
        return RecoveryResult(x_hat, 0.0, 0.0, 0, True, "omp", system.epsilon)
    support: list[int] = []
    residual = y.astype(dtype, copy=True)
    coef = np.zeros(0, dtype=dtype)
    floor = max(residual_tol, 1e-12 * ynorm)
    for _ in range(k_max):
        proxy = np.abs(A.conj().T @ residual)
        j = int(np.argmax(proxy))
        if j in support:
            break
        support.append(j)
        sub = A[:, support]
        coef, _, _, _ = np.linalg.lstsq(sub, y, rcond=None)
        residual = y - sub @ coef
        if float(np.linalg.norm(residual)) <= floor:
            break
    x_hat[support] = coef
    rnorm = float(np.linalg.norm(residual))
    return RecoveryResult(
        x_hat=x_hat,
        residual_norm=rnorm,
        objective=float(np.sum(np.abs(x_hat))),
        iterations=len(support),
        converged=_greedy_converged(rnorm, system, tol_feas, max(residual_tol, 1e-12 * ynorm)),
        solver_id="omp",
        epsilon=system.epsilon,
    )


def cosamp(
    system: SensingSystem,
    y: np.ndarray,
    k: int,
    max_iter: int = 100,
    stagnation_tol: float = 1e-9,
    tol_feas: float = 1e-6,
) -> RecoveryResult:
    """Compressive sampling matching pursuit; output is exactly k-sparse.

    Each iteration forms the proxy A^H r, merges the top-2k proxy indices
    with the current support, least-squares fits on the merged support, and
    prunes back to the k largest coefficients. The fit is the minimum-norm
    least-squares solution, which also covers merges wider than m columns and
    the exact rank drops that binary-valued sensing columns produce at small
    m. Halts when the residual norm stagnates (relative change below
    ``stagnation_tol``), vanishes, or after ``max_iter`` iterations.
    """
    A = system.A
    m, n = A.shape
    y = np.asarray(y)
    if k < 1:
        raise ValueError("k must be at least 1")
    ynorm = float(np.linalg.norm(y))
    dtype = np.complex128 if np.iscomplexobj(y) else np.float64
    x_hat = np.zeros(n, dtype=dtype)
    if ynorm == 0.0:
        return RecoveryResult(x_hat, 0.0, 0.0, 0, True, "cosamp", system.epsilon)
    residual = y.astype(dtype, copy=True)
    prev_norm = ynorm
    it = 0
    for it in range(1, max_iter + 1):
        proxy = np.abs(A.conj().T @ residual)
        top = np.argsort(-proxy, kind="stable")[: min(2 * k, n)]
        merged = np.union1d(top, np.flatnonzero(x_hat))
        sub = A[:, merged]
        coef, _, _, _ = np.linalg.lstsq(sub, y, rcond=None)
        keep = np.argsort(-np.abs(coef), kind="stable")[: min(k, len(merged))]
        x_hat = np.zeros(n, dtype=dtype)
        x_hat[merged[keep]] = coef[keep]
        residual = y - A @ x_hat
        rnorm = float(np.linalg.norm(residual))
        if rnorm <= 1e-12 * ynorm or abs(prev_norm - rnorm) <= stagnation_tol * ynorm:
            break
        prev_norm = rnorm
    rnorm = float(np.linalg.norm(residual))
    return RecoveryResult(
        x_hat=x_hat,
        residual_norm=rnorm,
        objective=float(np.sum(np.abs(x_hat))),
        iterations=it,
        converged=_greedy_converged(rnorm, system, tol_feas, 1e-12 * ynorm),
        solver_id="cosamp",
        epsilon=system.epsilon,
    )
