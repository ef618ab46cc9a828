"""Seeded Monte-Carlo experiment runner.

Turns an ExperimentConfig into sweep records: recovery-error curves over an
SNR sweep, paired error-gain curves over a measurement-count sweep, detection
ROC curves over a false-alarm grid, and the occupancy tail-bound curve. Every
record is reproducible bit-for-bit from (config, seed): per-trial RNG streams
derive deterministically from (seed, sweep index, trial index), all solvers
at a sweep point consume identical (truth, matrix, noise) triples, and
wall-clock time is logged to stderr but never serialized into output files.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .config import ExperimentConfig
from .detection import decide_and_score, detection_threshold
from .sensing import acquire_measurements, generate_sensing_matrix
from .solvers import SolverOptions, compute_weights, cosamp, omp, solve_l1, solve_weighted_l1
from .spectrum import BlockSpec, SpectrumInstance, chernoff_tail_bound, occupancy_pmf, sample_occupancy, select_sparsity_level

log = logging.getLogger("blocksense")

_MAX_EMPTY_SUPPORT_RETRIES = 100

CSV_COLUMNS = (
    "figure",
    "m",
    "snr_db",
    "pf_target",
    "k0",
    "solver",
    "trials",
    "nonconverged",
    "err_mean",
    "err_std",
    "err_ci95",
    "epg_vs_lasso",
    "epg_ci95_lasso",
    "epg_vs_omp",
    "epg_ci95_omp",
    "epg_vs_cosamp",
    "epg_ci95_cosamp",
    "epg_undefined",
    "pd",
    "pf",
    "iters_mean",
    "chernoff_bound",
    "exact_tail",
)


@dataclass
class SweepRecord:
    """One output row: a sweep coordinate plus aggregated solver statistics.

    ``err_*`` aggregate the per-trial l2 recovery error ||x_hat - x0||_2.
    ``epg`` maps a baseline solver id to (mean error gain %, CI half-width),
    where the per-trial gain is (err_base - err_prop) / err_base * 100 on
    paired data. ``wall_time_s`` is for progress logs only and is excluded
    from serialized rows.
    """

    figure: str
    solver: str | None = None
    m: int | None = None
    snr_db: float | None = None
    pf_target: float | None = None
    k0: int | None = None
    trials: int | None = None
    nonconverged: int | None = None
    err_mean: float | None = None
    err_std: float | None = None
    err_ci95: float | None = None
    epg: dict[str, tuple[float, float]] = field(default_factory=dict)
    epg_undefined: int | None = None
    pd: float | None = None
    pf: float | None = None
    iters_mean: float | None = None
    chernoff_bound: float | None = None
    exact_tail: float | None = None
    wall_time_s: float | None = None

    def to_row(self) -> dict[str, str]:
        def fmt(value) -> str:
            if value is None:
                return ""
            if isinstance(value, float):
                return format(value, ".10g")
            return str(value)

        row = {
            "figure": self.figure,
            "m": fmt(self.m),
            "snr_db": fmt(self.snr_db),
            "pf_target": fmt(self.pf_target),
            "k0": fmt(self.k0),
            "solver": self.solver or "",
            "trials": fmt(self.trials),
            "nonconverged": fmt(self.nonconverged),
            "err_mean": fmt(self.err_mean),
            "err_std": fmt(self.err_std),
            "err_ci95": fmt(self.err_ci95),
            "epg_undefined": fmt(self.epg_undefined),
            "pd": fmt(self.pd),
            "pf": fmt(self.pf),
            "iters_mean": fmt(self.iters_mean),
            "chernoff_bound": fmt(self.chernoff_bound),
            "exact_tail": fmt(self.exact_tail),
        }
        for base in ("lasso", "omp", "cosamp"):
            mean_ci = self.epg.get(base)
            row[f"epg_vs_{base}"] = fmt(mean_ci[0]) if mean_ci else ""
            row[f"epg_ci95_{base}"] = fmt(mean_ci[1]) if mean_ci else ""
        return row


def config_hash(config: ExperimentConfig) -> str:
    payload = json.dumps(config.content_dict(), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


def greedy_sparsity(k0: int, m: int, solver: str) -> int:
    """Design sparsity clipped to the solver's stable operating range.

    OMP cannot select more than m atoms; CoSaMP's merged least-squares fit
    turns near-singular when asked for around m/3..m atoms, so its input is
    capped at m // 2 (inactive once m >= 2 * k0).
    """
    if solver == "omp":
        return max(1, min(k0, m))
    if solver == "cosamp":
        return max(1, min(k0, m // 2))
    raise ValueError(f"not a greedy solver: {solver}")


def trial_rngs(seed: int, sweep_idx: int, trial_idx: int) -> tuple[np.random.Generator, ...]:
    """Three independent per-trial streams: instance, matrix, noise."""
    root = np.random.SeedSequence([seed, sweep_idx, trial_idx])
    return tuple(np.random.default_rng(s) for s in root.spawn(3))


def _sample_nonzero_instance(spec: BlockSpec, rng: np.random.Generator) -> SpectrumInstance:
    for _ in range(_MAX_EMPTY_SUPPORT_RETRIES):
        inst = sample_occupancy(spec, rng)
        if inst.occupancy > 0:
            return inst
    raise RuntimeError(
        "could not draw an occupied spectrum instance (occupancy probabilities too small?); "
        "an SNR-calibrated experiment needs a nonzero signal"
    )


def _trial_worker(args: tuple) -> dict:
    """Run all configured solvers on one shared (truth, matrix, noise) draw.

    Module-level so process pools can pickle it. Returns plain floats/lists
    only, keeping the payload small regardless of n.
    """
    (blocks, m, snr_db, snr_mode, solvers, opts_tuple, seed, sweep_idx, trial_idx, k0, pf_grid) = args
    spec = BlockSpec(blocks=blocks)
    options = SolverOptions(*opts_tuple)
    rng_inst, rng_mat, rng_noise = trial_rngs(seed, sweep_idx, trial_idx)
    inst = _sample_nonzero_instance(spec, rng_inst)
    system = generate_sensing_matrix(m, spec.n, rng_mat)
    meas = acquire_measurements(system, inst, rng_noise, snr_db=snr_db, snr_mode=snr_mode)
    calibrated = meas.system
    weights = compute_weights(spec)

    out: dict = {"trial": trial_idx, "solvers": {}}
    noise_energy_mean = calibrated.m * calibrated.noise_sigma**2
    for solver in solvers:
        if solver == "weighted_l1":
            result = solve_weighted_l1(calibrated, meas.y, weights, options)
        elif solver == "lasso":
            result = solve_l1(calibrated, meas.y, options)
        elif solver == "omp":
            result = omp(calibrated, meas.y, k_max=greedy_sparsity(k0, m, "omp"))
        elif solver == "cosamp":
            result = cosamp(calibrated, meas.y, k=greedy_sparsity(k0, m, "cosamp"))
        else:
            raise ValueError(f"unknown solver {solver!r}")
        err = float(np.linalg.norm(result.x_hat - inst.x))
        entry: dict = {
            "err": err,
            "iterations": result.iterations,
            "converged": bool(result.converged),
        }
        if pf_grid is not None:
            roc = []
            for pf_target in pf_grid:
                lam = detection_threshold(noise_energy_mean, m, pf_target)
                report = decide_and_score(result.x_hat, inst, lam, pf_target=pf_target)
                roc.append((report.pd, report.pf))
            entry["roc"] = roc
        out["solvers"][solver] = entry
    return out


def _run_point_trials(
    config: ExperimentConfig,
    sweep_idx: int,
    m: int,
    snr_db: float,
    k0: int,
    workers: int,
    pf_grid: tuple[float, ...] | None = None,
) -> list[dict]:
    opts = config.solver_options
    tasks = [
        (
            config.spec.blocks,
            m,
            snr_db,
            config.snr_mode,
            config.solvers,
            (opts.rho, opts.max_iter, opts.tol, opts.tol_feas),
            config.seed,
            sweep_idx,
            trial_idx,
            k0,
            pf_grid,
        )
        for trial_idx in range(config.trials)
    ]
    if workers <= 1:
        return [_trial_worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, config.trials // (4 * workers))
        # map preserves task order, so the merge is deterministic no matter
        # which worker finishes first.
        return list(pool.map(_trial_worker, tasks, chunksize=chunk))


def _mean_std_ci(values: np.ndarray) -> tuple[float, float, float]:
    mean = float(values.mean())
    if values.size < 2:
        return mean, 0.0, 0.0
    std = float(values.std(ddof=1))
    return mean, std, 1.96 * std / math.sqrt(values.size)


def _point_records(
    figure: str,
    config: ExperimentConfig,
    trials: list[dict],
    m: int,
    snr_db: float,
    k0: int,
    wall_time_s: float,
) -> list[SweepRecord]:
    records = []
    errs = {s: np.array([t["solvers"][s]["err"] for t in trials]) for s in config.solvers}
    for solver in config.solvers:
        err_mean, err_std, err_ci = _mean_std_ci(errs[solver])
        iters = np.array([t["solvers"][solver]["iterations"] for t in trials], dtype=np.float64)
        nonconv = sum(1 for t in trials if not t["solvers"][solver]["converged"])
        record = SweepRecord(
            figure=figure,
            solver=solver,
            m=m,
            snr_db=snr_db,
            k0=k0,
            trials=len(trials),
            nonconverged=nonconv,
            err_mean=err_mean,
            err_std=err_std,
            err_ci95=err_ci,
            iters_mean=float(iters.mean()),
            wall_time_s=wall_time_s,
        )
        if solver == "weighted_l1":
            undefined = 0
            for base in config.solvers:
                if base == "weighted_l1":
                    continue
                base_err = errs[base]
                usable = base_err > 0
                undefined += int(np.sum(~usable))
                if not np.any(usable):
                    continue
                gains = (base_err[usable] - errs["weighted_l1"][usable]) / base_err[usable] * 100.0
                g_mean, _, g_ci = _mean_std_ci(gains)
                record.epg[base] = (g_mean, g_ci)
            record.epg_undefined = undefined
        records.append(record)
    return records


def _require_scalar(values: Sequence, name: str):
    if len(values) != 1:
        raise ValueError(f"this figure needs a single {name}, got {list(values)}")
    return values[0]


def run_mse_sweep(config: ExperimentConfig, workers: int = 1) -> list[SweepRecord]:
    """Recovery error vs SNR at fixed m, all configured solvers on paired data."""
    m = _require_scalar(config.m, "m")
    k0 = select_sparsity_level(config.spec, config.alpha)
    records: list[SweepRecord] = []
    for sweep_idx, snr_db in enumerate(config.snr_db):
        t0 = time.perf_counter()
        trials = _run_point_trials(config, sweep_idx, m, snr_db, k0, workers)
        wall = time.perf_counter() - t0
        log.info("mse point %d/%d (snr=%g dB): %d trials in %.2fs", sweep_idx + 1, len(config.snr_db), snr_db, len(trials), wall)
        records.extend(_point_records("mse", config, trials, m, snr_db, k0, wall))
    return records


def run_epg_sweep(config: ExperimentConfig, workers: int = 1) -> list[SweepRecord]:
    """Paired error gain vs measurement count at fixed SNR.

    Requires the weighted solver plus at least one baseline; the gain columns
    appear on the weighted solver's rows.
    """
    snr_db = _require_scalar(config.snr_db, "snr_db")
    if "weighted_l1" not in config.solvers or len(config.solvers) < 2:
        raise ValueError("the error-gain figure needs weighted_l1 plus at least one baseline solver")
    k0 = select_sparsity_level(config.spec, config.alpha)
    records: list[SweepRecord] = []
    for sweep_idx, m in enumerate(config.m):
        t0 = time.perf_counter()
        trials = _run_point_trials(config, sweep_idx, m, snr_db, k0, workers)
        wall = time.perf_counter() - t0
        log.info("epg point %d/%d (m=%d): %d trials in %.2fs", sweep_idx + 1, len(config.m), m, len(trials), wall)
        records.extend(_point_records("epg", config, trials, m, snr_db, k0, wall))
    return records


def run_roc(config: ExperimentConfig, workers: int = 1) -> list[SweepRecord]:
    """Detection/false-alarm rates over the configured pf grid at fixed m and SNR.

    Each trial recovers once per solver and sweeps the threshold over the
    grid, so the whole ROC curve is paired across pf targets as well as
    across solvers.
    """
    m = _require_scalar(config.m, "m")
    snr_db = _require_scalar(config.snr_db, "snr_db")
    if not config.pf_grid:
        raise ValueError("the ROC figure needs a nonempty pf_grid")
    k0 = select_sparsity_level(config.spec, config.alpha)
    t0 = time.perf_counter()
    trials = _run_point_trials(config, 0, m, snr_db, k0, workers, pf_grid=config.pf_grid)
    wall = time.perf_counter() - t0
    log.info("roc: %d trials x %d grid points in %.2fs", len(trials), len(config.pf_grid), wall)
    records: list[SweepRecord] = []
    for grid_idx, pf_target in enumerate(config.pf_grid):
        for solver in config.solvers:
            pds = [t["solvers"][solver]["roc"][grid_idx][0] for t in trials]
            pfs = [t["solvers"][solver]["roc"][grid_idx][1] for t in trials]
            pds = [v for v in pds if v is not None]
            pfs = [v for v in pfs if v is not None]
            errs = np.array([t["solvers"][solver]["err"] for t in trials])
            err_mean, err_std, err_ci = _mean_std_ci(errs)
            records.append(
                SweepRecord(
                    figure="roc",
                    solver=solver,
                    m=m,
                    snr_db=snr_db,
                    pf_target=pf_target,
                    k0=k0,
                    trials=len(trials),
                    nonconverged=sum(1 for t in trials if not t["solvers"][solver]["converged"]),
                    err_mean=err_mean,
                    err_std=err_std,
                    err_ci95=err_ci,
                    pd=float(np.mean(pds)) if pds else None,
                    pf=float(np.mean(pfs)) if pfs else None,
                    iters_mean=float(np.mean([t["solvers"][solver]["iterations"] for t in trials])),
                    wall_time_s=wall,
                )
            )
    return records


def run_sparsity_figure(config: ExperimentConfig) -> list[SweepRecord]:
    """Occupancy tail bound (and exact tail) over a sparsity-level grid."""
    spec = config.spec
    if config.k0_grid is not None:
        grid: Iterable[int] = config.k0_grid
    else:
        grid = range(1, min(spec.n, 40) + 1)
    pmf = occupancy_pmf(spec)
    records = []
    for k0 in grid:
        records.append(
            SweepRecord(
                figure="sparsity",
                k0=int(k0),
                chernoff_bound=chernoff_tail_bound(spec, k0).value,
                exact_tail=pmf.cdf(int(k0)),
            )
        )
    return records


RUNNERS = {
    "mse": run_mse_sweep,
    "epg": run_epg_sweep,
    "roc": run_roc,
    "sparsity": lambda config, workers=1: run_sparsity_figure(config),
}


def run_figure(figure: str, config: ExperimentConfig, workers: int = 1) -> list[SweepRecord]:
    if figure not in RUNNERS:
        raise ValueError(f"unknown figure {figure!r}; choose from {sorted(RUNNERS)}")
    return RUNNERS[figure](config, workers=workers)


def write_csv(records: list[SweepRecord], config: ExperimentConfig, stream: io.TextIOBase) -> None:
    """Plot-ready CSV: a config-hash header comment, then fixed columns.

    Wall time never appears — outputs are byte-identical across reruns with
    the same config and seed.
    """
    stream.write(f"# config_hash={config_hash(config)} seed={config.seed}\n")
    writer = csv.DictWriter(stream, fieldnames=list(CSV_COLUMNS), lineterminator="\n")
    writer.writeheader()
    for record in records:
        writer.writerow(record.to_row())


def write_jsonl(records: list[SweepRecord], config: ExperimentConfig, stream: io.TextIOBase) -> None:
    """JSON-lines mirror of the CSV rows (same fields, empty strings omitted)."""
    header = {"config_hash": config_hash(config), "seed": config.seed}
    stream.write(json.dumps(header, sort_keys=True) + "\n")
    for record in records:
        row = {k: v for k, v in record.to_row().items() if v != ""}
        stream.write(json.dumps(row, sort_keys=True) + "\n")


def write_records(
    records: list[SweepRecord],
    config: ExperimentConfig,
    stream: io.TextIOBase,
    fmt: str | None = None,
) -> None:
    fmt = fmt or config.output_format
    if fmt == "csv":
        write_csv(records, config, stream)
    elif fmt == "jsonl":
        write_jsonl(records, config, stream)
    else:
        raise ValueError(f"unknown output format {fmt!r}")
