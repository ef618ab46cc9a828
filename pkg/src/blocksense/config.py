"""Declarative experiment configuration (TOML).

A config names the block structure, the sweep (measurement counts and/or SNR
points), the solver set, trial count, seed, and output destination. Parsing
is strict: unknown keys and duplicate keys are rejected with line-numbered
messages where available, and documented defaults fill everything optional.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .solvers import SolverOptions
from .spectrum import BlockSpec, make_block_spec

KNOWN_SOLVERS = ("weighted_l1", "lasso", "omp", "cosamp")

_SCHEMA: dict[str, set[str]] = {
    "spec": {"block_sizes", "block_probs"},
    "experiment": {
        "m",
        "snr_db",
        "snr_mode",
        "solvers",
        "trials",
        "seed",
        "alpha",
        "pf_grid",
        "k0_grid",
    },
    "solver": {"rho", "max_iter", "tol", "tol_feas"},
    "output": {"path", "format"},
}

_DEFAULTS = {
    "m": (27,),
    "snr_db": (20.0,),
    "snr_mode": "sensing",
    "solvers": KNOWN_SOLVERS,
    "trials": 200,
    "seed": 0,
    "alpha": 0.04,
}


class ConfigError(ValueError):
    """Invalid configuration; carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment description.

    ``m`` and ``snr_db`` are stored as tuples even when the file gives a
    scalar; commands that need a fixed value require a length-1 tuple.
    """

    spec: BlockSpec
    m: tuple[int, ...] = _DEFAULTS["m"]
    snr_db: tuple[float, ...] = _DEFAULTS["snr_db"]
    snr_mode: str = _DEFAULTS["snr_mode"]
    solvers: tuple[str, ...] = _DEFAULTS["solvers"]
    trials: int = _DEFAULTS["trials"]
    seed: int = _DEFAULTS["seed"]
    alpha: float = _DEFAULTS["alpha"]
    pf_grid: tuple[float, ...] | None = None
    k0_grid: tuple[int, ...] | None = None
    solver_options: SolverOptions = field(default_factory=SolverOptions)
    output_path: str | None = None
    output_format: str = "csv"

    def __post_init__(self) -> None:
        if not self.m or any(int(v) != v or v < 1 for v in self.m):
            raise ConfigError("m must be a positive integer or a nonempty list of them")
        if any(v > self.spec.n for v in self.m):
            raise ConfigError(f"m cannot exceed the band count n={self.spec.n}")
        if not self.snr_db:
            raise ConfigError("snr_db list must be nonempty")
        if self.snr_mode not in ("sensing", "received"):
            raise ConfigError(f"snr_mode must be 'sensing' or 'received', got {self.snr_mode!r}")
        if not self.solvers:
            raise ConfigError("solver set must be nonempty")
        for s in self.solvers:
            if s not in KNOWN_SOLVERS:
                raise ConfigError(f"unknown solver {s!r}; choose from {list(KNOWN_SOLVERS)}")
        if len(set(self.solvers)) != len(self.solvers):
            raise ConfigError("solver list contains duplicates")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie strictly between 0 and 1")
        if self.pf_grid is not None:
            if not self.pf_grid or any(not 0.0 < p < 1.0 for p in self.pf_grid):
                raise ConfigError("pf_grid entries must lie strictly between 0 and 1")
        if self.k0_grid is not None:
            if not self.k0_grid or any(int(k) != k or k < 0 for k in self.k0_grid):
                raise ConfigError("k0_grid must be a nonempty list of nonnegative integers")
        if self.output_format not in ("csv", "jsonl"):
            raise ConfigError(f"output format must be 'csv' or 'jsonl', got {self.output_format!r}")
        object.__setattr__(self, "m", tuple(int(v) for v in self.m))
        object.__setattr__(self, "snr_db", tuple(float(v) for v in self.snr_db))
        object.__setattr__(self, "solvers", tuple(self.solvers))
        if self.pf_grid is not None:
            object.__setattr__(self, "pf_grid", tuple(float(p) for p in self.pf_grid))
        if self.k0_grid is not None:
            object.__setattr__(self, "k0_grid", tuple(int(k) for k in self.k0_grid))

    def content_dict(self) -> dict[str, Any]:
        """Everything that affects computed results (not where they are written)."""
        return {
            "spec": {
                "block_sizes": [int(s) for s in self.spec.sizes],
                "block_probs": [float(p) for p in self.spec.probs],
            },
            "experiment": {
                "m": list(self.m),
                "snr_db": list(self.snr_db),
                "snr_mode": self.snr_mode,
                "solvers": list(self.solvers),
                "trials": self.trials,
                "seed": self.seed,
                "alpha": self.alpha,
                "pf_grid": list(self.pf_grid) if self.pf_grid is not None else None,
                "k0_grid": list(self.k0_grid) if self.k0_grid is not None else None,
            },
            "solver": {
                "rho": self.solver_options.rho,
                "max_iter": self.solver_options.max_iter,
                "tol": self.solver_options.tol,
                "tol_feas": self.solver_options.tol_feas,
            },
        }

    def to_toml(self) -> str:
        """Echo the resolved config (defaults included) as TOML text."""

        def fmt(value: Any) -> str:
            if isinstance(value, bool):
                return "true" if value else "false"
            if isinstance(value, str):
                return f'"{value}"'
            if isinstance(value, (list, tuple)):
                return "[" + ", ".join(fmt(v) for v in value) + "]"
            if isinstance(value, float):
                return repr(value)
            return str(value)

        lines = ["[spec]"]
        lines.append(f"block_sizes = {fmt([int(s) for s in self.spec.sizes])}")
        lines.append(f"block_probs = {fmt([float(p) for p in self.spec.probs])}")
        lines.append("")
        lines.append("[experiment]")
        lines.append(f"m = {fmt(list(self.m))}")
        lines.append(f"snr_db = {fmt(list(self.snr_db))}")
        lines.append(f"snr_mode = {fmt(self.snr_mode)}")
        lines.append(f"solvers = {fmt(list(self.solvers))}")
        lines.append(f"trials = {self.trials}")
        lines.append(f"seed = {self.seed}")
        lines.append(f"alpha = {fmt(self.alpha)}")
        if self.pf_grid is not None:
            lines.append(f"pf_grid = {fmt(list(self.pf_grid))}")
        if self.k0_grid is not None:
            lines.append(f"k0_grid = {fmt(list(self.k0_grid))}")
        lines.append("")
        lines.append("[solver]")
        lines.append(f"rho = {fmt(self.solver_options.rho)}")
        lines.append(f"max_iter = {self.solver_options.max_iter}")
        lines.append(f"tol = {fmt(self.solver_options.tol)}")
        lines.append(f"tol_feas = {fmt(self.solver_options.tol_feas)}")
        if self.output_path is not None or self.output_format != "csv":
            lines.append("")
            lines.append("[output]")
            if self.output_path is not None:
                lines.append(f"path = {fmt(self.output_path)}")
            lines.append(f"format = {fmt(self.output_format)}")
        return "\n".join(lines) + "\n"


def _find_key_line(text: str, key: str) -> int | None:
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.lstrip()
        if stripped.startswith(key) and stripped[len(key):].lstrip().startswith("="):
            return lineno
        if stripped.startswith(f"[{key}]"):
            return lineno
    return None


def _as_list(value: Any) -> list:
    return list(value) if isinstance(value, list) else [value]


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse and validate TOML config text into an ExperimentConfig."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:  # duplicate keys land here with a location
        raise ConfigError(f"invalid TOML: {exc}") from exc

    for section, body in raw.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", _find_key_line(text, section))
        if not isinstance(body, dict):
            raise ConfigError(f"[{section}] must be a table", _find_key_line(text, section))
        for key in body:
            if key not in _SCHEMA[section]:
                raise ConfigError(
                    f"unknown key {key!r} in section [{section}]", _find_key_line(text, key)
                )

    spec_tbl = raw.get("spec")
    if not spec_tbl or "block_sizes" not in spec_tbl or "block_probs" not in spec_tbl:
        raise ConfigError("a [spec] section with block_sizes and block_probs is required")
    try:
        spec = make_block_spec(spec_tbl["block_sizes"], spec_tbl["block_probs"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [spec]: {exc}", _find_key_line(text, "block_sizes")) from exc

    exp = raw.get("experiment", {})
    sol = raw.get("solver", {})
    out = raw.get("output", {})
    try:
        options = SolverOptions(
            rho=float(sol.get("rho", 1.0)),
            max_iter=int(sol.get("max_iter", 10_000)),
            tol=float(sol.get("tol", 1e-6)),
            tol_feas=float(sol.get("tol_feas", 1e-6)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [solver] options: {exc}", _find_key_line(text, "rho")) from exc

    def tuple_or_default(key: str, default: tuple) -> tuple:
        if key not in exp:
            return default
        return tuple(_as_list(exp[key]))

    try:
        return ExperimentConfig(
            spec=spec,
            m=tuple_or_default("m", _DEFAULTS["m"]),
            snr_db=tuple_or_default("snr_db", _DEFAULTS["snr_db"]),
            snr_mode=exp.get("snr_mode", _DEFAULTS["snr_mode"]),
            solvers=tuple(_as_list(exp.get("solvers", list(_DEFAULTS["solvers"])))),
            trials=int(exp.get("trials", _DEFAULTS["trials"])),
            seed=int(exp.get("seed", _DEFAULTS["seed"])),
            alpha=float(exp.get("alpha", _DEFAULTS["alpha"])),
            pf_grid=tuple(exp["pf_grid"]) if "pf_grid" in exp else None,
            k0_grid=tuple(exp["k0_grid"]) if "k0_grid" in exp else None,
            solver_options=options,
            output_path=out.get("path"),
            output_format=out.get("format", "csv"),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(source: str | Path | io.TextIOBase) -> ExperimentConfig:
    """Parse a config from a file path or an open text stream."""
    if isinstance(source, io.TextIOBase):
        return parse_config_text(source.read())
    return parse_config_text(Path(source).read_text(encoding="utf-8"))
