"""Sweep driver: seeded Monte Carlo cells over (procedure, n, error range, clamp).

A cell is identified by its procedure, evidence-node count, error range and
clamp setting.  Cells that differ only by procedure share their per-run true
and belief models (the seed derivation ignores the procedure), which both
reduces comparison variance and makes single-cell reruns reproduce the exact
values of a full sweep.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import engine, metrics
from .metrics import ConditionalSummary
from .procedures import (DEFAULT_BAND, DEFAULT_THRESHOLD, DEFAULT_WEIGHT_CAP,
                         KINDS, Procedure)

DEFAULT_ERROR_RANGES = tuple(round(0.2 * k, 1) for k in range(11))
DEFAULT_EVIDENCE_COUNTS = (4, 7)
DEFAULT_RUNS_PER_CELL = 20000

CONFIG_KEYS = (
    "evidence_counts", "error_ranges", "runs_per_cell", "master_seed",
    "procedures", "strong_band_lo", "strong_band_hi", "default_threshold",
    "weighted_cap", "clamp_lo", "clamp_hi", "output_dir",
)


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class Cell:
    procedure: Procedure
    n: int
    error_range: float
    clamp: tuple[float, float] | None = None


@dataclass(eq=False)
class CellResult:
    """Aggregates of one cell, averaged over its runs."""

    procedure: Procedure
    n: int
    error_range: float
    clamp: tuple[float, float] | None
    runs: int
    hist_t: np.ndarray
    hist_f: np.ndarray
    summary_t: ConditionalSummary
    summary_f: ConditionalSummary
    dprime: float
    lr: np.ndarray
    brier: float
    degenerate_count: int

    @property
    def label(self) -> str:
        return self.procedure.label


@dataclass(frozen=True)
class ExperimentConfig:
    master_seed: int
    evidence_counts: tuple[int, ...] = DEFAULT_EVIDENCE_COUNTS
    error_ranges: tuple[float, ...] = DEFAULT_ERROR_RANGES
    runs_per_cell: int = DEFAULT_RUNS_PER_CELL
    procedures: tuple[Procedure, ...] | None = None  # None -> all kinds
    clamp: tuple[float, float] | None = None
    output_dir: str = "results"

    def __post_init__(self):
        if self.procedures is None:
            object.__setattr__(self, "procedures", default_procedures())
        for n in self.evidence_counts:
            if not 1 <= n <= 12:
                raise ConfigError("evidence_counts", f"count {n} out of range 1..12")
        for r in self.error_ranges:
            if not 0.0 <= r <= 2.0:
                raise ConfigError("error_ranges", f"range {r} out of [0, 2]")
        if self.runs_per_cell < 1:
            raise ConfigError("runs_per_cell", f"must be >= 1, got {self.runs_per_cell}")
        if self.clamp is not None:
            lo, hi = self.clamp
            if not 0.0 <= lo < hi <= 1.0:
                raise ConfigError("clamp_lo", f"need 0 <= lo < hi <= 1, got ({lo}, {hi})")


def default_procedures(band=DEFAULT_BAND, threshold=DEFAULT_THRESHOLD,
                       cap=DEFAULT_WEIGHT_CAP) -> tuple[Procedure, ...]:
    """One procedure of every kind with the given parameters."""
    return tuple(Procedure(kind, band=band, threshold=threshold, cap=cap)
                 for kind in KINDS)


def parse_config_text(text: str) -> dict[str, str]:
    """Flat key=value lines; blank lines and #-comments are ignored."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(stripped.split()[0], f"line {lineno} is not key=value")
        key, value = stripped.split("=", 1)
        raw[key.strip()] = value.strip()
    return raw


def _parse_list(key, value, conv):
    try:
        return tuple(conv(part.strip()) for part in value.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(key, f"cannot parse {value!r}: {exc}") from None


def _parse_scalar(key, value, conv):
    try:
        return conv(value)
    except ValueError:
        raise ConfigError(key, f"cannot parse {value!r}") from None


def build_config(raw: dict[str, str]) -> ExperimentConfig:
    """Typed configuration from parsed key/value strings."""
    for key in raw:
        if key not in CONFIG_KEYS:
            raise ConfigError(key, "unknown key")
    if "master_seed" not in raw:
        raise ConfigError("master_seed", "required key is missing")
    master_seed = _parse_scalar("master_seed", raw["master_seed"], int)

    counts = (_parse_list("evidence_counts", raw["evidence_counts"], int)
              if "evidence_counts" in raw else DEFAULT_EVIDENCE_COUNTS)
    ranges = (_parse_list("error_ranges", raw["error_ranges"], float)
              if "error_ranges" in raw else DEFAULT_ERROR_RANGES)
    runs = (_parse_scalar("runs_per_cell", raw["runs_per_cell"], int)
            if "runs_per_cell" in raw else DEFAULT_RUNS_PER_CELL)

    band = (
        _parse_scalar("strong_band_lo", raw.get("strong_band_lo", ""), float)
        if "strong_band_lo" in raw else DEFAULT_BAND[0],
        _parse_scalar("strong_band_hi", raw.get("strong_band_hi", ""), float)
        if "strong_band_hi" in raw else DEFAULT_BAND[1],
    )
    threshold = (_parse_scalar("default_threshold", raw["default_threshold"], float)
                 if "default_threshold" in raw else DEFAULT_THRESHOLD)
    cap = (_parse_scalar("weighted_cap", raw["weighted_cap"], float)
           if "weighted_cap" in raw else DEFAULT_WEIGHT_CAP)

    if "procedures" in raw:
        names = _parse_list("procedures", raw["procedures"], str)
        for name in names:
            if name not in KINDS:
                raise ConfigError("procedures", f"unknown procedure {name!r}")
        try:
            procedures = tuple(Procedure(name, band=band, threshold=threshold, cap=cap)
                               for name in names)
        except ValueError as exc:
            raise ConfigError("procedures", str(exc)) from None
    else:
        try:
            procedures = default_procedures(band=band, threshold=threshold, cap=cap)
        except ValueError as exc:
            raise ConfigError("procedures", str(exc)) from None

    if ("clamp_lo" in raw) != ("clamp_hi" in raw):
        missing = "clamp_hi" if "clamp_lo" in raw else "clamp_lo"
        raise ConfigError(missing, "clamp_lo and clamp_hi must be given together")
    clamp = None
    if "clamp_lo" in raw:
        clamp = (_parse_scalar("clamp_lo", raw["clamp_lo"], float),
                 _parse_scalar("clamp_hi", raw["clamp_hi"], float))

    return ExperimentConfig(
        master_seed=master_seed,
        evidence_counts=counts,
        error_ranges=ranges,
        runs_per_cell=runs,
        procedures=procedures,
        clamp=clamp,
        output_dir=raw.get("output_dir", "results"),
    )


def apply_overrides(raw: dict[str, str], overrides) -> dict[str, str]:
    """Merge key=value override strings (from --set flags) into raw config."""
    merged = dict(raw)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override is not key=value")
        key, value = item.split("=", 1)
        merged[key.strip()] = value.strip()
    return merged


def load_config(path: str, overrides=()) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        raw = parse_config_text(fh.read())
    return build_config(apply_overrides(raw, overrides))


def derive_run_seed(master_seed: int, cell: Cell, run_index: int) -> tuple[int, ...]:
    """Stable per-run seed: mixes the master seed, the model part of the cell
    identity (n, error range, clamp) and the run index.

    The procedure does not participate, so cells differing only by procedure
    draw identical models.
    """
    key = engine.encode_cell_key(cell.n, cell.error_range, cell.clamp)
    return engine.run_seed(master_seed, key, run_index)


def run_generator(seed: tuple[int, ...]) -> np.random.Generator:
    return engine.run_generator(seed)


def _finalize(acc: engine.SliceAccumulator, cell: Cell) -> CellResult:
    runs = acc.runs
    hist_t = acc.hist_t / runs
    hist_f = acc.hist_f / runs
    mean_t = acc.sum_mean_t / runs
    mean_f = acc.sum_mean_f / runs
    summary_t = ConditionalSummary(mean_t, max(acc.sum_m2_t / runs - mean_t ** 2, 0.0))
    summary_f = ConditionalSummary(mean_f, max(acc.sum_m2_f / runs - mean_f ** 2, 0.0))
    return CellResult(
        procedure=cell.procedure,
        n=cell.n,
        error_range=cell.error_range,
        clamp=cell.clamp,
        runs=runs,
        hist_t=hist_t,
        hist_f=hist_f,
        summary_t=summary_t,
        summary_f=summary_f,
        dprime=metrics.dprime(summary_t, summary_f),
        lr=metrics.lr_table(hist_t, hist_f),
        brier=acc.sum_brier / runs,
        degenerate_count=acc.degenerate,
    )


def run_cell(config: ExperimentConfig, cell: Cell) -> CellResult:
    """Evaluate a single cell; bit-identical to its value within a full sweep."""
    accs = engine.evaluate_slice(cell.n, cell.error_range, cell.clamp,
                                 (cell.procedure,), config.runs_per_cell,
                                 config.master_seed)
    return _finalize(accs[cell.procedure.label], cell)


def cells_for(config: ExperimentConfig) -> list[Cell]:
    """Cross product in canonical output order (procedure, n, error range)."""
    return [Cell(proc, n, err, config.clamp)
            for proc in config.procedures
            for n in config.evidence_counts
            for err in config.error_ranges]


def _slice_jobs(config: ExperimentConfig):
    """(n, error_range) slices in a deterministic order."""
    return [(n, err) for n in config.evidence_counts for err in config.error_ranges]


def _run_slice_job(args):
    n, err, clamp, procedures, runs, master_seed = args
    return engine.evaluate_slice(n, err, clamp, procedures, runs, master_seed)


def run_experiment(config: ExperimentConfig, progress=None, workers: int = 1) -> list[CellResult]:
    """Evaluate every cell of the configuration.

    Results come back in canonical (procedure, n, error range) order and are
    bit-identical for any worker count: workers parallelize whole slices, and
    each slice is computed exactly as in the sequential path.
    """
    if not config.procedures:
        warnings.warn("no procedures configured; empty sweep")
        return []
    jobs = _slice_jobs(config)
    args = [(n, err, config.clamp, config.procedures,
             config.runs_per_cell, config.master_seed) for n, err in jobs]
    slice_accs = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for (n, err), accs in zip(jobs, pool.map(_run_slice_job, args)):
                slice_accs[(n, err)] = accs
                if progress is not None:
                    progress(f"slice n={n} error_range={err} done "
                             f"({len(config.procedures)} procedures, "
                             f"{config.runs_per_cell} runs)")
    else:
        for (n, err), job in zip(jobs, args):
            slice_accs[(n, err)] = _run_slice_job(job)
            if progress is not None:
                progress(f"slice n={n} error_range={err} done "
                         f"({len(config.procedures)} procedures, "
                         f"{config.runs_per_cell} runs)")
    results = []
    for cell in cells_for(config):
        accs = slice_accs[(cell.n, cell.error_range)]
        results.append(_finalize(accs[cell.procedure.label], cell))
    return results
