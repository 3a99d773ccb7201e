"""Experiment orchestration: table runs, reports, and file formats.

Every emitted number is a pure function of the echoed config and seed; cell
seeds derive from (config seed, cell coordinates), so tables can be rerun or
parallelized without changing the payload. Wall-clock information lives only
in the report metadata, never in the payload.

Table conventions (mirroring the source tables): Monte Carlo means are
rounded to 4 decimals in CSV, closed-form lower bounds are truncated to
4 decimals everywhere.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .geometry import GENERATOR_ID, MetricPair, TruckNorm, derive_seed, generate_instance
from .lowerbound import lb_param, rho_star
from .solvers import HeuristicConfig, scaled_makespan, tspd_heuristic
from .stripbound import PatternKind, optimize_then_estimate, require_euclidean

DEFAULT_ALPHAS = (1.0, 1.5, 2.0, 2.5, 3.0)
DEFAULT_SIZES = (50, 200, 500, 1000)
DEFAULT_BETAS = (0.71, 0.6277)


def truncate4(x: float) -> float:
    """Truncate toward zero to 4 decimals (lower-bound table convention)."""
    return math.floor(x * 10000.0) / 10000.0


def round4(x: float) -> float:
    return round(x, 4)


@dataclass(frozen=True)
class ExperimentConfig:
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    sizes: tuple[int, ...] = DEFAULT_SIZES
    instances_per_cell: int = 30
    samples: int = 2_000_000
    seed: int = 0
    metric: TruckNorm = TruckNorm.EUCLIDEAN
    output_path: Optional[str] = None
    heuristic: HeuristicConfig = field(default_factory=HeuristicConfig)

    def __post_init__(self):
        if any(a < 1 for a in self.alphas):
            raise ValueError("all alphas must be >= 1")
        if any(s < 2 for s in self.sizes):
            raise ValueError("all sizes must be >= 2")
        if self.instances_per_cell < 1 or self.samples < 1:
            raise ValueError("counts must be >= 1")

    def echo(self) -> dict:
        return {
            "alphas": list(self.alphas),
            "sizes": list(self.sizes),
            "instances_per_cell": self.instances_per_cell,
            "samples": self.samples,
            "seed": self.seed,
            "metric": self.metric.value,
            "heuristic": {
                "restarts": self.heuristic.restarts,
                "patience": self.heuristic.patience,
                "moves_per_round": self.heuristic.moves_per_round,
                "or_opt_lengths": list(self.heuristic.or_opt_lengths),
                "max_ring": self.heuristic.max_ring,
                "tsp_restarts": self.heuristic.tsp_restarts,
                "anchor_tries": self.heuristic.anchor_tries,
            },
        }


@dataclass
class TableResult:
    kind: str
    rows: list[dict]
    config: dict
    seed: int
    elapsed: float
    cell_elapsed: list[float] = field(default_factory=list)

    def payload(self) -> dict:
        return {"kind": self.kind, "config": self.config, "rows": self.rows}


def run_upper_table(cfg: ExperimentConfig,
                    patterns: Sequence[PatternKind] = tuple(PatternKind)) -> TableResult:
    """Optimized strip bound for each pattern x alpha."""
    require_euclidean(cfg.metric)
    t0 = time.perf_counter()
    rows = []
    cell_elapsed = []
    for pi, pattern in enumerate(patterns):
        for ai, alpha in enumerate(cfg.alphas):
            c0 = time.perf_counter()
            est = optimize_then_estimate(
                pattern, alpha, cfg.samples, derive_seed(cfg.seed, pi, ai))
            rows.append({
                "pattern": pattern.value,
                "alpha": alpha,
                "h": est.h,
                "bound": est.mean,
                "stderr": est.stderr,
            })
            cell_elapsed.append(time.perf_counter() - c0)
    return TableResult(kind="upper-table", rows=rows, config=cfg.echo(),
                       seed=cfg.seed, elapsed=time.perf_counter() - t0,
                       cell_elapsed=cell_elapsed)


def run_empirical_table(cfg: ExperimentConfig) -> TableResult:
    """Mean scaled makespan of heuristic TSPD solutions per (n, alpha) cell.

    Instances and solver seeds depend on (config seed, n, instance index)
    only, so every alpha column sees the same instances.
    """
    t0 = time.perf_counter()
    rows = []
    cell_elapsed = []
    for n in cfg.sizes:
        instances = [
            generate_instance(n, derive_seed(cfg.seed, n, i, 0))
            for i in range(cfg.instances_per_cell)
        ]
        for alpha in cfg.alphas:
            c0 = time.perf_counter()
            metric = MetricPair(truck_norm=cfg.metric, alpha=alpha)
            vals = []
            for i, inst in enumerate(instances):
                rep = tspd_heuristic(inst, metric, derive_seed(cfg.seed, n, i, 1),
                                     config=cfg.heuristic)
                vals.append(scaled_makespan(rep, n))
            mean = sum(vals) / len(vals)
            if len(vals) > 1:
                var = sum((v - mean) ** 2 for v in vals) / (len(vals) - 1)
                stderr = math.sqrt(var / len(vals))
            else:
                stderr = float("inf")
            rows.append({"n": n, "alpha": alpha, "mean": mean, "stderr": stderr})
            cell_elapsed.append(time.perf_counter() - c0)
    return TableResult(kind="empirical-table", rows=rows, config=cfg.echo(),
                       seed=cfg.seed, elapsed=time.perf_counter() - t0,
                       cell_elapsed=cell_elapsed)


def run_lower_table(cfg: ExperimentConfig, betas: Sequence[float] = DEFAULT_BETAS) -> TableResult:
    """Parametric lower bound over betas x alphas, truncated to 4 decimals."""
    if any(b <= 0 for b in betas):
        raise ValueError("betas must be > 0")
    t0 = time.perf_counter()
    rows = [
        {
            "beta": beta,
            "alpha": alpha,
            "rho_star": rho_star(beta, alpha),
            "bound": truncate4(lb_param(beta, alpha)),
        }
        for beta in betas
        for alpha in cfg.alphas
    ]
    config = dict(cfg.echo(), betas=list(betas))
    return TableResult(kind="lower-table", rows=rows, config=config,
                       seed=cfg.seed, elapsed=time.perf_counter() - t0)


_CSV_COLUMNS = {
    "upper-table": ("pattern", "alpha", "h", "bound", "stderr"),
    "empirical-table": ("n", "alpha", "mean", "stderr"),
    "lower-table": ("beta", "alpha", "rho_star", "bound"),
}

_CSV_FORMATS = {
    "h": "{:.4f}", "bound": "{:.4f}", "stderr": "{:.6f}",
    "mean": "{:.4f}", "rho_star": "{:.6f}",
}


def _csv_cell(column: str, value) -> str:
    if column == "mean":  # MC means are rounded for display
        return _CSV_FORMATS["mean"].format(round4(value))
    fmt = _CSV_FORMATS.get(column)
    if fmt is not None:
        return fmt.format(value)
    return str(value)


def table_csv(result: TableResult) -> str:
    columns = _CSV_COLUMNS[result.kind]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in result.rows:
        writer.writerow([_csv_cell(c, row[c]) for c in columns])
    return buf.getvalue()


def report_run(path, payload, *, config: Optional[dict] = None,
               seed: Optional[int] = None, elapsed: Optional[float] = None,
               extra_meta: Optional[dict] = None) -> dict:
    """Write a JSON report: reproducibility metadata plus the payload."""
    meta = {
        "tool": "tspd-bounds",
        "version": __version__,
        "generator": GENERATOR_ID,
        "seed": seed,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "elapsed_s": elapsed,
        "config": config,
    }
    if extra_meta:
        meta.update(extra_meta)
    obj = {"meta": meta, "payload": payload}
    p = Path(path)
    try:
        p.write_text(json.dumps(obj, indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write report to {p}: {exc}") from exc
    return obj


def report_table(result: TableResult, base_path, fmt: str = "json") -> list[str]:
    """Write <base>.json and/or <base>.csv for a table run; returns paths."""
    base = Path(base_path)
    written = []
    if fmt in ("json", "both"):
        path = base.with_suffix(".json")
        report_run(path, result.payload(), config=result.config, seed=result.seed,
                   elapsed=result.elapsed,
                   extra_meta={"cell_elapsed_s": result.cell_elapsed})
        written.append(str(path))
    if fmt in ("csv", "both"):
        path = base.with_suffix(".csv")
        Path(path).write_text(table_csv(result))
        written.append(str(path))
    return written
