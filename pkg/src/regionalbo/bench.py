"""Experiment harness: method ids, seeded multi-run execution, CSV traces.

A method id names one loop configuration, e.g. ``turbo1-logei``,
``turbo1-logei-qrei``, ``turbo1-logei-qrei-restart``, ``turbom-ts-qrei`` or
``gp-logei``.  Each (method, seed) pair yields one CSV trace; per-method
aggregates carry the mean/median/quartiles of best-so-far across seeds.

Runs never embed timestamps or machine state, so identical configs reproduce
byte-identical files.  Worker count comes from the REGIONALBO_THREADS
environment variable; results are reduced in a fixed order either way.
"""

from __future__ import annotations

import concurrent.futures
import csv
import os
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator

from .errors import ConfigurationError
from .optim import MultiStartConfig
from .problems import benchmark_suite
from .turbo import RunRecord, TurboConfig, global_gp_run, turbo_m_run

THREADS_ENV = "REGIONALBO_THREADS"


class ExperimentConfig(BaseModel):
    """External run contract shared by the CLI, config files and the service."""

    problem: str
    dim: int = Field(ge=1)
    methods: list[str] = Field(min_length=1)
    budget: int = Field(ge=1)
    n_init: int = 30
    batch: int = 1
    m: int = 1
    seeds: list[int] = Field(min_length=1)
    out: str = "results"
    plot: bool = False
    log_y: bool = False
    n_x: int = 128
    n_f: int = 256
    ucb_beta: float = 4.0
    success_tolerance: int = 10
    failure_tolerance: Optional[int] = None
    length_init: float = 0.8
    length_min: float = 0.5**7
    length_max: float = 1.6
    raw_candidates: int = 512
    opt_restarts: int = 10
    n_gp_cap: int = 500
    subset_local: bool = False

    @field_validator("seeds")
    @classmethod
    def _unique_seeds(cls, v):
        if len(set(v)) != len(v):
            raise ValueError("seeds must be distinct")
        return v


class MethodSpec(BaseModel):
    """Parsed method id."""

    method_id: str
    loop: str                 # turbo1 | turbom | gp
    acquisition: str = "logei"
    region_mode: str = "random"
    selector: str = "qrei"


_SELECTOR_TOKENS = ("qrei", "logrei", "rucb", "logei", "ucb")


def parse_method(method_id: str) -> MethodSpec:
    tokens = method_id.lower().split("-")
    if tokens == ["gp", "logei"]:
        return MethodSpec(method_id=method_id, loop="gp")
    if not tokens or tokens[0] not in ("turbo1", "turbom"):
        raise ConfigurationError(f"unknown method id {method_id!r}")
    loop = "turbo1" if tokens[0] == "turbo1" else "turbom"
    rest = tokens[1:]
    if not rest or rest[0] not in ("logei", "ts"):
        raise ConfigurationError(f"method {method_id!r} must name a local acquisition (logei or ts)")
    acquisition = rest[0]
    rest = rest[1:]
    region_mode, selector = "random", "qrei"
    if rest:
        if rest[-1] == "restart":
            region_mode = "select-restart"
            rest = rest[:-1]
        else:
            region_mode = "select"
        if len(rest) != 1 or rest[0] not in _SELECTOR_TOKENS:
            raise ConfigurationError(f"method {method_id!r} has an unknown region selector")
        selector = rest[0]
    return MethodSpec(
        method_id=method_id,
        loop=loop,
        acquisition=acquisition,
        region_mode=region_mode,
        selector=selector,
    )


def _turbo_config(cfg: ExperimentConfig, spec: MethodSpec) -> TurboConfig:
    inner = MultiStartConfig(n_raw=cfg.raw_candidates, n_restarts=cfg.opt_restarts)
    select_inner = MultiStartConfig(n_raw=cfg.raw_candidates, n_restarts=cfg.opt_restarts, max_iters=30)
    return TurboConfig(
        budget=cfg.budget,
        n_init=cfg.n_init,
        batch_size=cfg.batch,
        acquisition=spec.acquisition,
        region_mode=spec.region_mode,
        selector=spec.selector,
        length_init=cfg.length_init,
        length_min=cfg.length_min,
        length_max=cfg.length_max,
        success_tolerance=cfg.success_tolerance,
        failure_tolerance=cfg.failure_tolerance,
        n_x=cfg.n_x,
        n_f=cfg.n_f,
        ucb_beta=cfg.ucb_beta,
        inner=inner,
        select_inner=select_inner,
        n_gp_cap=cfg.n_gp_cap,
        subset_local=cfg.subset_local,
    )


def run_single(cfg: ExperimentConfig, method_id: str, seed: int) -> list[RunRecord]:
    spec = parse_method(method_id)
    objective = benchmark_suite(cfg.problem, cfg.dim)
    turbo_cfg = _turbo_config(cfg, spec)
    if spec.loop == "gp":
        return global_gp_run(objective, turbo_cfg, seed)
    m = cfg.m if spec.loop == "turbom" else 1
    return turbo_m_run(objective, turbo_cfg, m, seed)


# ---------------------------------------------------------------------------
# CSV layer; column order is a stable machine-readable contract
# ---------------------------------------------------------------------------

RUN_COLUMNS = ("seed", "eval_index", "event", "region_id", "f", "best_f")
AGG_COLUMNS = ("eval_index", "mean_best", "median_best", "q25_best", "q75_best")


def run_csv_name(method_id: str, problem: str, dim: int, seed: int) -> str:
    return f"{method_id}_{problem}_{dim}d_seed{seed}.csv"


def aggregate_csv_name(method_id: str, problem: str, dim: int) -> str:
    return f"{method_id}_{problem}_{dim}d_aggregate.csv"


def write_run_csv(path: Path, records: list[RunRecord], dim: int) -> None:
    header = list(RUN_COLUMNS) + [f"x_{i + 1}" for i in range(dim)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for rec in records:
            row = [rec.seed, rec.eval_index, rec.event, rec.region_id, repr(rec.value), repr(rec.best_so_far)]
            row.extend(repr(float(v)) for v in rec.point)
            writer.writerow(row)


def read_run_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_aggregate_csv(path: Path, best_matrix: np.ndarray) -> None:
    """best_matrix: (n_seeds, n_evals) best-so-far table, aggregated per column."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGG_COLUMNS)
        for t in range(best_matrix.shape[1]):
            col = best_matrix[:, t]
            writer.writerow(
                [
                    t + 1,
                    repr(float(np.mean(col))),
                    repr(float(np.median(col))),
                    repr(float(np.percentile(col, 25))),
                    repr(float(np.percentile(col, 75))),
                ]
            )


def read_aggregate_csv(path: Path) -> dict[str, np.ndarray]:
    rows = read_run_csv(path)
    if not rows:
        raise ConfigurationError(f"aggregate file {path} is empty")
    return {key: np.array([float(r[key]) for r in rows]) for key in AGG_COLUMNS}


# ---------------------------------------------------------------------------
# experiment driver
# ---------------------------------------------------------------------------


class RunOutcome(BaseModel):
    method: str
    seed: int
    final_best: Optional[float] = None
    n_evals: int = 0
    csv_path: Optional[str] = None
    error: Optional[str] = None


class ExperimentSummary(BaseModel):
    outcomes: list[RunOutcome]
    aggregate_paths: dict[str, str]
    median_final_best: dict[str, float]
    plot_path: Optional[str] = None

    @property
    def failed(self) -> list[RunOutcome]:
        return [o for o in self.outcomes if o.error is not None]


def _worker(args) -> tuple[str, int, list[RunRecord]]:
    cfg_json, method_id, seed = args
    cfg = ExperimentConfig.model_validate_json(cfg_json)
    return method_id, seed, run_single(cfg, method_id, seed)


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def run_experiment(cfg: ExperimentConfig) -> ExperimentSummary:
    """Execute every (method, seed) run and write per-run plus aggregate CSVs."""
    for method_id in cfg.methods:
        parse_method(method_id)
    benchmark_suite(cfg.problem, cfg.dim)  # fail fast on bad problem/dim

    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(method, seed) for method in cfg.methods for seed in cfg.seeds]
    results: dict[tuple[str, int], list[RunRecord] | Exception] = {}

    workers = worker_count()
    if workers > 1 and len(jobs) > 1:
        payload = cfg.model_dump_json()
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(_worker, (payload, method, seed)): (method, seed) for method, seed in jobs
            }
            for fut in concurrent.futures.as_completed(futures):
                key = futures[fut]
                try:
                    _, _, records = fut.result()
                    results[key] = records
                except Exception as exc:  # per-run failure; remaining runs continue
                    results[key] = exc
    else:
        for method, seed in jobs:
            try:
                results[(method, seed)] = run_single(cfg, method, seed)
            except Exception as exc:
                results[(method, seed)] = exc

    outcomes: list[RunOutcome] = []
    aggregate_paths: dict[str, str] = {}
    medians: dict[str, float] = {}
    for method in cfg.methods:
        best_rows = []
        for seed in cfg.seeds:
            res = results[(method, seed)]
            if isinstance(res, Exception):
                outcomes.append(RunOutcome(method=method, seed=seed, error=str(res)))
                continue
            path = out_dir / run_csv_name(method, cfg.problem, cfg.dim, seed)
            write_run_csv(path, res, cfg.dim)
            outcomes.append(
                RunOutcome(
                    method=method,
                    seed=seed,
                    final_best=res[-1].best_so_far if res else None,
                    n_evals=len(res),
                    csv_path=str(path),
                )
            )
            best_rows.append([rec.best_so_far for rec in res])
        if best_rows and len({len(r) for r in best_rows}) == 1:
            matrix = np.array(best_rows)
            agg_path = out_dir / aggregate_csv_name(method, cfg.problem, cfg.dim)
            write_aggregate_csv(agg_path, matrix)
            aggregate_paths[method] = str(agg_path)
            medians[method] = float(np.median(matrix[:, -1]))

    plot_path = None
    if cfg.plot and aggregate_paths:
        from .plotting import emit_convergence_plot

        plot_path = str(
            emit_convergence_plot(
                [Path(p) for p in aggregate_paths.values()],
                out_dir / f"convergence_{cfg.problem}_{cfg.dim}d.svg",
                log_y=cfg.log_y,
            )
        )
    return ExperimentSummary(
        outcomes=outcomes,
        aggregate_paths=aggregate_paths,
        median_final_best=medians,
        plot_path=plot_path,
    )
