"""FastAPI service wrapping the optimization and analysis core.

Experiments run synchronously inside the request: the service targets
desk-scale reproduction workloads driven by the bundled CLI client.
"""

from __future__ import annotations

from importlib import metadata
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.requests import Request
from fastapi.responses import JSONResponse

from ..bench import ExperimentConfig, ExperimentSummary, run_experiment
from ..errors import ConfigurationError, DegenerateDataError, RegionalBoError
from ..plotting import emit_convergence_plot
from ..problems import _BENCHMARKS, benchmark_names
from ..stats import wilcoxon_rank_sum, wilcoxon_signed_rank
from ..theory import run_selftest
from .schemas import (
    HealthResponse,
    PlotRequest,
    PlotResponse,
    ProblemInfo,
    ProblemsResponse,
    SelfTestResponse,
    StatsRequest,
    StatsResponse,
)

try:
    _VERSION = metadata.version("regionalbo")
except metadata.PackageNotFoundError:  # running from a source tree
    _VERSION = "0.0.0"

app = FastAPI(title="regionalbo", version=_VERSION)


@app.exception_handler(ConfigurationError)
async def _config_error(request: Request, exc: ConfigurationError):
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.exception_handler(RegionalBoError)
async def _runtime_error(request: Request, exc: RegionalBoError):
    return JSONResponse(status_code=500, content={"detail": str(exc)})


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=_VERSION)


@app.get("/problems", response_model=ProblemsResponse)
def problems() -> ProblemsResponse:
    notes = {
        "ackley": "minimum 0 at the origin",
        "rastrigin": "minimum 0 at the origin",
        "rosenbrock": "minimum 0 at (1, ..., 1); needs dim >= 2",
        "levy": "minimum 0 at (1, ..., 1)",
        "styblinski_tang": "minimum -39.1662*D at (-2.9035, ...)",
        "sharp_broad_1d": "1-D; narrow deep valley vs broad shallow valley",
    }
    infos = [
        ProblemInfo(name=name, lower=_BENCHMARKS[name][1], upper=_BENCHMARKS[name][2], note=notes[name])
        for name in benchmark_names()
    ]
    return ProblemsResponse(problems=infos)


@app.post("/runs", response_model=ExperimentSummary)
def runs(cfg: ExperimentConfig) -> ExperimentSummary:
    return run_experiment(cfg)


@app.post("/stats/signed-rank", response_model=StatsResponse)
def signed_rank(req: StatsRequest) -> StatsResponse:
    try:
        result = wilcoxon_signed_rank(req.a, req.b)
    except (ValueError, DegenerateDataError) as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return StatsResponse(p_value=result.p_value, statistic=result.statistic, n=result.n, exact=result.exact)


@app.post("/stats/rank-sum", response_model=StatsResponse)
def rank_sum(req: StatsRequest) -> StatsResponse:
    try:
        result = wilcoxon_rank_sum(req.a, req.b)
    except (ValueError, DegenerateDataError) as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return StatsResponse(p_value=result.p_value, statistic=result.statistic, n=result.n, exact=result.exact)


@app.post("/plots", response_model=PlotResponse)
def plots(req: PlotRequest) -> PlotResponse:
    missing = [p for p in req.aggregates if not Path(p).exists()]
    if missing:
        raise HTTPException(status_code=400, detail=f"missing aggregate files: {missing}")
    path = emit_convergence_plot([Path(p) for p in req.aggregates], Path(req.output), log_y=req.log_y)
    return PlotResponse(path=str(path))


@app.get("/selftest", response_model=SelfTestResponse)
def selftest(n_frequencies: int = 100_000, n_instances: int = 100, seed: int = 0) -> SelfTestResponse:
    report = run_selftest(n_frequencies=n_frequencies, n_instances=n_instances, seed=seed)
    return SelfTestResponse(
        n_frequencies=report.n_frequencies,
        max_abs_factor=report.max_abs_factor,
        indicator_ok=report.indicator_ok,
        norm_instances=report.norm_instances,
        norm_passed=report.norm_passed,
        worst_ratio=report.worst_ratio,
        all_ok=report.all_ok,
    )
