"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field

from ..bench import ExperimentConfig, ExperimentSummary  # noqa: F401  (re-exported)


class StatsRequest(BaseModel):
    a: list[float] = Field(min_length=1)
    b: list[float] = Field(min_length=1)


class StatsResponse(BaseModel):
    p_value: float
    statistic: float
    n: int
    exact: bool


class PlotRequest(BaseModel):
    aggregates: list[str] = Field(min_length=1)
    output: str
    log_y: bool = False


class PlotResponse(BaseModel):
    path: str


class SelfTestResponse(BaseModel):
    n_frequencies: int
    max_abs_factor: float
    indicator_ok: bool
    norm_instances: int
    norm_passed: int
    worst_ratio: float
    all_ok: bool


class ProblemInfo(BaseModel):
    name: str
    lower: float
    upper: float
    note: str


class ProblemsResponse(BaseModel):
    problems: list[ProblemInfo]


class HealthResponse(BaseModel):
    status: str
    version: str
