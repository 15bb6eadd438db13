"""Command-line client for the optimization service.

Subcommands mirror the service endpoints; by default they call the same
handlers in process, while ``--server`` routes them to a running instance
over HTTP.  Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx
import yaml

from .bench import ExperimentConfig, run_experiment
from .errors import ConfigurationError, RegionalBoError
from .plotting import emit_convergence_plot
from .stats import wilcoxon_rank_sum, wilcoxon_signed_rank
from .theory import run_selftest

EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _parse_seeds(text: str) -> list[int]:
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ConfigurationError(f"could not parse any seeds from {text!r}")
    return seeds


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    raw = Path(path).read_text()
    data = yaml.safe_load(raw)
    if not isinstance(data, dict):
        raise ConfigurationError(f"config file {path} must hold a mapping")
    # nested sections flatten onto the experiment fields
    flat: dict = {}
    for key, value in data.items():
        if isinstance(value, dict):
            flat.update(value)
        else:
            flat[key] = value
    return flat


def _post(server: str, route: str, payload: dict) -> dict:
    resp = httpx.post(f"{server.rstrip('/')}{route}", json=payload, timeout=None)
    if resp.status_code >= 400:
        detail = resp.json().get("detail", resp.text)
        code = EXIT_CONFIG if resp.status_code in (400, 422) else EXIT_RUNTIME
        click.echo(f"error: {detail}", err=True)
        raise SystemExit(code)
    return resp.json()


@click.group()
def main():
    """Trust-region Bayesian optimization benchmark harness."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="YAML config file.")
@click.option("--problem", default=None)
@click.option("--dim", type=int, default=None)
@click.option("--method", "methods", multiple=True, help="Method id; repeatable.")
@click.option("--budget", type=int, default=None)
@click.option("--n-init", type=int, default=None)
@click.option("--seeds", default=None, help="Comma list and/or ranges, e.g. 1-11 or 1,2,5.")
@click.option("--batch", type=int, default=None)
@click.option("--m", type=int, default=None)
@click.option("--out", default=None)
@click.option("--plot", is_flag=True, default=False, help="Emit a convergence SVG.")
@click.option("--log-y", is_flag=True, default=False)
@click.option("--server", default=None, help="Run against this service URL instead of in process.")
def run(config_path, problem, dim, methods, budget, n_init, seeds, batch, m, out, plot, log_y, server):
    """Execute seeded optimization runs and write CSV traces."""
    try:
        fields = _load_config_file(config_path)
        if problem is not None:
            fields["problem"] = problem
        if dim is not None:
            fields["dim"] = dim
        if methods:
            fields["methods"] = list(methods)
        elif isinstance(fields.get("method"), str):
            fields["methods"] = [fields.pop("method")]
        if budget is not None:
            fields["budget"] = budget
        if n_init is not None:
            fields["n_init"] = n_init
        if seeds is not None:
            fields["seeds"] = _parse_seeds(seeds)
        if batch is not None:
            fields["batch"] = batch
        if m is not None:
            fields["m"] = m
        if out is not None:
            fields["out"] = out
        if plot:
            fields["plot"] = True
        if log_y:
            fields["log_y"] = True
        fields.pop("method", None)
        cfg = ExperimentConfig.model_validate(fields)
    except (ConfigurationError, ValueError) as exc:
        click.echo(f"config error: {exc}", err=True)
        raise SystemExit(EXIT_CONFIG)

    if server:
        summary = _post(server, "/runs", cfg.model_dump())
        click.echo(json.dumps(summary, indent=2))
        failed = [o for o in summary["outcomes"] if o.get("error")]
        raise SystemExit(EXIT_RUNTIME if failed else 0)

    try:
        summary = run_experiment(cfg)
    except ConfigurationError as exc:
        click.echo(f"config error: {exc}", err=True)
        raise SystemExit(EXIT_CONFIG)
    except RegionalBoError as exc:
        click.echo(f"runtime error: {exc}", err=True)
        raise SystemExit(EXIT_RUNTIME)
    click.echo(summary.model_dump_json(indent=2))
    raise SystemExit(EXIT_RUNTIME if summary.failed else 0)


@main.command()
@click.argument("aggregates", nargs=-1, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@click.option("--log-y", is_flag=True, default=False)
@click.option("--server", default=None)
def plot(aggregates, out, log_y, server):
    """Render aggregate CSVs into a convergence SVG."""
    if not aggregates:
        click.echo("error: need at least one aggregate CSV", err=True)
        raise SystemExit(EXIT_CONFIG)
    if server:
        result = _post(server, "/plots", {"aggregates": list(aggregates), "output": out, "log_y": log_y})
        click.echo(result["path"])
        return
    missing = [p for p in aggregates if not Path(p).exists()]
    if missing:
        click.echo(f"error: missing aggregate files: {missing}", err=True)
        raise SystemExit(EXIT_CONFIG)
    try:
        path = emit_convergence_plot([Path(p) for p in aggregates], Path(out), log_y=log_y)
    except ConfigurationError as exc:
        click.echo(f"config error: {exc}", err=True)
        raise SystemExit(EXIT_CONFIG)
    click.echo(str(path))


def _read_values(text: str) -> list[float]:
    path = Path(text)
    if path.exists():
        return [float(line) for line in path.read_text().split() if line.strip()]
    return [float(tok) for tok in text.split(",") if tok.strip()]


@main.command()
@click.option("--test", "test_name", type=click.Choice(["signed-rank", "rank-sum"]), required=True)
@click.option("--a", "a_text", required=True, help="Comma list of values, or a file with one per line.")
@click.option("--b", "b_text", required=True)
@click.option("--server", default=None)
def stats(test_name, a_text, b_text, server):
    """Compare two result samples with a rank test."""
    try:
        a = _read_values(a_text)
        b = _read_values(b_text)
    except ValueError as exc:
        click.echo(f"config error: {exc}", err=True)
        raise SystemExit(EXIT_CONFIG)
    if server:
        route = "/stats/signed-rank" if test_name == "signed-rank" else "/stats/rank-sum"
        result = _post(server, route, {"a": a, "b": b})
        click.echo(json.dumps(result, indent=2))
        return
    try:
        fn = wilcoxon_signed_rank if test_name == "signed-rank" else wilcoxon_rank_sum
        result = fn(a, b)
    except (ValueError, RegionalBoError) as exc:
        click.echo(f"config error: {exc}", err=True)
        raise SystemExit(EXIT_CONFIG)
    click.echo(
        json.dumps(
            {"p_value": result.p_value, "statistic": result.statistic, "n": result.n, "exact": result.exact},
            indent=2,
        )
    )


@main.command()
@click.option("--frequencies", type=int, default=100_000, show_default=True)
@click.option("--instances", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--server", default=None)
def selftest(frequencies, instances, seed, server):
    """Run the region-averaging numerical checks and report pass/fail."""
    if server:
        resp = httpx.get(
            f"{server.rstrip('/')}/selftest",
            params={"n_frequencies": frequencies, "n_instances": instances, "seed": seed},
            timeout=None,
        )
        report = resp.json()
        click.echo(json.dumps(report, indent=2))
        raise SystemExit(0 if report.get("all_ok") else EXIT_RUNTIME)
    report = run_selftest(n_frequencies=frequencies, n_instances=instances, seed=seed)
    click.echo(f"indicator factor: max |value| = {report.max_abs_factor:.12f} over {report.n_frequencies} frequencies")
    click.echo(f"  bound |factor| <= 1: {'PASS' if report.indicator_ok else 'FAIL'}")
    click.echo(f"norm reduction: {report.norm_passed}/{report.norm_instances} instances shrank (worst ratio {report.worst_ratio:.6f})")
    click.echo(f"  averaging never increases the norm: {'PASS' if report.norm_passed == report.norm_instances else 'FAIL'}")
    raise SystemExit(0 if report.all_ok else EXIT_RUNTIME)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Start the HTTP service."""
    import uvicorn

    uvicorn.run("regionalbo.service.app:app", host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
