import json

import httpx
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

import regionalbo.cli as cli_mod
from regionalbo.cli import main
from regionalbo.service.app import app


@pytest.fixture
def runner():
    return CliRunner()


def run_args(tmp_path, out="results"):
    return [
        "run",
        "--problem",
        "sharp_broad_1d",
        "--dim",
        "1",
        "--method",
        "turbo1-logei",
        "--budget",
        "10",
        "--n-init",
        "8",
        "--seeds",
        "1,2",
        "--out",
        str(tmp_path / out),
    ]


class TestRunCommand:
    def test_happy_path_and_determinism(self, runner, tmp_path):
        first = runner.invoke(main, run_args(tmp_path, "a"))
        assert first.exit_code == 0, first.output
        second = runner.invoke(main, run_args(tmp_path, "b"))
        assert second.exit_code == 0
        name = "turbo1-logei_sharp_broad_1d_1d_seed1.csv"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        summary = json.loads(first.output)
        assert summary["outcomes"][0]["n_evals"] == 10

    def test_seed_ranges(self, runner, tmp_path):
        args = run_args(tmp_path)
        args[args.index("--seeds") + 1] = "3-5,9"
        result = runner.invoke(main, args)
        assert result.exit_code == 0
        summary = json.loads(result.output)
        assert sorted(o["seed"] for o in summary["outcomes"]) == [3, 4, 5, 9]

    def test_config_file_with_overrides(self, runner, tmp_path):
        config = tmp_path / "exp.yaml"
        config.write_text(
            "problem: sharp_broad_1d\n"
            "dim: 1\n"
            "method: turbo1-logei\n"
            "budget: 10\n"
            "seeds: [1]\n"
            f"out: {tmp_path / 'from_file'}\n"
            "turbo:\n"
            "  n_init: 8\n"
            "regional:\n"
            "  n_x: 16\n"
            "  n_f: 32\n"
        )
        result = runner.invoke(main, ["run", "--config", str(config), "--budget", "9"])
        assert result.exit_code == 0, result.output
        summary = json.loads(result.output)
        assert summary["outcomes"][0]["n_evals"] == 9

    def test_unknown_method_exit_code(self, runner, tmp_path):
        args = run_args(tmp_path)
        args[args.index("--method") + 1] = "turbo1-bogus"
        result = runner.invoke(main, args)
        assert result.exit_code == 1

    def test_missing_fields_exit_code(self, runner):
        result = runner.invoke(main, ["run", "--problem", "ackley"])
        assert result.exit_code == 1


class TestPlotCommand:
    def test_plot_from_aggregate(self, runner, tmp_path):
        agg = tmp_path / "m_aggregate.csv"
        agg.write_text(
            "eval_index,mean_best,median_best,q25_best,q75_best\n1,2.0,2.0,2.0,2.0\n2,1.0,1.0,1.0,1.0\n"
        )
        out = tmp_path / "curve.svg"
        result = runner.invoke(main, ["plot", str(agg), "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert out.exists()

    def test_plot_missing_input(self, runner, tmp_path):
        result = runner.invoke(main, ["plot", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o.svg")])
        assert result.exit_code == 1
        result = runner.invoke(main, ["plot", "--out", str(tmp_path / "o.svg")])
        assert result.exit_code == 1


class TestStatsCommand:
    def test_inline_values(self, runner):
        result = runner.invoke(
            main,
            ["stats", "--test", "rank-sum", "--a", "1,2,3,4,5", "--b", "6,7,8,9,10"],
        )
        assert result.exit_code == 0
        payload = json.loads(result.output)
        assert payload["exact"] is True

    def test_value_files(self, runner, tmp_path):
        fa = tmp_path / "a.txt"
        fb = tmp_path / "b.txt"
        fa.write_text("\n".join(str(v) for v in [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]))
        fb.write_text("\n".join(str(v) for v in [1.5, 2.5, 3.5, 4.5, 5.5, 6.5]))
        result = runner.invoke(main, ["stats", "--test", "signed-rank", "--a", str(fa), "--b", str(fb)])
        assert result.exit_code == 0
        assert 0.0 < json.loads(result.output)["p_value"] <= 1.0

    def test_bad_input_exit_code(self, runner):
        result = runner.invoke(main, ["stats", "--test", "signed-rank", "--a", "1,2", "--b", "3,4"])
        assert result.exit_code == 1


class TestSelfTestCommand:
    def test_reports_pass(self, runner):
        result = runner.invoke(main, ["selftest", "--frequencies", "2000", "--instances", "10"])
        assert result.exit_code == 0
        assert "PASS" in result.output


class TestRemoteMode:
    def test_run_against_server(self, runner, tmp_path, monkeypatch):
        # route the CLI's HTTP calls into the ASGI app
        test_client = TestClient(app)

        def fake_post(url, json=None, timeout=None):
            route = url.split("http://srv")[-1]
            return test_client.post(route, json=json)

        monkeypatch.setattr(cli_mod.httpx, "post", fake_post)
        args = run_args(tmp_path) + ["--server", "http://srv"]
        result = runner.invoke(main, args)
        assert result.exit_code == 0, result.output
        assert (tmp_path / "results" / "turbo1-logei_sharp_broad_1d_1d_seed1.csv").exists()

    def test_remote_config_error_propagates(self, runner, tmp_path, monkeypatch):
        test_client = TestClient(app)

        def fake_post(url, json=None, timeout=None):
            route = url.split("http://srv")[-1]
            return test_client.post(route, json=json)

        monkeypatch.setattr(cli_mod.httpx, "post", fake_post)
        args = run_args(tmp_path)
        args[args.index("--method") + 1] = "turbo1-bogus"
        result = runner.invoke(main, args + ["--server", "http://srv"])
        assert result.exit_code == 1
