"""Tests for the batch driver.

Each subcommand is driven in-process through main(); one subprocess run
checks the installed entry point.  Oracles: the closed-form heat factor for
the semigroup command, the mode factor (2 pi^2)^(1/2) for fracpower, and
byte comparison for determinism.  Error paths are checked against the
documented exit codes.
"""

import json
import math
import subprocess
import sys
from fractions import Fraction as F

import pytest

from solenoid import cli
from solenoid import polyfield as pf
from solenoid.approxcore import ConstantsTable
from solenoid.floatball import BallGrid, FloatBall
from solenoid.polyfield import SolenoidalPolyPair
from solenoid.spectral import FourierField


def _mode_pair_json(n, m, c1, c2, cut=None):
    cut = cut or max(n, m)
    g1 = BallGrid.zeros((cut + 1, cut + 1))
    g2 = BallGrid.zeros((cut + 1, cut + 1))
    g1.set((n, m), FloatBall(float(c1)))
    g2.set((n, m), FloatBall(float(c2)))
    pair = (FourierField("sc", cut, g1), FourierField("cs", cut, g2))
    return {"schema": cli.SCHEMA, "kind": "pair",
            "u1": pair[0].to_json(), "u2": pair[1].to_json()}


@pytest.fixture
def mode11(tmp_path):
    path = tmp_path / "mode11.json"
    path.write_text(json.dumps(_mode_pair_json(1, 1, 1.0, -1.0)))
    return str(path)


@pytest.fixture
def small_pair(tmp_path):
    # small-amplitude two-mode solenoidal datum; band-limited, so horizon
    # and solve stay cheap
    obj = _mode_pair_json(1, 2, 0.02, -0.01, cut=2)
    obj2 = _mode_pair_json(1, 1, 0.01, -0.01, cut=2)
    for comp in ("u1", "u2"):
        for i, row in enumerate(obj2[comp]["re"]):
            for j, val in enumerate(row):
                cur = F(obj[comp]["re"][i][j]) + F(val)
                obj[comp]["re"][i][j] = str(cur)
    path = tmp_path / "small.json"
    path.write_text(json.dumps(obj))
    return str(path)


def _run(*argv):
    return cli.main(list(argv))


class TestBasis:
    def test_count_and_exactness(self, tmp_path):
        out = tmp_path / "basis.json"
        assert _run("basis", "--degree", "4", "--count", "10",
                    "--output", str(out)) == 0
        payload = json.loads(out.read_text())
        assert payload["schema"] == cli.SCHEMA
        assert len(payload["elements"]) == 10
        for obj in payload["elements"]:
            assert SolenoidalPolyPair.from_json(obj).is_solenoidal()

    def test_degree_without_kernel_rejected(self, tmp_path):
        assert _run("basis", "--degree", "1", "--count", "1",
                    "--output", str(tmp_path / "x.json")) \
            == cli.EXIT_PRECONDITION


class TestSemigroup:
    def test_heat_factor_oracle(self, tmp_path, mode11):
        out = tmp_path / "heat.json"
        assert _run("semigroup", "--t", "1/10", "--precision", "12",
                    "--input", mode11, "--output", str(out)) == 0
        payload = json.loads(out.read_text())
        c = F(payload["u1"]["re"][1][1])
        r = F(payload["u1"]["rad"][1][1])
        exact = math.exp(-0.2 * math.pi ** 2)
        assert float(c - r) <= exact <= float(c + r)
        assert payload["certificate"]["closed"]

    def test_csv_emission(self, tmp_path, mode11):
        out = tmp_path / "heat.json"
        csv_path = tmp_path / "heat.csv"
        assert _run("semigroup", "--t", "1/8", "--input", mode11,
                    "--output", str(out), "--emit-csv", str(csv_path)) == 0
        lines = csv_path.read_text().splitlines()
        assert lines[0] == "component,n,m,coefficient,radius"
        assert any(line.startswith("u1,1,1,") for line in lines)


class TestProject:
    def test_ledger_closes(self, tmp_path, mode11):
        out = tmp_path / "proj.json"
        assert _run("project", "--input", mode11, "--precision", "9",
                    "--output", str(out)) == 0
        cert = json.loads(out.read_text())["certificate"]
        total = sum(F(line["value"]) for line in cert["budget"])
        assert total <= F(1, 2 ** 9)
        assert all(line["consumer"] for line in cert["budget"])

    def test_divergence_reported_small(self, tmp_path, mode11):
        out = tmp_path / "proj.json"
        _run("project", "--input", mode11, "--precision", "8",
             "--output", str(out))
        payload = json.loads(out.read_text())
        assert F(payload["divergence_sup"]) < F(1, 10 ** 9)


class TestFracpower:
    def test_mode_factor(self, tmp_path, mode11):
        out = tmp_path / "fp.json"
        assert _run("fracpower", "--alpha", "1/2", "--input", mode11,
                    "--output", str(out)) == 0
        payload = json.loads(out.read_text())
        c = F(payload["u1"]["re"][1][1])
        r = F(payload["u1"]["rad"][1][1])
        assert abs(float(c) - math.sqrt(2) * math.pi) <= float(r) + 1e-12

    def test_alpha_out_of_range(self, mode11):
        assert _run("fracpower", "--alpha", "3/2", "--input", mode11) \
            == cli.EXIT_PRECONDITION


class TestHorizonAndSolve:
    def test_horizon_contractive(self, tmp_path, small_pair):
        out = tmp_path / "hz.json"
        assert _run("horizon", "--input", small_pair,
                    "--output", str(out)) == 0
        payload = json.loads(out.read_text())
        assert payload["contractive"] is True
        assert F(payload["epsilon_upper"]) < 1
        for key in ("T_a", "k0", "K_cap", "epsilon", "L", "w_m"):
            assert key in payload["certificate"]

    def test_solve_within_horizon(self, tmp_path, small_pair):
        out = tmp_path / "sol.json"
        code = _run("solve", "--input", small_pair, "--t",
                    "1/1152921504606846976", "--precision", "6",
                    "--output", str(out))
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["certificate"]["closed"]
        assert payload["kind"] == "pair"

    def test_solve_outside_horizon(self, tmp_path, small_pair):
        assert _run("solve", "--input", small_pair, "--t", "1/2",
                    "--output", str(tmp_path / "x.json")) \
            == cli.EXIT_HORIZON

    def test_constants_override_consumed(self, tmp_path, small_pair,
                                         monkeypatch):
        from solenoid.approxcore import BoundedValue
        table = ConstantsTable(M=BoundedValue.exact(2))
        override = tmp_path / "constants.json"
        override.write_text(json.dumps(table.to_json()))
        base_out = tmp_path / "hz0.json"
        over_out = tmp_path / "hz1.json"
        assert _run("horizon", "--input", small_pair,
                    "--output", str(base_out)) == 0
        monkeypatch.setenv(cli.CONSTANTS_ENV, str(override))
        assert _run("horizon", "--input", small_pair,
                    "--output", str(over_out)) == 0
        base = json.loads(base_out.read_text())["certificate"]["T_a"]
        over = json.loads(over_out.read_text())["certificate"]["T_a"]
        # doubling M doubles Ctilde and so shrinks the certified horizon
        assert base != over


class TestPressure:
    def test_path_independence(self, tmp_path, mode11):
        out1, out2 = tmp_path / "p1.json", tmp_path / "p2.json"
        assert _run("pressure", "--input", mode11, "--point", "1/3,2/5",
                    "--output", str(out1)) == 0
        assert _run("pressure", "--input", mode11, "--point", "1/3,2/5",
                    "--path", "0,0;0,2/5;1/3,2/5",
                    "--output", str(out2)) == 0
        a = json.loads(out1.read_text())
        b = json.loads(out2.read_text())
        assert F(a["value_lower"]) <= F(b["value_upper"])
        assert F(b["value_lower"]) <= F(a["value_upper"])

    def test_budget_miss_is_exit_5(self, mode11):
        assert _run("pressure", "--input", mode11, "--point", "1/3,2/5",
                    "--precision", "64") == cli.EXIT_BUDGET

    def test_point_outside_domain(self, mode11):
        assert _run("pressure", "--input", mode11, "--point", "3/2,1/2") \
            == cli.EXIT_PRECONDITION


class TestErrorHandling:
    def test_parse_error_on_bad_time(self, mode11):
        assert _run("semigroup", "--t", "0.1x", "--input", mode11) \
            == cli.EXIT_PARSE

    def test_parse_error_on_missing_file(self):
        assert _run("project", "--input", "/nonexistent-artifact.json") \
            == cli.EXIT_PARSE

    def test_parse_error_on_missing_schema(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"kind": "pair"}))
        assert _run("project", "--input", str(bad)) == cli.EXIT_PARSE

    def test_precondition_on_zero_precision(self, mode11):
        assert _run("semigroup", "--t", "1/10", "--precision", "0",
                    "--input", mode11) == cli.EXIT_PRECONDITION

    def test_exact_time_parsing(self):
        assert cli._parse_exact("0.125") == F(1, 8)
        assert cli._parse_exact("3/7") == F(3, 7)
        with pytest.raises(cli.CliError):
            cli._parse_exact("1e-3x")


class TestSelftest:
    def test_deterministic_and_passing(self, tmp_path):
        out1, out2 = tmp_path / "s1.json", tmp_path / "s2.json"
        assert _run("selftest", "--output", str(out1)) == 0
        assert _run("selftest", "--output", str(out2)) == 0
        assert out1.read_bytes() == out2.read_bytes()
        assert json.loads(out1.read_text())["passed"] is True


class TestEntryPoint:
    def test_module_invocation(self, tmp_path):
        out = tmp_path / "basis.json"
        proc = subprocess.run(
            [sys.executable, "-m", "solenoid.cli", "basis", "--degree",
             "4", "--count", "2", "--output", str(out)],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert json.loads(out.read_text())["count"] == 2
