import io
import json
import math

import numpy as np
import pytest

from ppmlink import cli
from ppmlink.linkbudget import loglog_slope
from ppmlink.optimize import asymptotic_pie

GOLDEN_HEADERS = {
    "pie-map": "kind,n_a,M,K,pie",
    "pie-opt": "n_a,n_b,mode,pie_star,n_s_star,M_star",
    "asymptote": "n_b,pie_inf,n_s_inf",
    "range": ("r_au,n_b,mode,n_a,eta_tot,M_star,pie_star,n_s_star,rate_bits_per_s,"
              "peak_power_W,error"),
    "validate": "check,passed,value,threshold",
}


def run(*argv):
    buf = io.StringIO()
    code = cli.main(list(argv), stdout=buf)
    return code, buf.getvalue()


def table(command, *argv):
    code, text = run(command, *argv)
    assert code == 0, text
    return cli.read_table(text, command)


SMALL = {
    "pie-map": ["--n-a-min", "1e-3", "--n-a-max", "1e-1", "--n-a-points", "3",
                "--M-max", "1000", "--M-points", "6"],
    "pie-opt": ["--n-a-min", "1e-4", "--n-a-max", "1e-2", "--n-a-points", "2", "--n-b", "0.1"],
    "asymptote": ["--n-b", "1e-3,1e-1"],
    "range": ["--r-min", "1", "--r-max", "2", "--r-points", "2", "--n-b", "0.1"],
    "validate": ["--frames", "20000", "--oracle-M-max", "4"],
}


@pytest.mark.parametrize("command", cli.COMMANDS)
def test_golden_headers(command):
    code, text = run(command, *SMALL[command])
    assert code == 0
    assert text.splitlines()[0] == GOLDEN_HEADERS[command]
    assert [n for n, _ in cli.SCHEMAS[command]] == GOLDEN_HEADERS[command].split(",")


@pytest.mark.parametrize("command", cli.COMMANDS)
def test_csv_round_trip(command):
    _, text = run(command, *SMALL[command])
    rows, meta = cli.read_table(text, command)
    out = io.StringIO()
    w = cli.TableWriter(out, command, "csv")
    for r in rows:
        w.write(r)
    w.metadata.update(meta)
    w.close()
    assert cli.read_table(out.getvalue(), command) == (rows, meta)
    assert out.getvalue() == text


def test_number_format():
    assert cli.format_value(0.1, float) == "1.0000000000000001e-01"
    assert float(cli.format_value(math.pi, float)) == math.pi
    assert cli.format_value(None, int) == ""


@pytest.mark.parametrize("command", ["asymptote", "range"])
def test_json_output(command):
    code, text = run(command, *SMALL[command], "--format", "json")
    doc = json.loads(text)
    assert code == 0 and doc["command"] == command
    assert doc["columns"] == GOLDEN_HEADERS[command].split(",")
    assert len(doc["rows"]) > 0


def test_out_file(tmp_path):
    path = tmp_path / "a.csv"
    code, text = run("asymptote", "--n-b", "0.01", "--out", str(path))
    assert code == 0 and text == ""
    assert path.read_text().startswith(GOLDEN_HEADERS["asymptote"])


class TestPieMap:
    @pytest.fixture(scope="class")
    @classmethod
    def rows(cls):
        rows, _ = table("pie-map", "--n-b", "1e-3", "--n-a-min", "1e-4", "--n-a-max", "1e-1",
                        "--n-a-points", "4", "--M-max", "1e6", "--M-points", "31")
        return rows

    def test_complete_dominates_simple(self, rows):
        grid = {(r["n_a"], r["M"], r["K"]): r["pie"] for r in rows if r["kind"] == "grid"}
        for (n_a, M, K), v in grid.items():
            if K == "1":
                assert grid[(n_a, M, "M")] >= v - 1e-15
                assert grid[(n_a, M, "2")] >= v - 1e-15

    def test_optimal_order_grows_as_power_falls(self, rows):
        trace = sorted((r["n_a"], r["M"]) for r in rows if r["kind"] == "opt" and r["K"] == "M")
        orders = [m for _, m in trace]
        assert all(a >= b for a, b in zip(orders, orders[1:]))
        assert orders[0] > 10 * orders[-1]


class TestPieOpt:
    @pytest.fixture(scope="class")
    @classmethod
    def rows(cls):
        rows, _ = table("pie-opt", "--n-a-min", "1e-7", "--n-a-max", "1e-5", "--n-a-points", "3",
                        "--n-b", "0.1")
        return rows

    def test_complete_reaches_limit(self, rows):
        asym = [r for r in rows if r["mode"] == "asymptote"][0]
        assert asym["pie_star"] == asymptotic_pie(0.1).pie_inf
        smallest = min((r for r in rows if r["mode"] == "complete"), key=lambda r: r["n_a"])
        assert smallest["pie_star"] == pytest.approx(asym["pie_star"], rel=0.02)

    def test_simple_is_linear(self, rows):
        simple = [r for r in rows if r["mode"] == "simple"]
        slope = loglog_slope([r["n_a"] for r in simple], [r["pie_star"] for r in simple])
        assert slope == pytest.approx(1.0, abs=0.02)
        for r in simple:
            assert r["n_s_star"] == pytest.approx((1 + 1 / 0.1) * r["n_a"], rel=0.01)

    def test_asymptote_rows_have_no_order(self, rows):
        asym = [r for r in rows if r["mode"] == "asymptote"]
        assert len(asym) == 1 and asym[0]["M_star"] is None and asym[0]["n_a"] is None


class TestAsymptote:
    def test_decreasing_and_self_consistent(self):
        from ppmlink.optimize import pie_ratio_objective
        rows, _ = table("asymptote", "--n-b-min", "1e-4", "--n-b-max", "1", "--n-b-points", "9")
        vals = [r["pie_inf"] for r in rows]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        for r in rows:
            assert pie_ratio_objective(r["n_s_inf"], r["n_b"]) == pytest.approx(r["pie_inf"],
                                                                              rel=1e-15)

    def test_refinement_consistency(self):
        coarse, _ = table("asymptote", "--n-b-min", "1e-4", "--n-b-max", "1", "--n-b-points", "5")
        fine, _ = table("asymptote", "--n-b-min", "1e-4", "--n-b-max", "1", "--n-b-points", "9")
        for c, f in zip(coarse, fine[::2]):
            assert c["n_b"] == pytest.approx(f["n_b"], rel=1e-14)
            assert c["pie_inf"] == pytest.approx(f["pie_inf"], rel=1e-9)


class TestRange:
    def test_exponents_and_plateau(self):
        rows, meta = table("range", "--r-min", "0.1", "--r-max", "100", "--r-points", "7",
                           "--n-b", "0.1")
        exps = {e["mode"]: e for e in meta["exponents"]}
        assert exps["complete"]["rate_exponent"] == pytest.approx(-2, abs=0.05)
        assert exps["simple"]["rate_exponent"] == pytest.approx(-4, abs=0.1)
        assert exps["complete"]["M_star_exponent"] == pytest.approx(2, abs=0.05)
        assert meta["failed_rows"] == 0

    def test_short_range_plateau_low_noise(self):
        rows, _ = table("range", "--r-min", "0.05", "--r-max", "0.1", "--r-points", "2",
                        "--n-b", "1e-3", "--mode", "complete")
        for r in rows:
            assert r["rate_bits_per_s"] == pytest.approx(2e9 * math.log2(3) / 3, rel=1e-2)

    def test_total_failure_exit_code(self):
        code, text = run("range", "--r-min", "1e-9", "--r-max", "2e-9", "--r-points", "2",
                         "--n-b", "0.1", "--mode", "simple")
        assert code == cli.EXIT_COMPUTE
        rows, meta = cli.read_table(text, "range")
        assert all(r["error"] for r in rows) and meta["failed_rows"] == 2

    def test_rounded_au(self):
        _, meta = table("range", "--r-min", "1", "--r-max", "1", "--r-points", "1",
                        "--n-b", "0.1", "--au-rounded", "--mode", "simple")
        assert meta["au_m"] == 1.5e11


class TestValidate:
    def test_default_run_passes(self):
        code, text = run("validate")
        rows, meta = cli.read_table(text, "validate")
        assert code == 0 and meta["passed"] is True
        assert [r["check"] for r in rows] == ["oracle_equivalence", "mc_pulse_click_prob",
                                              "mc_signal_k_click_freq", "mc_plugin_mi"]
        assert all(r["passed"] == "true" for r in rows)

    def test_perturbation_detected(self):
        code, text = run("validate", "--perturb", "1e-6", "--frames", "20000")
        rows, _ = cli.read_table(text, "validate")
        assert code == cli.EXIT_VALIDATION
        assert rows[0]["passed"] == "false" and rows[0]["value"] > 1e-8

    def test_identical_bytes(self):
        a = run("validate", "--frames", "50000", "--seed", "5", "--format", "json")
        b = run("validate", "--frames", "50000", "--seed", "5", "--format", "json")
        assert a == b


class TestConfig:
    def test_file_then_flags(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"n_b": [0.01, 0.1], "format": "json"}))
        cfg = cli.load_config(["asymptote", "--config", str(path)])
        assert cfg.n_b == [0.01, 0.1] and cfg.format == "json"
        cfg = cli.load_config(["asymptote", "--config", str(path), "--n-b", "0.5",
                               "--format", "csv"])
        assert cfg.n_b == [0.5] and cfg.format == "csv"

    def test_defaults(self):
        cfg = cli.load_config(["range"])
        assert cfg.n_b == [1e-3, 1e-2, 1e-1] and cfg.modes() == ["simple", "complete"]
        assert cfg.tol == 1e-12

    @pytest.mark.parametrize("argv", [
        ["range", "--bogus"],
        ["nope"],
        ["asymptote", "--format", "xml"],
        ["pie-opt", "--n-a-min", "-1"],
        ["pie-opt", "--n-a-min", "1", "--n-a-max", "0.1"],
        ["pie-map", "--K", "1,x"],
        ["asymptote", "--n-b-min", "1e-3"],
        ["validate", "--oracle-M-max", "30"],
    ])
    def test_usage_errors(self, argv):
        assert run(*argv)[0] == cli.EXIT_USAGE

    def test_bad_config_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"not_a_key": 1}))
        assert run("asymptote", "--config", str(path))[0] == cli.EXIT_USAGE
        assert run("asymptote", "--config", str(tmp_path / "missing.json"))[0] == cli.EXIT_USAGE
