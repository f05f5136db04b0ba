import csv
import io
import json
import math

import pytest
from click.testing import CliRunner

from localfrac.cli import cli
from localfrac.schema import is_valid_record, validate_record


@pytest.fixture
def invoke():
    runner = CliRunner()

    def run(*args, env=None):
        return runner.invoke(cli, list(args), env=env, catch_exceptions=False)

    return run


def record(result):
    assert result.exit_code == 0, result.stderr
    return validate_record(json.loads(result.stdout))


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_ml_exp(invoke):
    r = record(invoke("ml", "--a", "1", "--b", "1", "--z", "1", "--tol", "1e-17"))
    assert r["value"] == 2.718281828459045
    assert r["command"] == "ml" and r["inputs"]["a"] == 1.0


def test_ml_series_value(invoke):
    r = record(invoke("ml", "--a", "1", "--b", "2", "--z", "2", "--tol", "1e-17"))
    assert r["value"] == 3.194528049465325


def test_ml_default_tolerance(invoke):
    r = record(invoke("ml", "--a", "1", "--b", "1", "--z", "1"))
    assert abs(r["value"] - math.e) <= 1e-12 * math.e


def test_ml_outside_safe_bound(invoke):
    result = invoke("ml", "--a", "0.5", "--b", "1", "--z", "1e9")
    assert result.exit_code == 3
    assert "safe bound" in result.stderr


def test_ml_bad_parameter(invoke):
    assert invoke("ml", "--a", "0", "--z", "1").exit_code == 2


def test_deriv_nonconformable(invoke):
    r = record(invoke("deriv", "--op", "n", "--kernel", "nonconformable_exp", "--alpha", "0.5",
                      "--expr", "t^2", "--at", "1"))
    assert r["value"] == pytest.approx(2 * math.e, rel=1e-12)
    assert r["converged"] is True
    assert r["closed_form"] == "exp(t^-0.5) * (2.0 * t)"
    assert r["closed_form_value"] == pytest.approx(2 * math.e, rel=1e-15)


def test_deriv_classical(invoke):
    r = record(invoke("deriv", "--op", "n", "--kernel", "classical", "--alpha", "0.3", "--expr", "sin(t)",
                      "--at", "0.7"))
    assert r["value"] == pytest.approx(math.cos(0.7), rel=1e-10)


def test_deriv_weighted(invoke):
    r = record(invoke("deriv", "--op", "dh:linear", "--beta", "0.5", "--kernel", "classical", "--alpha", "0.5",
                      "--expr", "t", "--at", "2"))
    assert r["value"] == pytest.approx(2.0, rel=1e-10)
    assert r["inputs"]["beta"] == 0.5


def test_deriv_grid_csv(invoke):
    result = invoke("deriv", "--kernel", "conformable", "--alpha", "0.5", "--expr", "t", "--grid", "1:4:4")
    assert result.exit_code == 0
    table = rows(result.stdout)
    assert table[0] == ["t", "value", "err", "converged"]
    assert [float(row[0]) for row in table[1:]] == [1.0, 2.0, 3.0, 4.0]
    assert [float(row[1]) for row in table[1:]] == pytest.approx([1.0, 2**0.5, 3**0.5, 2.0], rel=1e-9)
    assert {row[3] for row in table[1:]} == {"true"}


def test_deriv_grid_json(invoke):
    r = record(invoke("deriv", "--kernel", "conformable", "--alpha", "0.5", "--expr", "t", "--grid", "1:4:4",
                      "--format", "json"))
    assert r["points"] == [1.0, 2.0, 3.0, 4.0] and r["converged"] == [True] * 4


def test_deriv_at_zero(invoke):
    r = record(invoke("deriv", "--kernel", "conformable", "--alpha", "0.5", "--expr", "t", "--at", "0"))
    assert abs(r["value"]) <= 1e-6 and r["closed_form_value"] is None


def test_deriv_unconverged_exit(invoke):
    args = ("deriv", "--kernel", "nonconformable_exp", "--alpha", "0.5", "--expr", "t^2", "--at", "0")
    result = invoke(*args)
    assert result.exit_code == 3
    assert is_valid_record(json.loads(result.stdout))
    assert invoke(*args, "--allow-unconverged").exit_code == 0


def test_deriv_table_format(invoke):
    result = invoke("deriv", "--kernel", "classical", "--alpha", "0.5", "--expr", "t^2", "--at", "1.5",
                    "--format", "table")
    assert result.exit_code == 0
    assert "3" in result.stdout and "yes" in result.stdout


def test_deriv_other_operators(invoke):
    r = record(invoke("deriv", "--op", "mult", "--alpha", "0.5", "--expr", "ln(t)", "--at", "1"))
    assert r["value"] == pytest.approx(1.0, rel=1e-9)
    r = record(invoke("deriv", "--op", "g", "--kernel", "classical", "--alpha", "1.5", "--expr", "t^3", "--at", "2"))
    assert r["value"] == pytest.approx(12.0, rel=1e-6)
    r = record(invoke("deriv", "--op", "p", "--p", "t + h*t^(1-a)", "--alpha", "0.5", "--expr", "t^2", "--at", "2"))
    assert r["value"] == pytest.approx(2 * 2**1.5, rel=1e-9)
    r = record(invoke("deriv", "--op", "point-quotient", "--alpha", "0.5", "--expr", "t^0.5", "--at", "1"))
    assert r["value"] == pytest.approx(1.0, rel=1e-9) and r["closed_form"] is None
    r = record(invoke("deriv", "--op", "yang", "--side", "left", "--alpha", "0.5", "--expr", "abs(t-1)^0.5",
                      "--at", "1"))
    assert r["inputs"]["side"] == "left"


@pytest.mark.parametrize(
    "args",
    [
        ("deriv", "--kernel", "nope", "--alpha", "0.5", "--expr", "t", "--at", "1"),
        ("deriv", "--alpha", "0.5", "--expr", "t", "--at", "1"),
        ("deriv", "--kernel", "classical", "--alpha", "0.5", "--expr", "t +", "--at", "1"),
        ("deriv", "--kernel", "classical", "--alpha", "0.5", "--expr", "t"),
        ("deriv", "--kernel", "classical", "--alpha", "0.5", "--expr", "t", "--at", "1", "--grid", "0:1:3"),
        ("deriv", "--kernel", "classical", "--alpha", "0.5", "--expr", "t", "--grid", "0:1"),
        ("deriv", "--kernel", "classical", "--alpha", "2", "--expr", "t", "--at", "1"),
        ("deriv", "--op", "bogus", "--alpha", "0.5", "--expr", "t", "--at", "1"),
        ("deriv", "--kernel", "classical", "--alpha", "0.5", "--expr", "t", "--at", "1", "--format", "xml"),
    ],
)
def test_input_errors_exit_2(invoke, args):
    assert invoke(*args).exit_code == 2


def test_compare_defaults(invoke):
    result = invoke("compare", "--expr", "t^2", "--at", "1", "--alpha", "0.5")
    assert result.exit_code == 0, result.stderr
    table = rows(result.stdout)
    assert table[0] == ["definition", "value", "err", "converged", "closed_form"]
    assert [row[0] for row in table[1:]][-1] == "mult"
    assert len(table) == 1 + 8


def test_compare_named_rows(invoke):
    result = invoke("compare", "conformable", "nonconformable_exp", "mult", "classical",
                    "--expr", "t^2", "--at", "1", "--alpha", "0.5")
    values = [float(row[1]) for row in rows(result.stdout)[1:]]
    assert values == pytest.approx([2.0, 2 * math.e, 2.0, 2.0], rel=1e-9)


def test_compare_constant(invoke):
    result = invoke("compare", "--expr", "7", "--at", "1.5", "--alpha", "0.5", "--format", "json")
    r = record(result)
    assert all(abs(row["value"]) <= 1e-12 for row in r["rows"])


def test_compare_op_at_kernel(invoke):
    result = invoke("compare", "--def", "g@classical", "--def", "dh:linear@classical", "--expr", "t^3",
                    "--at", "2", "--alpha", "0.5")
    values = [float(row[1]) for row in rows(result.stdout)[1:]]
    # g with alpha 0.5 is first order; DH adds beta f = 0.5 * 8
    assert values == pytest.approx([12.0, 16.0], rel=1e-6)


def test_compare_unknown_kernel(invoke):
    assert invoke("compare", "warp", "--expr", "t", "--at", "1", "--alpha", "0.5").exit_code == 2


def test_compare_row_failure_exit_3(invoke):
    result = invoke("compare", "classical", "conformable", "--expr", "ln(t)", "--at", "-1", "--alpha", "0.5")
    assert result.exit_code in (2, 3)


def test_integrate_examples(invoke):
    r = record(invoke("integrate", "--kernel", "conformable", "--alpha", "0.5", "--expr", "1", "--from", "0",
                      "--to", "1"))
    assert r["value"] == pytest.approx(2.0, rel=1e-10)
    assert r["subdivisions_used"] >= 0
    r = record(invoke("integrate", "--kernel", "reciprocal_power", "--alpha", "0.5", "--expr", "0", "--from", "1",
                      "--to", "3"))
    assert r["value"] == 0.0
    r = record(invoke("integrate", "--kernel", "nonconformable_exp", "--alpha", "0.5", "--expr", "exp(t^-0.5)",
                      "--from", "1", "--to", "3"))
    assert r["value"] == pytest.approx(2.0, rel=1e-12)


def test_integrate_stall_exit_3(invoke):
    result = invoke("integrate", "--kernel", "classical", "--alpha", "1", "--expr", "1/(t-1)^2", "--from", "0.5",
                    "--to", "2", "--max-subdivisions", "1000")
    assert result.exit_code == 3
    # a sample landing on the pole is a domain error instead
    assert invoke("integrate", "--kernel", "classical", "--alpha", "1", "--expr", "1/(t-1)^2", "--from", "0",
                  "--to", "2").exit_code == 2


def test_solve_csv(invoke):
    result = invoke("solve", "--kernel", "conformable", "--alpha", "0.5", "--rhs", "x", "--t0", "1", "--x0", "1",
                    "--t-end", "4", "--samples", "7", "--picard-check")
    assert result.exit_code == 0, result.stderr
    table = rows(result.stdout)
    assert table[0] == ["t", "x", "picard_residual"]
    assert len(table) == 8
    assert float(table[-1][1]) == pytest.approx(math.e**2, rel=1e-6)
    assert max(float(row[2]) for row in table[1:]) <= 1e-5


def test_solve_json(invoke):
    r = record(invoke("solve", "--kernel", "nonconformable_exp", "--alpha", "0.5", "--rhs", "1", "--t0", "1",
                      "--x0", "0", "--t-end", "3", "--format", "json", "--picard-check"))
    assert r["value"] == pytest.approx(2.0 * 0 + r["values"][-1])
    assert r["picard_residual"] <= 1e-8 and r["accepted_steps"] >= 1


def test_solve_zero_rhs(invoke):
    table = rows(invoke("solve", "--kernel", "robotov", "--alpha", "0.5", "--rhs", "0", "--t0", "1", "--x0", "3",
                        "--t-end", "2").stdout)
    assert {row[1] for row in table[1:]} == {"3.0"}


def test_solve_domain_exit_2(invoke):
    result = invoke("solve", "--kernel", "conformable", "--alpha", "0.5", "--rhs", "x", "--t0", "0", "--x0", "1",
                    "--t-end", "1")
    assert result.exit_code == 2


def test_solve_blow_up_exit_3(invoke):
    result = invoke("solve", "--kernel", "classical", "--alpha", "1", "--rhs", "x^2", "--t0", "0.5", "--x0", "1",
                    "--t-end", "2")
    assert result.exit_code == 3


def test_verify_suite_file(invoke, tmp_path):
    suite = tmp_path / "suite.json"
    suite.write_text(json.dumps({"kernels": ["classical"], "alphas": [0.5], "properties": ["constant", "product"]}))
    r = record(invoke("verify", "--suite", str(suite), "--seed", "3"))
    assert r["inputs"] == {"suite": "suite.json", "seed": 3}
    assert r["totals"]["fail"] == 0 and r["totals"]["cases"] == len(r["cases"])


def test_verify_failure_exit_3(invoke, tmp_path):
    suite = tmp_path / "suite.json"
    case = {"property": "non_semigroup", "kernel": "classical", "alpha": 0.5, "functions": ["t^3"],
            "points": [1.0], "tolerance": 1e-4}
    suite.write_text(json.dumps({"cases": [case]}))
    result = invoke("verify", "--suite", str(suite))
    assert result.exit_code == 3
    assert is_valid_record(json.loads(result.stdout))


def test_verify_seed_from_environment(invoke, tmp_path):
    suite = tmp_path / "suite.json"
    suite.write_text(json.dumps({"kernels": ["classical"], "alphas": [0.5], "properties": ["constant"]}))
    r = record(invoke("verify", "--suite", str(suite), env={"LOCALFRAC_SEED": "77"}))
    assert r["inputs"]["seed"] == 77
    r = record(invoke("verify", "--suite", str(suite), "--seed", "5", env={"LOCALFRAC_SEED": "77"}))
    assert r["inputs"]["seed"] == 5


def test_verify_csv_and_table(invoke, tmp_path):
    suite = tmp_path / "suite.json"
    suite.write_text(json.dumps({"kernels": ["classical"], "alphas": [0.5], "properties": ["constant"]}))
    table = rows(invoke("verify", "--suite", str(suite), "--format", "csv").stdout)
    assert table[0] == ["property", "item", "operator", "alpha", "functions", "points", "status", "residual"]
    assert "constant" in invoke("verify", "--suite", str(suite), "--format", "table").stdout


def test_out_file(invoke, tmp_path):
    target = tmp_path / "ml.json"
    result = invoke("ml", "--a", "2", "--b", "2", "--z", "1", "--out", str(target))
    assert result.exit_code == 0 and result.stdout == ""
    assert validate_record(json.loads(target.read_text()))["value"] == pytest.approx(math.sinh(1), rel=1e-12)


def test_config_defaults_and_precedence(invoke, tmp_path):
    cfg = tmp_path / "deriv.cfg"
    cfg.write_text("# defaults\nkernel = nonconformable_exp\nalpha = 0.5\nexpr = t^2\n")
    r = record(invoke("deriv", "--config", str(cfg), "--at", "2"))
    assert r["value"] == pytest.approx(math.exp(2**-0.5) * 4, rel=1e-9)
    r = record(invoke("deriv", "--config", str(cfg), "--at", "2", "--alpha", "1"))
    assert r["value"] == pytest.approx(math.exp(0.5) * 4, rel=1e-9)


@pytest.mark.parametrize("content", ["bogus = 1\n", "no equals sign\n"])
def test_config_errors(invoke, tmp_path, content):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(content)
    assert invoke("ml", "--config", str(cfg), "--a", "1", "--z", "1").exit_code == 2


def test_config_missing_file(invoke, tmp_path):
    assert invoke("ml", "--config", str(tmp_path / "absent"), "--a", "1", "--z", "1").exit_code == 2


def test_json_floats_round_trip(invoke):
    result = invoke("ml", "--a", "1", "--b", "1.5", "--z", "0.3")
    value = json.loads(result.stdout)["value"]
    assert repr(value) in result.stdout


def test_version_and_help(invoke):
    assert invoke("--version").exit_code == 0
    for command in ("ml", "deriv", "compare", "integrate", "solve", "verify"):
        assert invoke(command, "--help").exit_code == 0


def test_schema_rejects_unknown_keys():
    assert not is_valid_record({"command": "ml", "inputs": {}, "surprise": 1})
    assert not is_valid_record({"inputs": {}})
    assert is_valid_record('{"command": "ml", "inputs": {}, "value": 1.0}')
