import json

import pytest

from localfrac import InputError
from localfrac.kernels import builtin_kernels
from localfrac.verify import (
    CORPUS,
    DEFAULT_SEED,
    PROPERTIES,
    RULE_ITEMS,
    PropertyCase,
    Report,
    build_grid,
    default_grid,
    load_suite,
    resolve_seed,
    run_case,
    run_suite,
)

KERNELS = [k.name for k in builtin_kernels()]


@pytest.fixture(scope="module")
def default_report():
    return run_suite(default_grid(), suite="default")


def test_default_suite_passes(default_report):
    assert default_report.totals["fail"] == 0, [r.to_dict() for r in default_report.failures()[:5]]
    assert default_report.totals["cases"] == len(default_grid())


def test_empty_grid():
    report = run_suite([])
    assert report.totals == {"cases": 0, "pass": 0, "fail": 0, "skipped": 0}
    assert report.ok


def test_leibniz_model_example():
    case = PropertyCase("leibniz_defect_model", "classical", 0.5, ("t", "t"), (1.0,), 1e-5, (("beta", 0.5),))
    result = run_case(case)
    assert result.status == "pass"
    assert result.measured == pytest.approx(-0.5, abs=1e-5)


def test_zero_weight_matches_a_zero_defect():
    # with beta = 0 the model is 0, so no violation is required
    case = PropertyCase("leibniz_defect_model", "classical", 1.0, ("t", "t"), (1.0,), 1e-5, (("beta", 0.0),))
    result = run_case(case)
    assert result.status == "pass" and abs(result.measured) <= 1e-9


def test_expected_violation_that_does_not_happen_fails():
    # F = 1 makes both compositions equal
    case = PropertyCase("non_semigroup", "classical", 0.5, ("t^3",), (1.0,), 1e-4)
    assert run_case(case).status == "fail"


def test_numeric_failures_become_report_entries():
    case = PropertyCase("closed_form_match", "conformable", 0.5, ("ln(t)",), (-1.0,), 1e-6)
    result = run_case(case)
    assert result.status == "fail" and result.reason


def test_determinism():
    grid = build_grid(["reciprocal_power"], [0.5], seed=5)
    first = run_suite(grid, seed=5).to_json()
    assert run_suite(build_grid(["reciprocal_power"], [0.5], seed=5), seed=5).to_json() == first


def test_jobs_do_not_change_the_report():
    grid = build_grid(["conformable"], [0.5], seed=3)
    assert run_suite(grid, seed=3, jobs=2).to_json() == run_suite(grid, seed=3, jobs=1).to_json()


def test_seed_changes_points_only():
    a, b = build_grid(seed=1), build_grid(seed=2)
    assert [c.property for c in a] == [c.property for c in b]
    assert [c.points for c in a] != [c.points for c in b]


def test_seed_resolution(monkeypatch):
    monkeypatch.delenv("LOCALFRAC_SEED", raising=False)
    assert resolve_seed() == DEFAULT_SEED
    monkeypatch.setenv("LOCALFRAC_SEED", "42")
    assert resolve_seed() == 42
    assert resolve_seed(7) == 7
    monkeypatch.setenv("LOCALFRAC_SEED", "forty-two")
    with pytest.raises(InputError):
        resolve_seed()


@pytest.mark.parametrize("kernel", KERNELS)
def test_every_rule_item_per_kernel(kernel):
    items = {c.item for c in build_grid([kernel]) if c.item}
    assert set(RULE_ITEMS) <= items


def test_default_grid_shape():
    grid = default_grid()
    by_prop = {}
    for c in grid:
        by_prop.setdefault(c.property, []).append(c)
    assert {c.kernel for c in grid} == {"conformable", "nonconformable_exp"}
    assert {c.alpha for c in by_prop["closed_form_match"] if c.item == "f"} == {0.1, 0.5, 0.9}
    assert {c.functions[0] for c in by_prop["closed_form_match"]} == set(CORPUS)
    assert all(len(c.points) == 5 for c in by_prop["closed_form_match"])


def test_property_case_round_trip():
    for case in build_grid(["robotov"], [0.9])[:50]:
        assert PropertyCase.from_dict(json.loads(json.dumps(case.to_dict()))) == case


@pytest.mark.parametrize(
    "kwargs", [{"property": "nope"}, {"tolerance": 0.0}],
)
def test_property_case_validation(kwargs):
    base = dict(property="linearity", kernel="classical", alpha=0.5, functions=("t", "t"), points=(1.0,), tolerance=1e-6)
    base.update(kwargs)
    with pytest.raises(InputError):
        PropertyCase(**base)


def test_report_json_and_table(default_report):
    d = json.loads(default_report.to_json())
    assert d["command"] == "verify" and d["inputs"]["seed"] == DEFAULT_SEED
    assert d["totals"]["pass"] + d["totals"]["fail"] + d["totals"]["skipped"] == d["totals"]["cases"]
    assert len(d["cases"]) == d["totals"]["cases"]
    table = default_report.to_table()
    for prop in {c.property for c in default_grid()}:
        assert prop in table


def test_report_totals_consistent():
    results = tuple(run_case(c) for c in build_grid(["classical"], [0.5])[:30])
    report = Report(1, results)
    assert report.totals["cases"] == len(results)
    assert sum(report.totals[s] for s in ("pass", "fail", "skipped")) == len(results)


def test_unknown_property_in_grid():
    with pytest.raises(InputError):
        build_grid(properties=["bogus"])
    assert set(PROPERTIES) >= {c.property for c in build_grid(["one_plus_reciprocal"])}


def test_load_suite_grid_keys(tmp_path):
    path = tmp_path / "suite.json"
    path.write_text(json.dumps({"kernels": ["classical"], "alphas": [0.5], "seed": 9, "properties": ["constant"]}))
    grid, seed = load_suite(str(path))
    assert seed == 9 and grid and {c.property for c in grid} == {"constant"}


def test_load_suite_explicit_cases(tmp_path):
    cases = [c.to_dict() for c in build_grid(["classical"], [0.5])[:3]]
    path = tmp_path / "suite.json"
    path.write_text(json.dumps({"cases": cases}))
    grid, _ = load_suite(str(path))
    assert [c.to_dict() for c in grid] == cases


@pytest.mark.parametrize("content", ["not json", "[1, 2]", '{"kernels": ["classical"], "extra": 1}',
                                     '{"cases": [{"property": "linearity"}]}'])
def test_load_suite_errors(tmp_path, content):
    path = tmp_path / "suite.json"
    path.write_text(content)
    with pytest.raises(InputError):
        load_suite(str(path))


def test_load_suite_missing_file(tmp_path):
    with pytest.raises(InputError):
        load_suite(str(tmp_path / "absent.json"))
