import json

import pytest

from cbkernels import suites


def test_zero_trials_is_empty_and_passing():
    rep = suites.verify_theorems(trials=0)
    assert rep["ok"]
    assert set(rep["suites"]) == set(suites.SUITES)
    for s in rep["suites"].values():
        assert s["passed"] == 0 and s["failed"] == 0


def test_report_is_json_and_deterministic():
    kw = dict(trials=2, seed=3, suites=["positive_roundtrip", "equiv_cond", "scalar"])
    a, b = suites.verify_theorems(**kw), suites.verify_theorems(**kw)
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert a["schema"] == suites.SCHEMA and a["schema_version"] == suites.SCHEMA_VERSION


@pytest.mark.parametrize(
    "name, prop",
    [
        ("positive_roundtrip", "roundtrip"),
        ("equiv_cond", "order_bounds"),
        ("kolm_characterisation", "assembled_cp"),
        ("four_cp", "parts_cp"),
    ],
)
def test_corruption_is_reported(name, prop):
    rep = suites.verify_theorems(trials=1, suites=[name], corrupt=[name])
    s = rep["suites"][name]
    assert not rep["ok"] and not s["ok"]
    assert s["failures"][0]["trial"] == 0
    assert prop in {f["property"] for f in s["failures"]}


def test_unknown_suite_rejected():
    with pytest.raises(ValueError):
        suites.verify_theorems(suites=["nope"])
    with pytest.raises(ValueError):
        suites.verify_theorems(suites=["haagerup"], corrupt=["haagerup"])


@pytest.mark.parametrize(
    "name", ["positive_roundtrip", "equiv_cond", "hermitian_selfadjoint", "haagerup", "scalar", "statement_chain"]
)
def test_small_runs_pass(name):
    res = suites.SUITES[name](trials=3, seed=11)
    assert res.ok, res.failures


def test_size_overrides_are_forwarded():
    rep = suites.verify_theorems(trials=1, n=2, p=1, q=1, suites=["positive_roundtrip"])
    assert rep["config"]["n"] == 2 and rep["ok"]
