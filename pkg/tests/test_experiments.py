import json

import pytest

from weakkam import PreconditionError
from weakkam.experiments import (
    ExperimentReport,
    canonical_name,
    default_config,
    run_experiment,
)


def test_canonical_names():
    assert canonical_name("remark-counterexample") == "remark"
    assert canonical_name("plus") == "vanishing_plus"
    with pytest.raises(ValueError):
        canonical_name("nope")


def test_verdicts_name_invariants():
    rep = run_experiment(default_config("flow_portrait"))
    assert rep.passed
    for v in rep.verdicts:
        module, _, prop = v.invariant.partition(".")
        assert module in {"core_model", "critical", "lax_oleinik", "char_flow", "aubry"} and prop


def test_flow_portrait_without_discount_conserves_energy():
    rep = run_experiment(default_config("flow_portrait", lambdas=[0.0]))
    assert rep.verdict("energy_conservation").passed


def test_flow_portrait_mane_and_zero():
    rep = run_experiment(default_config("flow_portrait", spec={"family": "mane"}))
    assert rep.passed and len(rep.summary["fixed_points"]) == 4
    rep = run_experiment(default_config("flow_portrait",
                                        spec={"family": "mechanical", "potential": "zero"}))
    assert rep.summary["degenerate_fixed_points"]


def test_nonuniqueness_demo():
    rep = run_experiment(default_config("nonuniqueness", n=256))
    assert rep.passed
    assert rep.verdict("u1_residual_zero").value == 0.0
    assert rep.summary["residual_order"] >= 0.8


def test_remark_fixed_points_and_residual():
    rep = run_experiment(default_config("remark", n=1024))
    assert rep.verdict("fixed_point_0").passed and rep.verdict("fixed_point_0.5").passed
    assert rep.verdict("dirac_0.5").passed
    # the residual shrinks linearly in h
    r = {rec["n"]: rec["residual_sup"] for rec in rep.records}
    assert 1.8 < r[1024] / r[2048] < 2.2


def test_single_lambda_sweep_is_vacuous():
    rep = run_experiment(default_config("vanishing_plus", lambdas=[0.2], n=256))
    assert rep.passed
    assert rep.verdict("cauchy").detail == "vacuous"


def test_precondition_failure():
    cfg = default_config("vanishing_plus", n=128, options={"c": 0.5})
    with pytest.raises(PreconditionError):
        run_experiment(cfg)


def test_vanishing_minus_zero_spec():
    rep = run_experiment(default_config("vanishing_minus", n=128,
                                        spec={"family": "mechanical", "potential": "zero"}))
    assert rep.passed
    assert all(r["sup_norm"] == 0.0 for r in rep.records)


def test_solver_errors_become_failed_verdicts():
    cfg = default_config("vanishing_plus", n=128, semigroup={"max_steps": 2})
    rep = run_experiment(cfg)
    assert not rep.passed
    assert rep.verdicts[-1].invariant == "errors.NoConvergence"
    assert rep.summary["diagnostics"]["iterations"] == 2


def test_reports_are_deterministic(tmp_path):
    cfg = default_config("pendulum_uniqueness", n=128, seed=11, options={"record_lambdas": []})
    a = run_experiment(cfg)
    b = run_experiment(cfg)
    a.write(tmp_path / "a")
    b.write(tmp_path / "b")
    for name in ["report.json", "forward_limit.csv", "stable_manifold.csv"]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    data = json.loads((tmp_path / "a" / "report.json").read_text())
    assert "timings" not in data and data["config"]["seed"] == 11
    assert set(a.timings) == set(b.timings)


def test_report_to_dict_optionally_keeps_timings():
    rep = ExperimentReport("x", {})
    with rep.timed("step"):
        pass
    assert "timings" in rep.to_dict(include_timings=True)
    assert rep.passed
