import numpy as np
import pytest

from weakkam import (
    Grid,
    NoConvergence,
    NotReversible,
    ScalarField,
    check_constant_subsolution,
    critical_value_ergodic,
    critical_value_reversible,
    mane,
    mechanical,
    pendulum,
    remark,
    zero,
)
from weakkam.critical import golden_max


def test_golden_max_finds_interior_maximum():
    x, fx = golden_max(lambda t: -(t - 0.3) ** 2 + 2.0, 0.0, 1.0)
    assert x == pytest.approx(0.3, abs=1e-6)
    assert fx == pytest.approx(2.0)


@pytest.mark.parametrize("spec, expected", [
    (pendulum(), 1.0),
    (pendulum(2.5), 2.5),
    (zero(), 0.0),
    (remark(0.1), 0.0),
])
def test_reversible_value_is_max_potential(spec, expected):
    assert critical_value_reversible(spec) == pytest.approx(expected, abs=1e-12)


def test_reversible_value_off_grid_maximum():
    U = ScalarField((0.0, 1.0), (0.0, 0.7))
    assert critical_value_reversible(mechanical(U)) == pytest.approx(np.hypot(1.0, 0.7), abs=1e-12)


def test_reversible_rejects_mane():
    with pytest.raises(NotReversible):
        critical_value_reversible(mane())


@pytest.mark.parametrize("spec", [pendulum(), remark(0.1), zero()], ids=lambda s: s.name)
def test_methods_agree_on_reversible_specs(spec):
    rep = critical_value_ergodic(spec, grid=Grid(1024))
    assert rep.converged
    assert abs(rep.c - critical_value_reversible(spec)) <= 5e-3


def test_ergodic_trace_nondecreasing_for_pendulum():
    rep = critical_value_ergodic(pendulum(), grid=Grid(256))
    vals = [v for _, v in rep.lambda_trace]
    assert all(b >= a - 1e-6 for a, b in zip(vals, vals[1:]))
    assert rep.to_dict()["method"] == "ergodic_limit"


def test_ergodic_mane_is_zero():
    rep = critical_value_ergodic(mane(), grid=Grid(256))
    assert abs(rep.c) <= 5e-3


def test_ergodic_argument_checks():
    with pytest.raises(ValueError):
        critical_value_ergodic(pendulum(), lambdas=(0.01, 0.1))
    with pytest.raises(ValueError):
        critical_value_ergodic(pendulum(), lambdas=(2.0,))


def test_unstable_trace_raises():
    with pytest.raises(NoConvergence) as info:
        # away from the Aubry set the trace still moves with lam
        critical_value_ergodic(pendulum(), lambdas=(1.0, 0.9), grid=Grid(64), trace_tol=1e-12,
                               x_ref=16)
    assert len(info.value.report.lambda_trace) == 2


def test_constant_subsolution_check():
    ok, margin = check_constant_subsolution(pendulum(), 1.0)
    assert ok and margin == pytest.approx(0.0, abs=1e-12)
    ok, margin = check_constant_subsolution(pendulum(), 0.9)
    assert not ok and margin == pytest.approx(-0.1)
    assert check_constant_subsolution(mane(), 0.0)[0]
