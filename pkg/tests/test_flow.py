import math
import warnings

import numpy as np
import pytest

from weakkam import (
    Blowup,
    DegenerateFixedPoints,
    Grid,
    NotFixedPoint,
    NotReversible,
    NotSaddle,
    PhasePoint,
    dissipation_profile,
    empirical_measure,
    find_fixed_points,
    forward_limit,
    integrate,
    linearize,
    mane,
    mather_set_estimate,
    optimal_momentum,
    pendulum,
    remark,
    solve_discounted,
    stable_manifold_local,
    vector_field,
    zero,
)
from weakkam.flow import differentiability_nodes, phase_dist
from weakkam.model import eval_H_check


def test_phase_point_wraps():
    q = PhasePoint(1.25, 2)
    assert q.x == pytest.approx(0.25) and q.p == 2.0


def test_vector_field_mechanical_is_damped_newton():
    sp = pendulum()
    dx, dp = vector_field(sp, 0.1, PhasePoint(0.2, 0.5))
    assert dx == pytest.approx(0.5)
    assert dp == pytest.approx(-sp.U.d1(0.2) - 0.05)
    assert vector_field(sp, 0.1, PhasePoint(0.0, 0.0)) == (0.0, 0.0)


def test_vector_field_remark_half():
    dx, dp = vector_field(remark(), 1.0, PhasePoint(0.5, 0.0))
    assert abs(dx) + abs(dp) < 1e-12


def test_integrate_from_rest_point_is_constant():
    traj = integrate(pendulum(), 0.1, PhasePoint(0.5, 0.0), 5.0)
    assert np.allclose(traj.x, 0.5) and np.allclose(traj.p, 0.0)
    assert len(traj) == 5001


def test_integrate_backward_inverts_forward():
    sp = pendulum()
    fwd = integrate(sp, 0.3, PhasePoint(0.2, 0.4), 1.0)
    back = integrate(sp, 0.3, fwd.end, -1.0)
    assert phase_dist(PhasePoint(0.2, 0.4), back.end.x, back.end.p) < 1e-9
    assert back.t[-1] == pytest.approx(-1.0)


def _rk4_reference_step(sp, lam, x, p, dt):
    def f(x, p):
        return np.array(vector_field(sp, lam, PhasePoint(x, p)))

    y = np.array([x, p])
    k1 = f(*y)
    k2 = f(*(y + 0.5 * dt * k1))
    k3 = f(*(y + 0.5 * dt * k2))
    k4 = f(*(y + dt * k3))
    return y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def test_consecutive_points_are_rk4_steps():
    sp = mane()
    dt = 1e-3
    traj = integrate(sp, 0.2, PhasePoint(0.1, 0.7), 0.05, dt)
    for k in (0, 17, 42):
        x1, p1 = _rk4_reference_step(sp, 0.2, traj.x_lift[k], traj.p[k], dt)
        assert abs(x1 - traj.x_lift[k + 1]) + abs(p1 - traj.p[k + 1]) <= 10 * dt ** 5


def test_rk4_order_four():
    sp = pendulum()
    q0 = PhasePoint(0.3, 0.2)
    ref = integrate(sp, 0.1, q0, 1.0, 1e-4).end
    errs = [phase_dist(ref, *integrate(sp, 0.1, q0, 1.0, dt).end.as_tuple())
            for dt in (0.01, 0.005)]
    assert 14 <= errs[0] / errs[1] <= 18


def test_integrate_blowup():
    with pytest.raises(Blowup):
        integrate(pendulum(), -50.0, PhasePoint(0.3, 1.0), 5.0, 1e-3, p_bound=10.0)
    with pytest.raises(ValueError):
        integrate(pendulum(), 0.1, PhasePoint(0.3, 1.0), 1.0, 0.0)


def test_reversible_dissipation_on_random_starts():
    sp = pendulum()
    rng = np.random.default_rng(5)
    for x, p in zip(rng.uniform(0, 1, 20), rng.uniform(-3, 3, 20)):
        traj = integrate(sp, 0.2, PhasePoint(x, p), 10.0, 1e-3)
        prof = dissipation_profile(traj, sp, 0.2)
        assert np.max(np.diff(prof[:, 1])) <= 1e-8


def test_energy_conserved_without_discount():
    sp = pendulum()
    traj = integrate(sp, 0.0, PhasePoint(0.2, 1.0), 10.0, 1e-3)
    e = eval_H_check(sp, traj.x, traj.p)
    assert np.max(np.abs(e - e[0])) < 1e-9


def test_dissipation_needs_reversible():
    traj = integrate(mane(), 0.1, PhasePoint(0.2, 0.1), 0.1)
    with pytest.raises(NotReversible):
        dissipation_profile(traj, mane(), 0.1)


def test_pendulum_fixed_points():
    fps = find_fixed_points(pendulum(), 0.1)
    assert [q.as_tuple() for q in fps] == [(0.0, 0.0), (0.5, 0.0)]
    assert not fps.degenerate


def test_remark_fixed_points():
    fps = find_fixed_points(remark(), 1.0)
    xs = [q.x for q in fps]
    assert min(abs(x) for x in xs) <= 1e-10
    assert min(abs(x - 0.5) for x in xs) <= 1e-10
    for q in fps:
        assert math.hypot(*vector_field(remark(), 1.0, q)) < 1e-10


def test_mane_fixed_points_sit_on_graph_of_b():
    sp = mane()
    fps = find_fixed_points(sp, 0.1)
    assert len(fps) == 4
    for q in fps:
        assert q.p == pytest.approx(sp.b(q.x))
        g = sp.b.d1(q.x) * sp.b(q.x) - sp.U.d1(q.x) - 0.1 * sp.b(q.x)
        assert abs(g) < 1e-10


def test_zero_spec_is_degenerate():
    with pytest.warns(DegenerateFixedPoints):
        fps = find_fixed_points(zero(), 0.1)
    assert fps.degenerate


@pytest.mark.parametrize("lam", [0.0, 0.1, 1.0])
def test_pendulum_eigenvalues_match_closed_form(lam):
    rep = linearize(pendulum(), lam, PhasePoint(0.0, 0.0))
    disc = math.sqrt(lam ** 2 + 16 * math.pi ** 2)
    assert rep.eigenvalues[0].real == pytest.approx((-lam + disc) / 2, abs=1e-8)
    assert rep.eigenvalues[1].real == pytest.approx((-lam - disc) / 2, abs=1e-8)
    assert rep.saddle and rep.hyperbolic


def test_pendulum_bottom_is_focus():
    rep = linearize(pendulum(), 0.1, PhasePoint(0.5, 0.0))
    assert rep.kind == "stable focus"
    assert rep.stable_eigvec is None
    assert linearize(pendulum(), 0.0, PhasePoint(0.5, 0.0)).kind == "center"


def test_linearize_rejects_non_rest_point():
    with pytest.raises(NotFixedPoint):
        linearize(pendulum(), 0.1, PhasePoint(0.2, 0.0))


def test_stable_manifold_needs_saddle():
    with pytest.raises(NotSaddle):
        stable_manifold_local(pendulum(), 0.1, linearize(pendulum(), 0.1, PhasePoint(0.5, 0.0)))


@pytest.fixture(scope="module")
def patch():
    lin = linearize(pendulum(), 0.1, PhasePoint(0.0, 0.0))
    return lin, stable_manifold_local(pendulum(), 0.1, lin)


def test_stable_manifold_is_graph_through_rest_point(patch):
    lin, pt = patch
    assert pt(0.0) == pytest.approx(0.0, abs=1e-12)
    lo, hi = pt.x_range
    assert pt.x[0] <= lo and pt.x[-1] >= hi
    assert np.all(np.diff(pt.x) > 0)
    # tangent to the stable eigenvector
    sx, sp = lin.stable_eigvec
    assert pt(1e-3) / 1e-3 == pytest.approx(sp / sx, rel=1e-2)


def test_stable_manifold_samples_converge(patch):
    lin, pt = patch
    horizon = 20 / abs(lin.eigenvalues[1].real)
    xs, hs = pt.inside()
    for i in np.linspace(0, xs.size - 1, 7).round().astype(int):
        end = integrate(pendulum(), 0.1, PhasePoint(xs[i], hs[i]), horizon).end
        assert phase_dist(PhasePoint(0.0, 0.0), end.x, end.p) < 1e-6


def test_empirical_measure_concentrates_at_rest_points():
    meas = empirical_measure(pendulum(), 0.1, PhasePoint(0.3, 0.0), 200.0)
    assert meas.hist.sum() == pytest.approx(1.0)
    near = sum(meas.mass_within(q, 0.05) for q in find_fixed_points(pendulum(), 0.1))
    assert near == pytest.approx(1.0)
    assert meas.p_second_moment() < 1e-4
    with pytest.raises(ValueError):
        empirical_measure(pendulum(), 0.1, PhasePoint(0.3, 0.0), 5.0)


def test_mather_estimate_pendulum():
    sp = pendulum()
    g = Grid(512)
    ul = solve_discounted(sp, 0.1, 1.0, grid=g).solution
    up = forward_limit(sp, 0.1, 1.0, u_lambda=ul).solution
    assert differentiability_nodes(up).size > 0.9 * g.n
    est = mather_set_estimate(sp, 0.1, up, ul, momentum=optimal_momentum(up, sp, 0.1, 1.0))
    assert [q.as_tuple() for q in est.points] == [(0.0, 0.0)]
    assert est.reached_fraction() == 1.0
    assert est.contact == [True, False]
