"""The discounted characteristic flow

    x' = dH_check/dp = p - b(x),
    p' = -dH_check/dx - lam p = b'(x) p - U'(x) - lam p,

on the cylinder T x R: trajectories, fixed points, linearization, local
stable manifolds and empirical invariant measures.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import _kernels
from .exceptions import (
    Blowup,
    DegenerateFixedPoints,
    GraphFailure,
    NotFixedPoint,
    NotReversible,
    NotSaddle,
)
from .model import (
    GridFunction,
    HamiltonianSpec,
    eval_H_check,
    grad_central,
    one_sided_gradients,
    torus_dist,
    wrap,
)

__all__ = [
    "PhasePoint",
    "Trajectory",
    "LinearizationReport",
    "ManifoldPatch",
    "EmpiricalMeasure",
    "FixedPointList",
    "MatherEstimate",
    "vector_field",
    "integrate",
    "find_fixed_points",
    "linearize",
    "stable_manifold_local",
    "empirical_measure",
    "dissipation_profile",
    "phase_dist",
    "mather_set_estimate",
]

FIXED_POINT_TOL = 1e-10
DEFAULT_DT_FLOW = 1e-3
DEFAULT_P_BOUND = 1e3


@dataclass(frozen=True)
class PhasePoint:
    x: float
    p: float

    def __post_init__(self):
        object.__setattr__(self, "x", wrap(float(self.x)))
        object.__setattr__(self, "p", float(self.p))

    def as_tuple(self):
        return (self.x, self.p)


def phase_dist(a: PhasePoint, x, p):
    """Euclidean distance on the cylinder between ``a`` and ``(x, p)``."""
    return np.hypot(torus_dist(x, a.x), np.asarray(p) - a.p)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Fixed-step orbit sampled at ``t_k = k * dt_flow`` (negative for backward runs).

    ``x_lift`` is the unwrapped position; ``x`` wraps it to [0, 1).
    """

    dt_flow: float
    t: np.ndarray
    x_lift: np.ndarray
    p: np.ndarray
    lam: float = 0.0

    @property
    def x(self) -> np.ndarray:
        return wrap(self.x_lift)

    def __len__(self):
        return self.t.size

    @property
    def points(self):
        return [PhasePoint(a, b) for a, b in zip(self.x_lift, self.p)]

    @property
    def end(self) -> PhasePoint:
        return PhasePoint(self.x_lift[-1], self.p[-1])

    def velocity(self, spec: HamiltonianSpec) -> np.ndarray:
        return self.p - spec.b(self.x_lift)

    def rows(self):
        return np.column_stack([self.t, self.x, self.p])


@dataclass(frozen=True)
class LinearizationReport:
    fixed_point: PhasePoint
    jacobian: np.ndarray
    eigenvalues: tuple
    hyperbolic: bool
    stable_eigvec: np.ndarray | None
    lam: float = 0.0

    @property
    def saddle(self) -> bool:
        mu = self.eigenvalues
        return all(abs(m.imag) == 0.0 for m in mu) and mu[0].real * mu[1].real < 0

    @property
    def kind(self) -> str:
        mu = self.eigenvalues
        if not self.hyperbolic:
            return "center" if all(m.real == 0 for m in mu) else "degenerate"
        if self.saddle:
            return "saddle"
        if mu[0].imag != 0:
            return "stable focus" if mu[0].real < 0 else "unstable focus"
        return "stable node" if mu[0].real < 0 else "unstable node"

    def to_dict(self) -> dict:
        return {
            "x": self.fixed_point.x,
            "p": self.fixed_point.p,
            "jacobian": self.jacobian.tolist(),
            "eigenvalues": [[m.real, m.imag] for m in self.eigenvalues],
            "hyperbolic": self.hyperbolic,
            "kind": self.kind,
            "stable_eigvec": None if self.stable_eigvec is None else self.stable_eigvec.tolist(),
        }


@dataclass(frozen=True, eq=False)
class ManifoldPatch:
    """Graph ``p = h(x)`` of the local stable manifold over ``[x0 - delta, x0 + delta]``.

    ``x`` and ``h`` are points of two discrete orbits of the RK4 map (one per
    branch) joined at the fixed point, sorted by ``x`` in lifted coordinates
    around ``x0``.  Calling the patch interpolates between them.
    """

    x0: float
    delta: float
    x: np.ndarray
    h: np.ndarray
    eps: float
    dt_flow: float

    @property
    def x_range(self):
        return (self.x0 - self.delta, self.x0 + self.delta)

    def __call__(self, x):
        xl = self.x0 + np.mod(np.asarray(x, dtype=float) - self.x0 + 0.5, 1.0) - 0.5
        return np.interp(xl, self.x, self.h)

    def inside(self):
        """Samples with ``|x - x0| <= delta``."""
        m = np.abs(self.x - self.x0) <= self.delta
        return self.x[m], self.h[m]

    def rows(self):
        return np.column_stack([self.x, self.h])


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Occupation measure of a post-transient orbit, binned on ``T x [-p_max, p_max]``."""

    hist: np.ndarray
    x_edges: np.ndarray
    p_edges: np.ndarray
    samples_x: np.ndarray
    samples_p: np.ndarray
    transient: float

    @property
    def count(self) -> int:
        return int(self.samples_x.size)

    def mass_within(self, q: PhasePoint, r: float) -> float:
        return float(np.mean(phase_dist(q, self.samples_x, self.samples_p) < r))

    def p_second_moment(self) -> float:
        return float(np.mean(self.samples_p ** 2))

    def metadata(self) -> dict:
        return {
            "x_edges": [float(self.x_edges[0]), float(self.x_edges[-1]), len(self.x_edges) - 1],
            "p_edges": [float(self.p_edges[0]), float(self.p_edges[-1]), len(self.p_edges) - 1],
            "count": self.count,
            "transient": self.transient,
        }


class FixedPointList(list):
    """List of :class:`PhasePoint` with a flag for a continuum of rest points."""

    def __init__(self, points=(), degenerate=False):
        super().__init__(points)
        self.degenerate = degenerate


def vector_field(spec: HamiltonianSpec, lam: float, q: PhasePoint):
    x, p = q.x, q.p
    return p - spec.b(x), spec.b.d1(x) * p - spec.U.d1(x) - lam * p


def integrate(spec: HamiltonianSpec, lam: float, q0: PhasePoint, T: float,
              dt_flow: float = DEFAULT_DT_FLOW, p_bound: float = DEFAULT_P_BOUND) -> Trajectory:
    """Classical RK4 with fixed step.  ``T < 0`` integrates backward in time."""
    if dt_flow <= 0:
        raise ValueError("dt_flow must be positive")
    nsteps = int(round(abs(T) / dt_flow))
    step = math.copysign(dt_flow, T) if T != 0 else dt_flow
    coefs = _kernels.flow_coefficients(spec)
    # lift to [-1/2, 1/2): near x = 0 this keeps full absolute precision on both sides
    x0 = q0.x - 1.0 if q0.x >= 0.5 else q0.x
    xs, ps, last = _kernels.rk4_orbit(x0, q0.p, nsteps, step, coefs, float(lam), p_bound)
    if last < nsteps:
        raise Blowup(f"|p| exceeded {p_bound:g} at t = {(last + 1) * step:.4g}")
    return Trajectory(dt_flow, np.arange(nsteps + 1) * step, xs, ps, float(lam))


def _fp_equation(spec, lam):
    b, U = spec.b, spec.U

    def g(x):
        return b.d1(x) * b(x) - U.d1(x) - lam * b(x)

    def dg(x):
        return b.d2(x) * b(x) + b.d1(x) ** 2 - U.d2(x) - lam * b.d1(x)

    return g, dg


def find_fixed_points(spec: HamiltonianSpec, lam: float, n_scan: int = 4096,
                      xtol: float = 1e-12) -> FixedPointList:
    """Rest points ``(x, b(x))`` with ``b'(x) b(x) - U'(x) - lam b(x) = 0``.

    Sign changes on a uniform scan are bracketed with Brent's method and
    polished by Newton steps.  If the equation vanishes on the whole scan the
    returned list holds every scan node and ``degenerate`` is set.
    """
    g, dg = _fp_equation(spec, lam)
    xs = np.arange(n_scan) / n_scan
    gs = g(xs)
    scale = 1.0 + spec.b.max_abs() ** 2 + spec.U.max_abs()
    if np.max(np.abs(gs)) <= 1e-14 * scale:
        warnings.warn("fixed-point equation vanishes identically", DegenerateFixedPoints,
                      stacklevel=2)
        return FixedPointList([PhasePoint(x, spec.b(x)) for x in xs], degenerate=True)

    roots = []
    for i in range(n_scan):
        a, fa = xs[i], gs[i]
        b_, fb = (xs[i + 1], gs[i + 1]) if i + 1 < n_scan else (1.0, gs[0])
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(brentq(g, a, b_, xtol=xtol, rtol=4 * np.finfo(float).eps))
    out = []
    for r in roots:
        for _ in range(3):
            d = dg(r)
            if d == 0.0:
                break
            step = g(r) / d
            if abs(step) > 1.0 / n_scan:
                break
            r -= step
        r = wrap(r)
        if all(torus_dist(r, q.x) > 1e-9 for q in out):
            q = PhasePoint(r, spec.b(r))
            if math.hypot(*vector_field(spec, lam, q)) < FIXED_POINT_TOL:
                out.append(q)
    out.sort(key=lambda q: q.x)
    return FixedPointList(out)


def linearize(spec: HamiltonianSpec, lam: float, q: PhasePoint) -> LinearizationReport:
    """Analytic Jacobian at a rest point and its eigen-data.

    ``J = [[-b', 1], [b'' p - U'', b' - lam]]``.  The stable eigenvector for a
    real negative eigenvalue ``mu`` is ``(1, mu + b')`` normalized.
    """
    if math.hypot(*vector_field(spec, lam, q)) >= FIXED_POINT_TOL:
        raise NotFixedPoint(f"({q.x:.6g}, {q.p:.6g}) is not a rest point of the flow")
    x, p = q.x, q.p
    db = spec.b.d1(x)
    J = np.array([[-db, 1.0], [spec.b.d2(x) * p - spec.U.d2(x), db - lam]])
    tr = J[0, 0] + J[1, 1]
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    disc = tr * tr - 4.0 * det
    if disc >= 0:
        # mu^2 - tr mu + det = 0, cancellation-free form
        B = -tr
        qq = -0.5 * (B + math.copysign(math.sqrt(disc), B))
        roots = (qq, det / qq) if qq != 0 else (0.0, 0.0)
        mu = tuple(complex(m) for m in sorted(roots, reverse=True))
    else:
        r = cmath.sqrt(disc)
        mu = ((tr + r) / 2, (tr - r) / 2)
    hyperbolic = all(abs(m.real) > 1e-12 for m in mu)
    vec = None
    neg = [m.real for m in mu if m.imag == 0 and m.real < 0]
    if neg:
        v = np.array([1.0, neg[0] + db])
        vec = v / np.linalg.norm(v)
    return LinearizationReport(q, J, mu, hyperbolic, vec, float(lam))


def stable_manifold_local(spec: HamiltonianSpec, lam: float, report: LinearizationReport,
                          delta: float = 0.05, eps: float = 1e-6,
                          dt_flow: float = DEFAULT_DT_FLOW, max_steps: int = 200_000,
                          newton_iters: int = 60) -> ManifoldPatch:
    """Local stable manifold of a saddle as a graph over ``[x0 - delta, x0 + delta]``.

    Each branch starts at ``x0 ± eps * e_s`` and is continued backward in time
    by inverting the RK4 map step by step, so that consecutive samples are
    exact forward images of each other under the same discrete map used by
    :func:`integrate`.  ``eps`` grows tenfold if a branch fails to leave the
    window within ``max_steps``.
    """
    if not report.saddle or report.stable_eigvec is None:
        raise NotSaddle(f"fixed point at x = {report.fixed_point.x:.6g} is not a saddle")
    q = report.fixed_point
    x0 = q.x if q.x <= 0.5 else q.x - 1.0
    coefs = _kernels.flow_coefficients(spec)
    sx, sp = report.stable_eigvec
    branches = []
    for sign in (-1.0, 1.0):
        e = eps
        while True:
            xs, ps = _kernels.stable_branch(x0, q.p, sign * e * sx, sign * e * sp, x0, delta,
                                            dt_flow, coefs, float(lam), max_steps, newton_iters)
            if abs(xs[-1] - x0) > delta:
                break
            if e >= 1e-2:
                raise GraphFailure("backward shooting stalled inside the window")
            e *= 10.0
        dx = np.diff(xs) * sign
        if np.any(dx <= 0):
            raise GraphFailure("stable curve folds over in x")
        branches.append((xs, ps))
    (xl, pl), (xr, pr) = branches
    x = np.concatenate([xl[::-1], [x0], xr])
    h = np.concatenate([pl[::-1], [q.p], pr])
    if np.any(np.diff(x) <= 0):
        raise GraphFailure("branches overlap in x")
    return ManifoldPatch(x0, float(delta), x, h, float(eps), float(dt_flow))


def empirical_measure(spec: HamiltonianSpec, lam: float, q0: PhasePoint, T: float,
                      dt_flow: float = DEFAULT_DT_FLOW, transient: float = 0.5,
                      bins=(64, 64), p_max: float | None = None) -> EmpiricalMeasure:
    """Normalized occupation histogram of the orbit of ``q0`` after discarding a transient."""
    if not 0 <= transient < 1:
        raise ValueError("transient must be in [0, 1)")
    if (1 - transient) * T < 10:
        raise ValueError("need (1 - transient) * T >= 10")
    traj = integrate(spec, lam, q0, T, dt_flow)
    k0 = int(math.ceil(transient * (len(traj) - 1)))
    xs = traj.x[k0:]
    ps = traj.p[k0:]
    if p_max is None:
        p_max = max(1.0, 1.05 * float(np.max(np.abs(ps))))
    hist, xe, pe = np.histogram2d(xs, ps, bins=bins, range=[[0.0, 1.0], [-p_max, p_max]])
    hist /= hist.sum()
    return EmpiricalMeasure(hist, xe, pe, xs, ps, float(transient))


def dissipation_profile(traj: Trajectory, spec: HamiltonianSpec, lam: float) -> np.ndarray:
    """Rows ``(t, H_check(x(t), p(t)))`` along a trajectory of a reversible spec."""
    if not spec.reversible:
        raise NotReversible("dissipation profile needs b == 0")
    return np.column_stack([traj.t, eval_H_check(spec, traj.x, traj.p)])


# -- Mather set estimate -----------------------------------------------------------

@dataclass
class MatherEstimate:
    """Rest points reached by calibrated orbits and lying on the contact set.

    ``launch_x`` are the differentiability nodes used; ``hits[j, k]`` is the
    first time orbit ``j`` came within ``radius`` of ``fixed_points[k]``
    (``nan`` if never).
    """

    points: list
    fixed_points: list
    launch_x: np.ndarray
    launch_p: np.ndarray
    hits: np.ndarray
    radius: float
    contact: list = field(default_factory=list)

    def reached_fraction(self) -> float:
        if not self.points:
            return 0.0
        idx = [self.fixed_points.index(q) for q in self.points]
        return float(np.mean(np.any(np.isfinite(self.hits[:, idx]), axis=1)))

    def to_dict(self) -> dict:
        return {
            "points": [q.as_tuple() for q in self.points],
            "fixed_points": [q.as_tuple() for q in self.fixed_points],
            "contact": self.contact,
            "n_orbits": int(self.launch_x.size),
            "radius": self.radius,
            "reached_fraction": self.reached_fraction(),
        }


def differentiability_nodes(u: GridFunction, jump_tol: float | None = None) -> np.ndarray:
    """Nodes where the one-sided differences of ``u`` agree within ``jump_tol``."""
    dm, dp = one_sided_gradients(u)
    if jump_tol is None:
        jump_tol = 0.05 * (1.0 + float(np.max(np.abs(dp))))
    return np.flatnonzero(np.abs(dp - dm) <= jump_tol)


def mather_set_estimate(spec: HamiltonianSpec, lam: float, u_plus: GridFunction,
                        u_lambda: GridFunction | None = None, *,
                        momentum: GridFunction | None = None, n_orbits: int = 24,
                        T: float = 20.0, dt_flow: float = 2e-3, radius: float = 0.05,
                        contact_tol: float | None = None) -> MatherEstimate:
    """Estimate the Mather set of ``u_plus`` at discount ``lam``.

    Orbits start from calibrated data ``(x, Du_plus(x))`` at evenly spread
    differentiability nodes; ``momentum`` supplies ``Du_plus`` at the nodes
    (central differences when omitted).  A rest point is kept when some orbit
    enters its ``radius``-ball and it lies on the contact set: the momentum
    there matches and, when ``u_lambda`` is given, ``u_plus = u_lambda``.
    """
    grid = u_plus.grid
    if contact_tol is None:
        contact_tol = 50.0 * grid.h
    fps = list(find_fixed_points(spec, lam))
    nodes = differentiability_nodes(u_plus)
    pick = nodes[np.linspace(0, nodes.size - 1, min(n_orbits, nodes.size)).round().astype(int)]
    grad = grad_central(u_plus) if momentum is None else momentum.values
    lx = grid.nodes[pick]
    lp = grad[pick]
    hits = np.full((lx.size, len(fps)), np.nan)
    for j, (x, p) in enumerate(zip(lx, lp)):
        try:
            traj = integrate(spec, lam, PhasePoint(x, p), T, dt_flow)
        except Blowup:
            continue
        xs, ps = traj.x, traj.p
        for k, q in enumerate(fps):
            inside = np.flatnonzero(phase_dist(q, xs, ps) < radius)
            if inside.size:
                hits[j, k] = traj.t[inside[0]]
    contact = []
    points = []
    for k, q in enumerate(fps):
        i = int(grid.nearest(q.x))
        on_graph = abs(float(grad[i]) - q.p) <= contact_tol
        touch = u_lambda is None or abs(u_plus.values[i] - u_lambda.values[i]) <= contact_tol
        contact.append(bool(on_graph and touch))
        if contact[-1] and np.any(np.isfinite(hits[:, k])):
            points.append(q)
    return MatherEstimate(points, fps, lx, lp, hits, float(radius), contact)
