"""Discounted Lax-Oleinik semigroups on a periodic grid.

The backward step is the semi-Lagrangian discretization of

    u(x) = min_v  e^{-lam dt} u(x - v dt) + (1 - e^{-lam dt})/lam * (L_check(x, v) + c)

whose fixed point approximates the unique viscosity solution of
``lam u + H_check(x, Du) = c``.  The forward step is its time-reversed
counterpart (a max with growth factor ``e^{lam dt}``); iterating it from the
backward solution gives the maximal forward weak KAM solution.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import _kernels
from .exceptions import BoundaryMinimizer, Divergence, NoConvergence
from .model import (
    Grid,
    GridFunction,
    HamiltonianSpec,
    eval_H_check,
    eval_L_check,
    one_sided_gradients,
)

log = logging.getLogger(__name__)

__all__ = [
    "SemigroupConfig",
    "SolveReport",
    "DiscountWeights",
    "backward_step",
    "forward_step",
    "solve_discounted",
    "forward_limit",
    "minimal_solution_negative",
    "residual",
    "calibration_defect",
    "default_v_max",
    "optimal_momentum",
]


@dataclass(frozen=True)
class SemigroupConfig:
    """Discretization and iteration parameters.

    ``None`` for ``dt``, ``v_max`` or ``tol_fix`` selects the defaults:
    ``dt = h``, ``v_max = 2(1 + max|b| + sqrt(2(c - min U + 1)))`` and
    ``tol_fix = 1e-8 (1 + sup|u|)``.
    """

    dt: Optional[float] = None
    v_max: Optional[float] = None
    tol_fix: Optional[float] = None
    max_steps: int = 1_000_000
    stabilize_forward: bool = True
    blowup_factor: float = 1e3

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.v_max is not None and not self.v_max > 0:
            raise ValueError("v_max must be positive")
        if self.tol_fix is not None and not self.tol_fix > 0:
            raise ValueError("tol_fix must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")

    def time_step(self, grid: Grid) -> float:
        return grid.h if self.dt is None else float(self.dt)

    def velocity_bound(self, spec: HamiltonianSpec, c: float) -> float:
        return default_v_max(spec, c) if self.v_max is None else float(self.v_max)

    def tolerance(self, u_sup: float) -> float:
        return 1e-8 * (1.0 + u_sup) if self.tol_fix is None else float(self.tol_fix)

    def with_(self, **kw) -> "SemigroupConfig":
        return replace(self, **kw)


def default_v_max(spec: HamiltonianSpec, c: float, n_probe: int = 2048) -> float:
    x = np.arange(n_probe) / n_probe
    bmax = float(np.max(np.abs(spec.b(x))))
    umin = float(np.min(spec.U(x)))
    return 2.0 * (1.0 + bmax + math.sqrt(max(0.0, 2.0 * (c - umin + 1.0))))


@dataclass(frozen=True)
class DiscountWeights:
    """Exact exponential weights for one step of length ``dt``."""

    lam: float
    dt: float
    shrink: float
    grow: float
    beta_back: float
    beta_fwd: float

    @classmethod
    def of(cls, lam: float, dt: float) -> "DiscountWeights":
        z = lam * dt
        if lam == 0.0:
            bb = bf = dt
        else:
            bb = -math.expm1(-z) / lam
            bf = math.expm1(z) / lam
        return cls(lam, dt, math.exp(-z), math.exp(z), bb, bf)


@dataclass
class SolveReport:
    solution: GridFunction
    iterations: int
    final_update_norm: float
    residual_sup: float
    converged: bool
    lam: float = float("nan")
    c: float = float("nan")
    kind: str = "discounted"
    tol: float = float("nan")
    # forward iteration only
    clamped_nodes: int = 0
    fixed_point_defect: float = float("nan")
    monotone_updates: Optional[bool] = None
    boundary_hits: int = 0

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "solution"}
        d["n"] = self.solution.grid.n
        return d


class _ErrorEstimate:
    """A-posteriori distance to the fixed point from the last update norms.

    For a linearly converging iteration with rate ``rho`` the distance is about
    ``upd * rho / (1 - rho)``; ``rho`` is the largest of the recent ratios.
    """

    def __init__(self, window=10, rho_cap=0.9999):
        self.window = window
        self.rho_cap = rho_cap
        self.prev = None
        self.ratios = []

    def __call__(self, upd):
        if upd == 0.0:
            return 0.0
        if self.prev is not None and self.prev > 0:
            self.ratios.append(upd / self.prev)
            del self.ratios[:-self.window]
        self.prev = upd
        if len(self.ratios) < self.window:
            return math.inf
        rho = min(max(self.ratios), self.rho_cap)
        return upd * rho / (1.0 - rho)


class _Stepper:
    """Precomputed node data for repeated sweeps with fixed (spec, lam, c, cfg, grid)."""

    def __init__(self, spec, grid, lam, c, cfg):
        self.grid = grid
        self.dt = cfg.time_step(grid)
        self.v_max = cfg.velocity_bound(spec, c)
        self.weights = DiscountWeights.of(lam, self.dt)
        x = grid.nodes
        self.b = np.ascontiguousarray(spec.b(x), dtype=float)
        self.U = np.ascontiguousarray(spec.U(x), dtype=float)
        self.c = float(c)
        self.shift = self.dt / grid.h
        self.vel = np.empty(grid.n)

    def backward(self, u, out):
        w = self.weights
        return _kernels.sl_sweep(u, out, self.vel, self.b, self.U, self.c, w.shrink,
                                 w.beta_back, -self.shift, 1.0, self.v_max)

    def forward(self, u, out):
        w = self.weights
        return _kernels.sl_sweep(u, out, self.vel, self.b, self.U, self.c, w.grow,
                                 w.beta_fwd, self.shift, -1.0, self.v_max)

    def backward_inplace(self, u, reverse, anchor=0):
        w = self.weights
        return _kernels.sl_sweep_inplace(u, self.vel, self.b, self.U, self.c, w.shrink,
                                         w.beta_back, -self.shift, 1.0, self.v_max,
                                         anchor, True, u, False, reverse)

    def forward_inplace(self, u, reverse, cap=None):
        w = self.weights
        use_cap = cap is not None
        return _kernels.sl_sweep_inplace(u, self.vel, self.b, self.U, self.c, w.grow,
                                         w.beta_fwd, self.shift, -1.0, self.v_max,
                                         0, False, cap if use_cap else u, use_cap, reverse)

    def backward_rows(self, U2, out2, vel2, thresh=None, big=1e30):
        w = self.weights
        if thresh is None:
            return _kernels.sl_sweep_rows(U2, out2, vel2, self.b, self.U, self.c,
                                          w.shrink, w.beta_back, -self.shift, 1.0, self.v_max)
        reach = int(math.ceil(self.v_max * self.shift)) + 1
        return _kernels.sl_sweep_rows_pruned(U2, out2, vel2, self.b, self.U, self.c,
                                             w.shrink, w.beta_back, -self.shift, 1.0,
                                             self.v_max, thresh, reach, big)


def _warn_edge(count, what):
    if count:
        warnings.warn(f"{count} {what} at the velocity bound; increase v_max",
                      BoundaryMinimizer, stacklevel=3)


def backward_step(u: GridFunction, spec: HamiltonianSpec, lam: float, c: float,
                  cfg: SemigroupConfig | None = None) -> GridFunction:
    """One step of the backward discounted semigroup (``lam >= 0``)."""
    if lam < 0:
        raise ValueError("backward_step needs lam >= 0")
    cfg = cfg or SemigroupConfig()
    st = _Stepper(spec, u.grid, lam, c, cfg)
    out = np.empty(u.grid.n)
    _warn_edge(st.backward(np.ascontiguousarray(u.values), out), "minimizers")
    return GridFunction(u.grid, out)


def forward_step(u: GridFunction, spec: HamiltonianSpec, lam: float, c: float,
                 cfg: SemigroupConfig | None = None) -> GridFunction:
    """One step of the forward discounted semigroup."""
    if lam <= 0:
        raise ValueError("forward_step needs lam > 0")
    cfg = cfg or SemigroupConfig()
    st = _Stepper(spec, u.grid, lam, c, cfg)
    out = np.empty(u.grid.n)
    _warn_edge(st.forward(np.ascontiguousarray(u.values), out), "maximizers")
    return GridFunction(u.grid, out)


def solve_discounted(spec: HamiltonianSpec, lam: float, c: float,
                     cfg: SemigroupConfig | None = None,
                     u_init: GridFunction | None = None, *, grid: Grid | None = None,
                     anchor: int = 0) -> SolveReport:
    """Fixed point of :func:`backward_step`, i.e. the solution ``u_lam``.

    The iteration runs on ``u - u(x_anchor)``.  Because the step commutes with
    constants (``T(u + K) = T(u) + e^{-lam dt} K``), the constant part of the
    plain iterates is a geometric series whose limit is added back in closed
    form; only the slow constant mode is skipped, the fixed point is the same.
    Sweeps are Gauss-Seidel with alternating direction, which shares its fixed
    point with the Jacobi step; the result is accepted only once one Jacobi
    :func:`backward_step` moves it by at most the tolerance.
    """
    if not lam > 0:
        raise ValueError("solve_discounted needs lam > 0")
    cfg = cfg or SemigroupConfig()
    if u_init is None:
        if grid is None:
            raise ValueError("pass u_init or grid")
        u_init = grid.constant(0.0)
    grid = u_init.grid
    st = _Stepper(spec, grid, lam, c, cfg)
    w = st.weights
    n = grid.n

    r = np.array(u_init.values, dtype=float)
    r -= r[anchor]
    out = np.empty(n)
    k = 0
    err = _ErrorEstimate()
    while True:
        shift, upd, _ = st.backward_inplace(r, k % 2 == 1, anchor)
        k += 1
        K = shift / (1.0 - w.shrink)
        tol = cfg.tolerance(float(np.max(np.abs(r + K))))
        est = err(upd)
        if (upd <= 0.5 * tol and est <= 0.5 * tol) or k >= cfg.max_steps:
            u = r + K
            edge_final = st.backward(u, out)
            final = float(np.max(np.abs(out - u)))
            if final <= tol or k >= cfg.max_steps:
                break
    _warn_edge(edge_final, "minimizers")
    sol = GridFunction(grid, u)
    rep = SolveReport(sol, k, final, _sup(residual(sol, spec, lam, c)), final <= tol,
                      lam=lam, c=c, kind="discounted", tol=tol)
    log.debug("solve_discounted lam=%g: %d steps, update %.3e", lam, k, final)
    if not rep.converged:
        raise NoConvergence(f"backward iteration did not converge in {k} steps", rep)
    return rep


def forward_limit(spec: HamiltonianSpec, lam: float, c: float,
                  cfg: SemigroupConfig | None = None, *, grid: Grid | None = None,
                  u_lambda: GridFunction | SolveReport | None = None,
                  u_start: GridFunction | None = None) -> SolveReport:
    """``u_lam^+ = lim_t T^+_t u_lam``, the maximal forward weak KAM solution.

    With ``stabilize_forward`` the iterates are capped by ``u_lam`` node-wise
    (``u_lam^+ <= u_lam`` holds for the exact objects); the returned function
    must still satisfy the uncapped fixed-point check.  ``clamped_nodes``
    counts the nodes where one more uncapped step would exceed the cap.  ``u_start`` replaces
    ``u_lam`` as the starting function (used for multi-start experiments).
    """
    if not lam > 0:
        raise ValueError("forward_limit needs lam > 0")
    cfg = cfg or SemigroupConfig()
    if isinstance(u_lambda, SolveReport):
        u_lambda = u_lambda.solution
    if u_lambda is None:
        if grid is None:
            raise ValueError("pass grid or u_lambda")
        u_lambda = solve_discounted(spec, lam, c, cfg, grid=grid).solution
    grid = u_lambda.grid
    st = _Stepper(spec, grid, lam, c, cfg)
    cap = np.ascontiguousarray(u_lambda.values)
    ref_sup = float(np.max(np.abs(cap)))
    tol = cfg.tolerance(ref_sup)
    bound = cfg.blowup_factor * (1.0 + ref_sup)

    u = np.array(cap if u_start is None else u_start.values, dtype=float)
    prev = np.empty(grid.n)
    out = np.empty(grid.n)
    monotone = True
    k = 0
    err = _ErrorEstimate()
    while True:
        prev[:] = u
        st.forward_inplace(u, k % 2 == 1, cap if cfg.stabilize_forward else None)
        k += 1
        diff = u - prev
        upd = float(np.max(np.abs(diff)))
        if np.max(diff) > tol:
            monotone = False
        if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > bound:
            rep = SolveReport(GridFunction(grid, np.nan_to_num(u)), k, upd, float("nan"), False,
                              lam=lam, c=c, kind="forward", tol=tol, monotone_updates=monotone)
            raise Divergence(f"forward iteration blew up after {k} steps "
                             f"(sup {np.max(np.abs(u)):.3e} > {bound:.3e})", rep)
        est = err(upd)
        if (upd <= 0.5 * tol and est <= 0.5 * tol) or k >= cfg.max_steps:
            break
    edge_final = st.forward(u, out)
    clamped = int(np.count_nonzero(out > cap + tol))
    defect = float(np.max(np.abs(out - u)))
    _warn_edge(edge_final, "maximizers")
    sol = GridFunction(grid, u)
    below = bool(np.all(u <= cap + tol))
    converged = est <= 0.5 * tol and defect <= tol and below
    rep = SolveReport(sol, k, upd, _sup(residual(sol, spec, lam, c)), converged, lam=lam, c=c,
                      kind="forward", tol=tol, clamped_nodes=clamped,
                      fixed_point_defect=defect, monotone_updates=monotone)
    log.debug("forward_limit lam=%g: %d steps, defect %.3e, clamped %d", lam, k, defect, clamped)
    if k >= cfg.max_steps and est > 0.5 * tol:
        raise NoConvergence(f"forward iteration did not converge in {k} steps", rep)
    return rep


def minimal_solution_negative(spec: HamiltonianSpec, lam: float, c: float,
                              cfg: SemigroupConfig | None = None, *, grid: Grid | None = None,
                              u_lambda=None) -> GridFunction:
    """Minimal viscosity solution of ``-lam u + H(x, Du) = c``, computed as ``-u_lam^+``."""
    return -forward_limit(spec, lam, c, cfg, grid=grid, u_lambda=u_lambda).solution


def optimal_momentum(u: GridFunction, spec: HamiltonianSpec, lam: float, c: float,
                     cfg: SemigroupConfig | None = None,
                     direction: str = "forward") -> GridFunction:
    """Momentum ``p = v* + b(x)`` of the optimal velocity of one step at each node.

    For a fixed point of the step this is the discrete counterpart of ``Du``
    along calibrated curves, and is much closer to it than finite differences.
    """
    cfg = cfg or SemigroupConfig()
    st = _Stepper(spec, u.grid, lam, c, cfg)
    out = np.empty(u.grid.n)
    vals = np.ascontiguousarray(u.values)
    if direction == "forward":
        st.forward(vals, out)
    elif direction == "backward":
        st.backward(vals, out)
    else:
        raise ValueError("direction must be 'forward' or 'backward'")
    return GridFunction(u.grid, st.vel + st.b)


def residual(u: GridFunction, spec: HamiltonianSpec, lam: float, c: float) -> GridFunction:
    """Node-wise ``lam u + H_LF(x, D-u, D+u) - c`` with a local Lax-Friedrichs Hamiltonian.

    ``H_LF = H_check(x, (D- + D+)/2) - theta (D+ - D-)/2`` where ``theta`` is the
    largest ``|dH_check/dp| = |p - b(x)|`` over the box spanned by ``D-`` and ``D+``.
    ``lam`` may be negative, which evaluates ``-|lam| u + H_check(x, Du) - c``.
    """
    x = u.grid.nodes
    dm, dp = one_sided_gradients(u)
    b = spec.b(x)
    theta = np.maximum(np.abs(dm - b), np.abs(dp - b))
    hlf = eval_H_check(spec, x, 0.5 * (dm + dp)) - 0.5 * theta * (dp - dm)
    return GridFunction(u.grid, lam * u.values + hlf - c)


def calibration_defect(u: GridFunction, traj, spec: HamiltonianSpec, lam: float,
                       c: float) -> float:
    """Largest gap in the calibration identity along a sampled curve.

    ``max_k | e^{lam t_k} u(g(t_k)) - u(g(0)) - int_0^{t_k} e^{lam s}(L_check + c) ds |``
    with the trapezoid rule; velocities are taken from the trajectory.
    """
    return float(np.max(np.abs(calibration_gap(u, traj, spec, lam, c))))


def calibration_gap(u: GridFunction, traj, spec: HamiltonianSpec, lam: float, c: float):
    """Signed ``lhs - integral`` along the curve (<= 0 for a subsolution, up to discretization)."""
    t = np.asarray(traj.t)
    x = np.asarray(traj.x)
    v = np.asarray(traj.velocity(spec))
    integrand = np.exp(lam * t) * (eval_L_check(spec, x, v) + c)
    steps = 0.5 * np.diff(t) * (integrand[1:] + integrand[:-1])
    integral = np.concatenate(([0.0], np.cumsum(steps)))
    return np.exp(lam * t) * u(x) - u(x[0]) - integral


def _sup(f: GridFunction) -> float:
    return float(np.max(np.abs(f.values)))
