"""Experiment drivers behind the ``weakkam`` command.

Each ``run_*`` function takes an :class:`~weakkam.io.ExperimentConfig` and
returns an :class:`ExperimentReport` whose verdicts each name the invariant
they check.  Reports are deterministic for a given config and seed; wall-clock
timings are kept apart from the rest of the report for that reason.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .aubry import aubry_reversible, check_vanishing_on_aubry, peierls_oracle
from .critical import (
    check_constant_subsolution,
    critical_value_ergodic,
    critical_value_reversible,
)
from .exceptions import DegenerateFixedPoints, PreconditionError, WeakKAMError
from .flow import (
    PhasePoint,
    dissipation_profile,
    empirical_measure,
    find_fixed_points,
    integrate,
    linearize,
    mather_set_estimate,
    phase_dist,
    stable_manifold_local,
    vector_field,
)
from .io import (
    ExperimentConfig,
    semigroup_config,
    spec_to_dict,
    write_csv,
    write_histogram,
    write_json,
)
from .model import Grid, GridFunction, grad_central, lipschitz_constant, remark_w, torus_dist, zero
from .semigroup import (
    SemigroupConfig,
    forward_limit,
    minimal_solution_negative,
    optimal_momentum,
    residual,
    solve_discounted,
)
from .validation import check_lambda, check_lambda_sweep

log = logging.getLogger(__name__)

__all__ = [
    "Verdict",
    "ExperimentReport",
    "EXPERIMENTS",
    "ALIASES",
    "default_config",
    "run_experiment",
    "run_vanishing_plus",
    "run_vanishing_minus",
    "run_nonuniqueness_demo",
    "run_pendulum_uniqueness",
    "run_remark_counterexample",
    "run_flow_portrait",
]


@dataclass
class Verdict:
    """Outcome of one check; ``invariant`` is ``"<module>.<property>"``."""

    name: str
    invariant: str
    passed: bool
    value: float | None = None
    threshold: float | None = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "invariant": self.invariant,
            "passed": bool(self.passed),
            "value": self.value,
            "threshold": self.threshold,
            "detail": self.detail,
        }


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    records: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    # name -> (columns, meta, plot hints); written as CSV next to the report
    tables: dict = field(default_factory=dict)
    histograms: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def verdict(self, name: str) -> Verdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    def check(self, name, invariant, passed, value=None, threshold=None, detail=""):
        v = Verdict(name, invariant, bool(passed),
                    None if value is None else float(value),
                    None if threshold is None else float(threshold), detail)
        self.verdicts.append(v)
        log.info("%s %s: %s", "PASS" if v.passed else "FAIL", name, detail or value)
        return v

    def table(self, name, columns, *, style="lines", ycols=None, **meta):
        """Register a CSV; ``ycols`` picks the plotted columns (default: all but the first)."""
        self.tables[name] = (columns, meta, {"style": style, "ycols": ycols})

    @contextmanager
    def timed(self, key):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timings[key] = self.timings.get(key, 0.0) + time.perf_counter() - t0

    def to_dict(self, include_timings: bool = False) -> dict:
        d = {
            "experiment": self.experiment,
            "config": self.config,
            "records": self.records,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "summary": self.summary,
            "passed": self.passed,
            "files": sorted(f"{k}.csv" for k in (*self.tables, *self.histograms)),
        }
        if include_timings:
            d["timings"] = self.timings
        return d

    def write(self, out_dir) -> Path:
        """``report.json``, ``timings.json``, one CSV per table and ``plot.gp``."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_json(self.to_dict(), out / "report.json")
        write_json(self.timings, out / "timings.json")
        for name, (cols, meta, _) in self.tables.items():
            write_csv(out / f"{name}.csv", cols, meta)
        for name, (hist, meta) in self.histograms.items():
            write_histogram(out / f"{name}.csv", hist, meta)
        (out / "plot.gp").write_text(gnuplot_script(self))
        return out


def gnuplot_script(report: ExperimentReport) -> str:
    """One page per table: first column on the x axis, the others as lines."""
    lines = [
        f"# {report.experiment}",
        "set terminal pngcairo size 900,600",
        'set datafile separator ","',
        "set key autotitle columnhead",
        "set grid",
    ]
    for name, (cols, _, hints) in report.tables.items():
        names = list(cols)
        lines += [f'set output "{name}.png"', f'set title "{name}"', f'set xlabel "{names[0]}"']
        ycols = hints["ycols"] or names[1:]
        series = [f'"{name}.csv" using 1:{names.index(k) + 1} with {hints["style"]}'
                  for k in ycols]
        lines.append("plot " + ", \\\n     ".join(series))
    for name, (_, meta) in report.histograms.items():
        x0, x1, nx = meta["x_edges"]
        p0, p1, npb = meta["p_edges"]
        lines += [
            f'set output "{name}.png"',
            f'set title "{name}"',
            'set xlabel "x"',
            'set ylabel "p"',
            "unset key",
            f"plot \"{name}.csv\" matrix using ({x0}+($1+0.5)*{(x1 - x0) / nx!r}):"
            f"({p0}+($2+0.5)*{(p1 - p0) / npb!r}):3 with image",
            "set key",
        ]
    return "\n".join(lines) + "\n"


# -- shared pieces --------------------------------------------------------------------

def _slack(grid: Grid, cfg: SemigroupConfig) -> float:
    return 10.0 * (grid.h + cfg.time_step(grid))


def _critical_level(spec, cfg: ExperimentConfig) -> float:
    c = cfg.option("c")
    if c is not None:
        return float(c)
    if spec.reversible:
        return critical_value_reversible(spec)
    return critical_value_ergodic(spec, grid=Grid(cfg.n)).c


def _aubry(spec, c, grid):
    if spec.reversible:
        return aubry_reversible(spec, c, grid=grid)
    return peierls_oracle(spec, c)


def _require_constants(spec, c):
    ok, margin = check_constant_subsolution(spec, c)
    if not ok:
        raise PreconditionError(
            f"constants are not subsolutions at c = {c:g}: min_x (c - H(x, 0)) = {margin:.3g}")
    return margin


def _cauchy(diffs, tol):
    """Each consecutive sup-difference is smaller than the one before, or negligible."""
    return all(b < a or b <= tol for a, b in zip(diffs, diffs[1:]))


def _lipschitz_bound(spec, c, lams, sups):
    """A priori gradient bound from ``|lam u| + H_check(x, Du) <= c + |lam u|``."""
    x = np.arange(4096) / 4096
    b = np.abs(spec.b(x))
    drive = 2.0 * (c - float(np.min(spec.U(x)))) + float(np.max(b)) ** 2
    drive += 2.0 * max(l * s for l, s in zip(lams, sups))
    return float(np.max(b)) + math.sqrt(max(drive, 0.0))


def _record(lam, u: GridFunction, rep, **extra):
    r = {
        "lambda": lam,
        "sup_norm": u.sup_norm(),
        "min": float(np.min(u.values)),
        "value_at_0": float(u.values[0]),
        "lipschitz": lipschitz_constant(u),
        "iterations": rep.iterations,
        "final_update": rep.final_update_norm,
        "residual_sup": rep.residual_sup,
    }
    r.update(extra)
    return r


def _backward_sweep(spec, lams, c, grid, sg, report):
    """``u_lam`` for each ``lam``, each solve warm-started from the previous solution."""
    sols, reps = [], []
    prev = None
    for lam in lams:
        with report.timed(f"backward lam={lam:g}"):
            rep = solve_discounted(spec, lam, c, sg, u_init=prev, grid=grid)
        prev = rep.solution
        sols.append(rep.solution)
        reps.append(rep)
    return sols, reps


def _new_report(name, cfg: ExperimentConfig, spec) -> ExperimentReport:
    d = cfg.to_dict()
    d.pop("out", None)
    d["spec"] = spec_to_dict(spec)
    return ExperimentReport(name, d)


# -- experiments ------------------------------------------------------------------------

def run_vanishing_plus(cfg: ExperimentConfig) -> ExperimentReport:
    """Discounted solutions increase to a limit that vanishes on the Aubry set."""
    spec = cfg.build_spec()
    lams = check_lambda_sweep(cfg.lambdas)
    grid = Grid(cfg.n)
    sg = semigroup_config(cfg)
    report = _new_report("vanishing_plus", cfg, spec)
    c = _critical_level(spec, cfg)
    margin = _require_constants(spec, c)
    report.summary.update(c=c, constants_margin=margin)

    sols, reps = _backward_sweep(spec, lams, c, grid, sg, report)
    A = _aubry(spec, c, grid)
    report.summary["aubry"] = A.to_dict()
    for lam, u, rep in zip(lams, sols, reps):
        report.records.append(_record(lam, u, rep, on_aubry=check_vanishing_on_aubry(u, A)[1]))

    low = min(float(np.min(u.values)) for u in sols)
    report.check("nonnegative", "lax_oleinik.nonnegativity", low >= -1e-6, low, -1e-6,
                 "min over the sweep of min_x u_lam")
    slack = _slack(grid, sg)
    drops = [float(np.max(a.values - b.values)) for a, b in zip(sols, sols[1:])]
    worst = max(drops, default=0.0)
    report.check("monotone_in_lambda", "lax_oleinik.monotone_in_lambda", worst <= slack, worst,
                 slack, "largest decrease of u_lam as lam decreases")
    diffs = [a.sup_dist(b) for a, b in zip(sols, sols[1:])]
    report.summary["sup_differences"] = diffs
    if len(diffs) >= 2:
        ref = diffs[1] if len(diffs) >= 3 else diffs[0]
        report.check("cauchy", "lax_oleinik.monotone_in_lambda", diffs[-1] < ref, diffs[-1], ref,
                     "last consecutive sup-difference below an earlier one")
    else:
        report.check("cauchy", "lax_oleinik.monotone_in_lambda", True, detail="vacuous")
    dev = max(check_vanishing_on_aubry(u, A)[1] for u in sols)
    report.check("vanishing_on_aubry", "aubry.uniqueness_set", dev <= 5e-3, dev, 5e-3,
                 f"max |u_lam| on A = {A.points if not A.degenerate else 'circle'}")
    report.table("u_lambda", {"x": grid.nodes, **{f"lam_{l:g}": u.values
                                                  for l, u in zip(lams, sols)}})
    return report


def run_vanishing_minus(cfg: ExperimentConfig) -> ExperimentReport:
    """Maximal forward solutions and the minimal solutions ``u_lam^- = -u_lam^+``."""
    spec = cfg.build_spec()
    lams = check_lambda_sweep(cfg.lambdas)
    grid = Grid(cfg.n)
    sg = semigroup_config(cfg)
    report = _new_report("vanishing_minus", cfg, spec)
    c = _critical_level(spec, cfg)
    margin = _require_constants(spec, c)
    report.summary.update(c=c, constants_margin=margin)

    backs, _ = _backward_sweep(spec, lams, c, grid, sg, report)
    plus, freps = [], []
    for lam, ul in zip(lams, backs):
        with report.timed(f"forward lam={lam:g}"):
            rep = forward_limit(spec, lam, c, sg, u_lambda=ul)
        plus.append(rep.solution)
        freps.append(rep)
    minus = [-u for u in plus]
    A = _aubry(spec, c, grid)
    report.summary["aubry"] = A.to_dict()
    for lam, u, ul, rep in zip(lams, plus, backs, freps):
        report.records.append(_record(
            lam, u, rep, above_backward=float(np.max(u.values - ul.values)),
            on_aubry=check_vanishing_on_aubry(u, A)[1], clamped_nodes=rep.clamped_nodes,
            fixed_point_defect=rep.fixed_point_defect, converged=rep.converged))

    conv = all(r.converged for r in freps)
    report.check("forward_converged", "lax_oleinik.forward_fixed_point", conv,
                 max(r.fixed_point_defect for r in freps), max(r.tol for r in freps),
                 "uncapped forward step moves each limit by at most tol")
    above = max(float(np.max(u.values - ul.values)) for u, ul in zip(plus, backs))
    report.check("below_backward", "lax_oleinik.maximal_forward_inequality", above <= 1e-6,
                 above, 1e-6, "max_x (u_lam^+ - u_lam)")
    dev = max(check_vanishing_on_aubry(u, A)[1] for u in plus)
    report.check("vanishing_on_aubry", "aubry.uniqueness_set", dev <= 5e-3, dev, 5e-3,
                 "max |u_lam^+| on A")
    diffs = [a.sup_dist(b) for a, b in zip(minus, minus[1:])]
    report.summary["sup_differences"] = diffs
    tol = max(r.tol for r in freps)
    report.check("cauchy", "lax_oleinik.cauchy_minus", _cauchy(diffs, tol),
                 diffs[-1] if diffs else None, detail="consecutive sup|u^- - u^-| decreasing")
    lips = [lipschitz_constant(u) for u in plus]
    bound = 1.05 * _lipschitz_bound(spec, c, lams, [u.sup_norm() for u in plus])
    report.check("equi_lipschitz", "lax_oleinik.equi_lipschitz", max(lips) <= bound, max(lips),
                 bound, "largest discrete Lipschitz constant against one a priori bound")
    report.table("u_plus", {"x": grid.nodes, **{f"lam_{l:g}": u.values
                                                for l, u in zip(lams, plus)}})
    report.table("u_minus", {"x": grid.nodes, **{f"lam_{l:g}": u.values
                                                 for l, u in zip(lams, minus)}})
    return report


def _periodic_parabola(grid: Grid) -> GridFunction:
    x = grid.nodes
    y = np.where(x < 0.5, x, x - 1.0)
    return GridFunction(grid, 0.5 * y * y)


def run_nonuniqueness_demo(cfg: ExperimentConfig) -> ExperimentReport:
    """Two solutions of ``-lam u + H(x, Du) = 0`` for ``H = p^2/2`` and the minimal one."""
    spec = zero()
    lam = check_lambda(cfg.lambdas[0])
    sg = semigroup_config(cfg)
    report = _new_report("nonuniqueness", cfg, spec)
    ns = [int(n) for n in cfg.option("refine_n", [256, 512, 1024])]

    # the parabola solves the equation at lam = 1 only
    r1 = residual(Grid(cfg.n).constant(0.0), spec, -lam, 0.0)
    z = float(np.max(np.abs(r1.values)))
    report.check("u1_residual_zero", "lax_oleinik.residual", z == 0.0, z, 0.0,
                 "residual of u1 = 0 is exactly zero")

    errs, at_quarter = [], []
    for n in ns:
        g = Grid(n)
        res = residual(_periodic_parabola(g), spec, -1.0, 0.0)
        off = torus_dist(g.nodes, 0.5) > 2.5 * g.h
        errs.append(float(np.max(np.abs(res.values[off]))))
        at_quarter.append(float(res(np.array([0.25]))[0]))
        report.records.append({"n": n, "offkink_residual": errs[-1],
                               "residual_at_quarter": at_quarter[-1]})
    order = float(np.polyfit(np.log([1.0 / n for n in ns]), np.log(errs), 1)[0])
    report.summary["residual_order"] = order
    report.check("u2_first_order", "lax_oleinik.residual", order >= 0.8 and errs[-1] < errs[0],
                 order, 0.8, "fitted order of the off-kink residual of u2 in h")

    grid = Grid(cfg.n)
    with report.timed("minimal solution"):
        um = minimal_solution_negative(spec, lam, 0.0, sg, grid=grid)
    s = um.sup_norm()
    report.check("minimal_solution", "lax_oleinik.minimal_solution", s <= 5e-3, s, 5e-3,
                 "sup-norm of the computed minimal solution")
    g = Grid(ns[-1])
    report.table("solutions", {"x": g.nodes, "u1": np.zeros(g.n),
                               "u2": _periodic_parabola(g).values,
                               "u2_residual": residual(_periodic_parabola(g), spec, -1.0,
                                                       0.0).values})
    return report


def _bumps(grid: Grid, rng, count, amplitude, sigma, lo, hi):
    x = grid.nodes
    out = []
    for center in rng.uniform(lo, hi, size=count):
        d = torus_dist(x, center)
        out.append(amplitude * np.exp(-0.5 * (d / sigma) ** 2))
    return out


def run_pendulum_uniqueness(cfg: ExperimentConfig) -> ExperimentReport:
    """Forward limits from perturbed starts agree and match the stable manifold near 0."""
    spec = cfg.build_spec()
    lam = check_lambda(cfg.lambdas[0])
    grid = Grid(cfg.n)
    sg = semigroup_config(cfg)
    report = _new_report("pendulum_uniqueness", cfg, spec)
    c = _critical_level(spec, cfg)
    rng = np.random.default_rng(cfg.seed)
    n_bumps = int(cfg.option("n_starts", 5))
    amp = float(cfg.option("amplitude", 0.1))
    delta = float(cfg.option("delta", 0.05))

    with report.timed("backward"):
        ul = solve_discounted(spec, lam, c, sg, grid=grid).solution
    with report.timed("forward"):
        ref = forward_limit(spec, lam, c, sg, u_lambda=ul)
    u = ref.solution
    bumps = _bumps(grid, rng, n_bumps, amp, float(cfg.option("sigma", 0.05)), 0.15, 0.85)
    gaps = []
    for k, bump in enumerate(bumps):
        with report.timed("forward"):
            rep = forward_limit(spec, lam, c, sg, u_lambda=ul,
                                u_start=GridFunction(grid, ul.values + bump))
        gaps.append(u.sup_dist(rep.solution))
        report.records.append({"start": k, "sup_gap": gaps[-1], "iterations": rep.iterations})
    slack = _slack(grid, sg)
    report.check("multi_start_agreement", "lax_oleinik.forward_uniqueness",
                 max(gaps, default=0.0) <= slack, max(gaps, default=0.0), slack,
                 f"{n_bumps} perturbed starts against the unperturbed limit")

    q0 = PhasePoint(0.0, 0.0)
    lin = linearize(spec, lam, q0)
    patch = stable_manifold_local(spec, lam, lin, delta=delta)
    xs = grid.nodes
    near = torus_dist(xs, q0.x) <= delta
    lift = np.where(xs[near] >= 0.5, xs[near] - 1.0, xs[near])
    grad = grad_central(u)
    gap = float(np.max(np.abs(grad[near] - patch(lift))))
    report.check("gradient_on_manifold", "char_flow.gradient_graph_match", gap <= 0.05, gap, 0.05,
                 f"max |Du^+ - h| on [-{delta:g}, {delta:g}]")
    v0, g0 = float(u.values[0]), float(grad[0])
    report.check("value_at_x0", "char_flow.gradient_graph_match", abs(v0) <= 5e-3, abs(v0), 5e-3,
                 "u^+(x0)")
    report.check("gradient_at_x0", "char_flow.gradient_graph_match", abs(g0) <= 5e-3, abs(g0),
                 5e-3, "central difference of u^+ at x0")

    with report.timed("mather"):
        pm = optimal_momentum(u, spec, lam, c, sg)
        me = mather_set_estimate(spec, lam, u, ul, momentum=pm, radius=delta)
    report.summary["mather"] = me.to_dict()
    only_x0 = len(me.points) == 1 and phase_dist(me.points[0], q0.x, q0.p) < 1e-8
    report.check("mather_set", "char_flow.omega_limit_reaches_mather", only_x0,
                 detail=f"estimated support {[q.as_tuple() for q in me.points]}")
    frac = me.reached_fraction()
    report.check("omega_limit", "char_flow.omega_limit_reaches_mather", frac == 1.0, frac, 1.0,
                 f"fraction of calibrated orbits entering the {delta:g}-ball of the support")

    # recorded only: how far the uniqueness persists at larger discounts
    larger = []
    for big in cfg.option("record_lambdas", [0.5]):
        big = check_lambda(big)
        with report.timed("recorded lambdas"):
            ulb = solve_discounted(spec, big, c, sg, grid=grid).solution
            a = forward_limit(spec, big, c, sg, u_lambda=ulb).solution
            gb = [a.sup_dist(forward_limit(spec, big, c, sg, u_lambda=ulb,
                                           u_start=GridFunction(grid, ulb.values + b)).solution)
                  for b in bumps[:2]]
        larger.append({"lambda": big, "sup_gap": max(gb, default=0.0)})
    report.summary["recorded_larger_lambda"] = larger

    report.table("forward_limit", {"x": xs, "u_plus": u.values, "u_lambda": ul.values,
                                   "Du_plus": grad, "scheme_momentum": pm.values})
    report.table("stable_manifold", {"x": patch.x, "h": patch.h})
    return report


def run_remark_counterexample(cfg: ExperimentConfig) -> ExperimentReport:
    """A smooth solution whose contact set holds two rest points."""
    spec = cfg.build_spec()
    lam = check_lambda(cfg.lambdas[0])
    report = _new_report("remark", cfg, spec)
    w_field = remark_w(float(spec.param("amplitude", 0.1)))
    c = float(cfg.option("c", 0.0))

    ns = sorted({int(n) for n in cfg.option("refine_n", [1024, 2048])} | {cfg.n})
    for n in ns:
        g = Grid(n)
        r = float(np.max(np.abs(residual(g.sample(w_field), spec, lam, c).values)))
        report.records.append({"n": n, "residual_sup": r})
    r_main = report.records[-1]["residual_sup"] if ns[-1] == cfg.n else next(
        rec["residual_sup"] for rec in report.records if rec["n"] == cfg.n)
    report.check("w_residual", "lax_oleinik.residual", r_main <= 1e-4, r_main, 1e-4,
                 f"sup of the scheme residual of w at n = {cfg.n}")

    fps = find_fixed_points(spec, lam)
    report.summary["fixed_points"] = [q.as_tuple() for q in fps]
    for target in (0.0, 0.5):
        dist = min((torus_dist(q.x, target) + abs(q.p) for q in fps), default=math.inf)
        field_norm = math.hypot(*vector_field(spec, lam, PhasePoint(target, 0.0)))
        ok = dist <= 1e-10 and field_norm < 1e-10
        report.check(f"fixed_point_{target:g}", "char_flow.fixed_point_residual", ok, dist, 1e-10,
                     f"distance of the nearest detected rest point; |field| = {field_norm:.2e}")
        meas = empirical_measure(spec, lam, PhasePoint(target, 0.0), T=10.0, transient=0.0)
        mass = meas.mass_within(PhasePoint(target, 0.0), 1e-3)
        report.check(f"dirac_{target:g}", "char_flow.empirical_measure", mass == 1.0, mass, 1.0,
                     "occupation mass of the static orbit near its start")
    g = Grid(cfg.n)
    report.table("w", {"x": g.nodes, "w": g.sample(w_field).values,
                       "residual": residual(g.sample(w_field), spec, lam, c).values})
    return report


def run_flow_portrait(cfg: ExperimentConfig) -> ExperimentReport:
    """Rest points, linearizations, trajectories, stable manifolds and an empirical measure."""
    spec = cfg.build_spec()
    lam = check_lambda(cfg.lambdas[0], allow_zero=True)
    report = _new_report("flow_portrait", cfg, spec)
    dt_flow = float(cfg.option("dt_flow", 1e-3))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateFixedPoints)
        fps = find_fixed_points(spec, lam)
    report.summary["degenerate_fixed_points"] = fps.degenerate
    if not fps.degenerate:
        report.summary["fixed_points"] = [q.as_tuple() for q in fps]
        worst = max((math.hypot(*vector_field(spec, lam, q)) for q in fps), default=0.0)
        report.check("fixed_point_residual", "char_flow.fixed_point_residual", worst < 1e-10,
                     worst, 1e-10, f"{len(fps)} rest points")
        for q in fps:
            lin = linearize(spec, lam, q)
            rec = lin.to_dict()
            if spec.b.is_zero:
                d2 = float(spec.U.d2(q.x))
                disc = complex(lam * lam - 4.0 * d2) ** 0.5
                oracle = sorted([(-lam + disc) / 2, (-lam - disc) / 2], key=lambda m: -m.real)
                err = max(abs(a - b) for a, b in zip(sorted(lin.eigenvalues, key=lambda m: -m.real),
                                                     oracle))
                rec["oracle_error"] = err
                report.check(f"eigenvalues_x={q.x:.6g}", "char_flow.eigenvalue_oracle",
                             err <= 1e-8, err, 1e-8, lin.kind)
            report.records.append(rec)
            if lin.saddle and lam > 0:
                _manifold_checks(report, spec, lam, lin, dt_flow)

    fan = []
    starts = cfg.option("fan", None) or [[x, p] for x in (0.1, 0.3, 0.45) for p in (-1.0, 1.0)]
    T_fan = float(cfg.option("fan_T", 10.0))
    rises = []
    for j, (x, p) in enumerate(starts):
        traj = integrate(spec, lam, PhasePoint(x, p), T_fan, dt_flow)
        keep = slice(None, None, max(1, int(round(0.01 / dt_flow))))
        fan.append((j, traj.t[keep], traj.x[keep], traj.p[keep]))
        if spec.reversible:
            prof = dissipation_profile(traj, spec, lam)[:, 1]
            rises.append(float(np.max(np.diff(prof))) if lam > 0
                         else float(np.max(np.abs(prof - prof[0]))))
    if spec.reversible:
        name, inv = ("dissipation", "char_flow.reversible_dissipation") if lam > 0 else \
            ("energy_conservation", "char_flow.energy_conservation")
        report.check(name, inv, max(rises) <= 1e-8, max(rises), 1e-8,
                     "largest rise of H_check along the fan" if lam > 0
                     else "largest drift of H_check along the fan")
    report.table("trajectories", {
        "x": np.concatenate([f[2] for f in fan]),
        "p": np.concatenate([f[3] for f in fan]),
        "t": np.concatenate([f[1] for f in fan]),
        "orbit": np.concatenate([np.full(f[1].size, f[0]) for f in fan]),
    }, style="dots", ycols=["p"], lam=lam)

    mx, mp = cfg.option("measure_start", [0.3, 0.0])
    T_meas = float(cfg.option("measure_T", 200.0))
    with report.timed("empirical measure"):
        meas = empirical_measure(spec, lam, PhasePoint(mx, mp), T_meas, dt_flow)
    report.summary["empirical_measure"] = meas.metadata()
    if not fps.degenerate and fps:
        report.summary["empirical_mass_near_rest_points"] = float(sum(
            meas.mass_within(q, 0.05) for q in fps))
    report.histograms["empirical_measure"] = (meas.hist, meas.metadata())
    return report


def _manifold_checks(report, spec, lam, lin, dt_flow):
    q = lin.fixed_point
    patch = stable_manifold_local(spec, lam, lin, dt_flow=dt_flow)
    mu_s = min(m.real for m in lin.eigenvalues)
    horizon = 20.0 / abs(mu_s)
    pick = np.linspace(0, patch.x.size - 1, 9).round().astype(int)
    worst = 0.0
    for i in pick:
        end = integrate(spec, lam, PhasePoint(patch.x[i], patch.h[i]), horizon, patch.dt_flow).end
        worst = max(worst, float(phase_dist(q, end.x, end.p)))
    report.check(f"stable_manifold_x={q.x:.6g}", "char_flow.stable_manifold_consistency",
                 worst < 1e-6, worst, 1e-6, f"distance to the rest point after t = {horizon:.4g}")
    report.table(f"stable_manifold_{q.x:.4g}", {"x": patch.x, "h": patch.h},
                 x0=q.x, eps=patch.eps, dt_flow=patch.dt_flow)


# -- registry -----------------------------------------------------------------------------

EXPERIMENTS = {
    "vanishing_plus": run_vanishing_plus,
    "vanishing_minus": run_vanishing_minus,
    "nonuniqueness": run_nonuniqueness_demo,
    "pendulum_uniqueness": run_pendulum_uniqueness,
    "remark": run_remark_counterexample,
    "flow_portrait": run_flow_portrait,
}

ALIASES = {
    "plus": "vanishing_plus",
    "minus": "vanishing_minus",
    "nonuniqueness_demo": "nonuniqueness",
    "uniqueness": "pendulum_uniqueness",
    "remark_counterexample": "remark",
    "portrait": "flow_portrait",
}

_SWEEP = [0.5, 0.2, 0.1, 0.05, 0.02]

_DEFAULTS = {
    "vanishing_plus": dict(spec={"family": "mechanical"}, lambdas=_SWEEP),
    "vanishing_minus": dict(spec={"family": "mechanical"}, lambdas=_SWEEP),
    "nonuniqueness": dict(spec={"family": "mechanical", "potential": "zero"}, lambdas=[1.0]),
    "pendulum_uniqueness": dict(spec={"family": "mechanical"}, lambdas=[0.1]),
    "remark": dict(spec={"family": "remark"}, lambdas=[1.0], n=4096),
    "flow_portrait": dict(spec={"family": "mechanical"}, lambdas=[0.1]),
}


def canonical_name(name: str) -> str:
    key = name.replace("-", "_")
    key = ALIASES.get(key, key)
    if key not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
    return key


def default_config(name: str, **overrides) -> ExperimentConfig:
    key = canonical_name(name)
    kw = {"experiment": key, **_DEFAULTS[key], **overrides}
    return ExperimentConfig(**kw)


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Dispatch on ``cfg.experiment``.

    Solver failures (no convergence, blow-up, ...) become a failed verdict
    carrying the diagnostics instead of an exception; a failed precondition
    still raises.
    """
    key = canonical_name(cfg.experiment)
    t0 = time.perf_counter()
    try:
        report = EXPERIMENTS[key](cfg)
    except PreconditionError:
        raise
    except WeakKAMError as exc:
        report = _new_report(key, cfg, cfg.build_spec())
        diag = getattr(exc, "report", None)
        if diag is not None:
            report.summary["diagnostics"] = diag.to_dict()
        report.check("completed", f"errors.{type(exc).__name__}", False, detail=str(exc))
    report.timings["total"] = time.perf_counter() - t0
    return report
