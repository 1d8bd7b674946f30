"""Projected Aubry sets: closed form for reversible Hamiltonians and a
loop-cost oracle that works for any spec."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .critical import golden_max
from .exceptions import NoConvergence, NotReversible
from .model import Grid, GridFunction, HamiltonianSpec
from .semigroup import SemigroupConfig, SolveReport, _ErrorEstimate, _Stepper

log = logging.getLogger(__name__)

__all__ = [
    "AubryEstimate",
    "aubry_reversible",
    "peierls_oracle",
    "check_vanishing_on_aubry",
    "critical_fixed_point",
    "cluster_nodes",
]

_BIG = 1e30


@dataclass
class AubryEstimate:
    """Isolated points of a projected Aubry set.

    ``candidates`` are the raw grid nodes that passed the test; ``points`` has
    one representative per cluster.  ``degenerate`` marks a set covering the
    whole circle, in which case ``points`` lists every node.
    """

    points: list
    method: str
    tolerance: float
    candidates: list = field(default_factory=list)
    degenerate: bool = False
    loop_costs: np.ndarray | None = None

    def to_dict(self) -> dict:
        d = {
            "points": [] if self.degenerate else [float(p) for p in self.points],
            "method": self.method,
            "tolerance": self.tolerance,
            "n_candidates": len(self.candidates),
            "degenerate": self.degenerate,
        }
        if not self.degenerate:
            d["candidates"] = [float(p) for p in self.candidates]
        return d


def cluster_nodes(idx, n: int, gap: int = 3):
    """Split sorted node indices into runs on the circle; neighbours within ``gap`` cells join."""
    idx = sorted(int(i) % n for i in idx)
    if not idx:
        return []
    runs = [[idx[0]]]
    for i in idx[1:]:
        if i - runs[-1][-1] <= gap:
            runs[-1].append(i)
        else:
            runs.append([i])
    if len(runs) > 1 and runs[0][0] + n - runs[-1][-1] <= gap:
        runs[0] = runs.pop() + runs[0]
    return runs


def _covers_circle(runs, n, gap=3):
    return len(runs) == 1 and len(runs[0]) > n - gap


def aubry_reversible(spec: HamiltonianSpec, c: float, tol: float = 1e-6, *,
                     grid: Grid | None = None) -> AubryEstimate:
    """``{y : H(y, 0) = c}``, i.e. the maximum set of ``U`` when ``c = max U``.

    Nodes with ``c - U(x) <= tol`` are clustered; each cluster is replaced by
    the local maximizer of ``U`` near it (golden section, 50 iterations).
    """
    if not spec.reversible:
        raise NotReversible(f"{spec.name}: b is not identically zero")
    grid = grid or Grid(1024)
    x = grid.nodes
    gap = c - spec.U(x)
    idx = np.flatnonzero(gap <= tol)
    runs = cluster_nodes(idx, grid.n)
    cand = [float(x[i]) for i in idx]
    if _covers_circle(runs, grid.n):
        return AubryEstimate(list(x), "reversible_formula", tol, cand, True)
    pts = []
    for run in runs:
        # unwrap the run so the bracket is contiguous
        lo = run[0] * grid.h
        hi = lo + ((run[-1] - run[0]) % grid.n) * grid.h
        y, _ = golden_max(spec.U, lo - grid.h, hi + grid.h)
        pts.append(float(np.mod(y, 1.0)))
    return AubryEstimate(sorted(pts), "reversible_formula", tol, cand, False)


def peierls_oracle(spec: HamiltonianSpec, c: float, cfg: SemigroupConfig | None = None, *,
                   grid: Grid | None = None, T_max: int = 8,
                   tol: float | None = None) -> AubryEstimate:
    """Aubry candidates from minimal closed-loop costs.

    For each node ``y`` the undiscounted backward step is iterated from the
    indicator ``0`` at ``y`` (``+inf`` elsewhere), which gives the cheapest
    discrete path cost from ``y`` to every node.  The loop cost of ``y`` is its
    own value minimized over whole periods ``T = 1..T_max``.  Nodes with loop
    cost at most ``tol`` (default ``20 (h + dt)``) are candidates; the
    representative of each cluster is its cheapest node.

    When ``c >= max U`` the running cost ``L_check + c`` is nonnegative, so
    nodes out of reach of every value ``<= tol`` are skipped exactly.  Defaults
    favour speed: a 256-node grid and ``dt = h``.
    """
    grid = grid or Grid(256)
    cfg = cfg or SemigroupConfig()
    st = _Stepper(spec, grid, 0.0, c, cfg)
    per_unit = int(round(1.0 / st.dt))
    if abs(per_unit * st.dt - 1.0) > 1e-9:
        raise ValueError("dt must divide the unit period")
    if tol is None:
        tol = 20.0 * (grid.h + st.dt)
    n = grid.n
    V = np.full((n, n), _BIG)
    np.fill_diagonal(V, 0.0)
    rows = np.arange(n)
    loop = np.full(n, np.inf)
    prune = tol if c >= float(np.max(st.U)) else None
    for k in range(1, T_max * per_unit + 1):
        out = np.empty_like(V)
        st.backward_rows(V, out, np.empty_like(V), prune, _BIG)
        V = out
        if k % per_unit == 0:
            np.minimum.at(loop, rows, V[np.arange(rows.size), rows])
            if prune is not None:
                # with a nonnegative running cost a zero loop is final and a row
                # with nothing under the threshold cannot recover
                keep = (loop[rows] > 0.0) & (V.min(axis=1) <= tol)
                rows, V = rows[keep], np.ascontiguousarray(V[keep])
                if rows.size == 0:
                    break
    idx = np.flatnonzero(loop <= tol)
    cand = [float(grid.nodes[i]) for i in idx]
    runs = cluster_nodes(idx, n)
    if _covers_circle(runs, n):
        return AubryEstimate(list(grid.nodes), "peierls_oracle", tol, cand, True, loop)
    pts = sorted(float(grid.nodes[min(run, key=lambda i: loop[i])]) for run in runs)
    return AubryEstimate(pts, "peierls_oracle", tol, cand, False, loop)


def check_vanishing_on_aubry(u: GridFunction, A: AubryEstimate, tol: float = 5e-3):
    """``(max |u(y)| <= tol, max |u(y)|)`` over the points of ``A``."""
    if not A.points:
        return True, 0.0
    dev = float(np.max(np.abs(u(np.asarray(A.points)))))
    return dev <= tol, dev


def critical_fixed_point(spec: HamiltonianSpec, c: float, u_init: GridFunction,
                         cfg: SemigroupConfig | None = None, tol: float = 1e-9) -> SolveReport:
    """Iterate the undiscounted backward step from ``u_init`` until it stalls.

    At the critical level the iterates converge to a solution of
    ``H_check(x, Du) = c`` selected by the values of ``u_init`` on the Aubry set.
    """
    cfg = cfg or SemigroupConfig()
    grid = u_init.grid
    st = _Stepper(spec, grid, 0.0, c, cfg)
    u = np.array(u_init.values, dtype=float)
    out = np.empty(grid.n)
    err = _ErrorEstimate()
    k = 0
    while True:
        st.backward(u, out)
        k += 1
        upd = float(np.max(np.abs(out - u)))
        u, out = out, u
        est = err(upd)
        if (upd <= tol and est <= tol) or k >= cfg.max_steps:
            break
    rep = SolveReport(GridFunction(grid, u), k, upd, float("nan"), est <= tol, lam=0.0, c=c,
                      kind="critical", tol=tol)
    if not rep.converged:
        raise NoConvergence(f"critical iteration stalled short of {tol:g} after {k} steps", rep)
    return rep
