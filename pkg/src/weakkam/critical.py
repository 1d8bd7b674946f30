"""Critical value ``c(H)`` and the constants-are-subsolutions test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import NoConvergence, NotReversible
from .model import Grid, HamiltonianSpec, eval_H
from .semigroup import SemigroupConfig, solve_discounted

__all__ = [
    "CriticalReport",
    "critical_value_reversible",
    "critical_value_ergodic",
    "check_constant_subsolution",
    "golden_max",
]

_GOLD = 0.5 * (math.sqrt(5.0) - 1.0)


@dataclass
class CriticalReport:
    c: float
    method: str
    lambda_trace: list = field(default_factory=list)
    converged: bool = True
    x_ref: float = 0.0

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "method": self.method,
            "lambda_trace": [list(map(float, pair)) for pair in self.lambda_trace],
            "converged": self.converged,
            "x_ref": self.x_ref,
        }


def golden_max(f, a: float, b: float, iters: int = 50):
    """Golden-section search for a local maximum of ``f`` on ``[a, b]``."""
    c1 = b - _GOLD * (b - a)
    c2 = a + _GOLD * (b - a)
    f1, f2 = f(c1), f(c2)
    for _ in range(iters):
        if f1 >= f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - _GOLD * (b - a)
            f1 = f(c1)
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + _GOLD * (b - a)
            f2 = f(c2)
    return (c1, f1) if f1 >= f2 else (c2, f2)


def _require_reversible(spec):
    if not spec.reversible:
        raise NotReversible(f"{spec.name}: b is not identically zero")


def critical_value_reversible(spec: HamiltonianSpec, n_sample: int = 4096,
                              iters: int = 50) -> float:
    """``c(H) = max_x H(x, 0) = max U`` for a reversible Hamiltonian."""
    _require_reversible(spec)
    x = np.arange(n_sample) / n_sample
    vals = spec.U(x)
    i = int(np.argmax(vals))
    h = 1.0 / n_sample
    _, best = golden_max(spec.U, x[i] - h, x[i] + h, iters)
    return float(max(best, vals[i]))


def critical_value_ergodic(spec: HamiltonianSpec, lambdas=(0.1, 0.01, 0.001),
                           cfg: SemigroupConfig | None = None, *, grid: Grid | None = None,
                           trace_tol: float = 1e-3, x_ref: int = 0) -> CriticalReport:
    """Estimate ``c(H)`` as ``lim -lam w_lam(x_ref)`` where ``lam w + H_check(x, Dw) = 0``.

    Each solve is warm-started from the previous one (the solver discards the
    constant part of its initial guess, and the shape changes little with
    ``lam``).  The reported value is the linear extrapolation to ``lam = 0``
    of the last two trace points; the trace counts as stable once those two differ
    by less than ``trace_tol``.
    """
    lams = [float(v) for v in lambdas]
    if not lams or any(not (0 < v <= 1) for v in lams):
        raise ValueError("lambdas must lie in (0, 1]")
    if any(b >= a for a, b in zip(lams, lams[1:])):
        raise ValueError("lambdas must be strictly decreasing")
    cfg = cfg or SemigroupConfig()
    grid = grid or Grid(1024)
    # the velocity box is sized for the eventual level c, not for 0
    if cfg.v_max is None:
        cfg = cfg.with_(v_max=_ergodic_v_max(spec))

    trace = []
    w = None
    for lam in lams:
        w = solve_discounted(spec, lam, 0.0, cfg, u_init=w, grid=grid).solution
        trace.append((lam, -lam * float(w.values[x_ref])))

    if len(trace) == 1:
        return CriticalReport(trace[0][1], "ergodic_limit", trace, False, float(grid.nodes[x_ref]))
    (l0, e0), (l1, e1) = trace[-2], trace[-1]
    c = e1 + (e1 - e0) * l1 / (l0 - l1)
    ok = abs(e1 - e0) < trace_tol
    rep = CriticalReport(float(c), "ergodic_limit", trace, ok, float(grid.nodes[x_ref]))
    if not ok:
        raise NoConvergence(f"lambda trace not stable: |{e1:.6g} - {e0:.6g}| >= {trace_tol:g}",
                            rep)
    return rep


def _ergodic_v_max(spec, n_probe=2048):
    x = np.arange(n_probe) / n_probe
    bmax = float(np.max(np.abs(spec.b(x))))
    U = spec.U(x)
    # c(H) <= max_x H(x, 0) = max U
    osc = float(np.max(U) - np.min(U))
    return 2.0 * (1.0 + bmax + math.sqrt(2.0 * (osc + 1.0)))


def check_constant_subsolution(spec: HamiltonianSpec, c: float, n: int = 4096,
                               tol: float = 1e-12):
    """``(ok, margin)`` with ``margin = min_x (c - H(x, 0))`` over a dense grid."""
    x = np.arange(n) / n
    margin = float(np.min(c - eval_H(spec, x, 0.0)))
    return margin >= -tol, margin
