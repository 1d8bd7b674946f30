"""scikit-learn style wrappers around the solvers.

``fit(spec)`` solves for the spec and stores fitted attributes with a
trailing underscore; ``predict(x)`` interpolates the solution at positions.

>>> from weakkam import pendulum
>>> est = DiscountedSolver(lam=0.1, n=256).fit(pendulum())
>>> round(float(est.predict([0.0])[0]), 6)
0.0
"""

from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .critical import critical_value_ergodic, critical_value_reversible
from .model import grad_central, interpolate, GridFunction
from .semigroup import SemigroupConfig, forward_limit, residual, solve_discounted
from .validation import check_grid, check_lambda, check_points, check_spec

__all__ = ["DiscountedSolver", "ForwardWeakKAMSolver", "CriticalValueEstimator"]


class CriticalValueEstimator(BaseEstimator):
    """``c(H)`` by the closed form (``method="reversible"``), the discounted
    limit (``"ergodic"``), or whichever applies (``"auto"``)."""

    def __init__(self, method="auto", lambdas=(0.1, 0.01, 0.001), n=1024, trace_tol=1e-3):
        self.method = method
        self.lambdas = lambdas
        self.n = n
        self.trace_tol = trace_tol

    def fit(self, spec, y=None):
        spec = check_spec(spec)
        method = self.method
        if method == "auto":
            method = "reversible" if spec.reversible else "ergodic"
        if method == "reversible":
            self.c_ = critical_value_reversible(spec)
            self.report_ = None
        elif method == "ergodic":
            self.report_ = critical_value_ergodic(spec, self.lambdas, grid=check_grid(self.n),
                                                  trace_tol=self.trace_tol)
            self.c_ = self.report_.c
        else:
            raise ValueError(f"unknown method {self.method!r}")
        self.method_ = method
        return self


class DiscountedSolver(BaseEstimator):
    """Solution ``u_lam`` of ``lam u + H_check(x, Du) = c``.

    ``c=None`` uses the critical value of the fitted spec.
    """

    def __init__(self, lam=0.1, c=None, n=1024, dt=None, v_max=None, tol_fix=None,
                 max_steps=1_000_000):
        self.lam = lam
        self.c = c
        self.n = n
        self.dt = dt
        self.v_max = v_max
        self.tol_fix = tol_fix
        self.max_steps = max_steps

    def _config(self, **extra):
        return SemigroupConfig(dt=self.dt, v_max=self.v_max, tol_fix=self.tol_fix,
                               max_steps=self.max_steps, **extra)

    def _level(self, spec):
        if self.c is not None:
            return float(self.c)
        return CriticalValueEstimator(n=self.n).fit(spec).c_

    def fit(self, spec, y=None):
        spec = check_spec(spec)
        lam = check_lambda(self.lam)
        self.spec_ = spec
        self.c_ = self._level(spec)
        self.report_ = solve_discounted(spec, lam, self.c_, self._config(),
                                        grid=check_grid(self.n))
        self.solution_ = self.report_.solution
        return self

    def predict(self, X):
        check_is_fitted(self, "solution_")
        return interpolate(self.solution_, check_points(X))

    def gradient(self, X):
        """Central differences at the nodes, interpolated to ``X``."""
        check_is_fitted(self, "solution_")
        g = GridFunction(self.solution_.grid, grad_central(self.solution_))
        return interpolate(g, check_points(X))

    def residual(self):
        check_is_fitted(self, "solution_")
        return residual(self.solution_, self.spec_, float(self.lam), self.c_)


class ForwardWeakKAMSolver(DiscountedSolver):
    """Maximal forward weak KAM solution ``u_lam^+``; ``backward_`` keeps ``u_lam``."""

    def __init__(self, lam=0.1, c=None, n=1024, dt=None, v_max=None, tol_fix=None,
                 max_steps=1_000_000, stabilize_forward=True):
        super().__init__(lam=lam, c=c, n=n, dt=dt, v_max=v_max, tol_fix=tol_fix,
                         max_steps=max_steps)
        self.stabilize_forward = stabilize_forward

    def fit(self, spec, y=None):
        spec = check_spec(spec)
        lam = check_lambda(self.lam)
        self.spec_ = spec
        self.c_ = self._level(spec)
        cfg = self._config(stabilize_forward=self.stabilize_forward)
        self.backward_ = solve_discounted(spec, lam, self.c_, cfg, grid=check_grid(self.n))
        self.report_ = forward_limit(spec, lam, self.c_, cfg, u_lambda=self.backward_)
        self.solution_ = self.report_.solution
        return self

    def minimal_negative(self):
        """``u_lam^- = -u_lam^+``."""
        check_is_fitted(self, "solution_")
        return -self.solution_
