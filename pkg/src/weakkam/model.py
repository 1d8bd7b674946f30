"""Flat circle geometry, the quadratic Hamiltonian family and grid functions.

Every Hamiltonian handled here has the form

    H(x, p) = p**2 / 2 + b(x) p + U(x),       x in T = R / Z,

with b and U trigonometric polynomials.  The conjugate Hamiltonian is
``H_check(x, p) = H(x, -p)`` and its Lagrangian is
``L_check(x, v) = (v + b(x))**2 / 2 - U(x)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * np.pi

__all__ = [
    "wrap",
    "torus_dist",
    "lift_near",
    "ScalarField",
    "HamiltonianSpec",
    "pendulum",
    "mane",
    "remark",
    "remark_w",
    "zero",
    "mechanical",
    "custom",
    "eval_H",
    "eval_H_check",
    "eval_L",
    "eval_L_check",
    "dH_check_dp",
    "dH_check_dx",
    "Grid",
    "GridFunction",
    "interpolate",
    "grad_central",
    "one_sided_gradients",
    "lipschitz_constant",
]


def wrap(x):
    """Map reals to the fundamental domain [0, 1)."""
    r = np.mod(x, 1.0)
    # np.mod(-1e-18, 1.0) == 1.0 in floating point
    if np.ndim(r) == 0:
        return 0.0 if r >= 1.0 else float(r)
    r = np.asarray(r, dtype=float)
    r[r >= 1.0] = 0.0
    return r


def torus_dist(x, y):
    """Geodesic distance on the unit circle, always in [0, 1/2]."""
    d = np.abs(np.mod(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), 1.0))
    d = np.minimum(d, 1.0 - d)
    return float(d) if np.ndim(d) == 0 else d


def lift_near(x, x0):
    """Representative of ``x`` in [x0 - 1/2, x0 + 1/2)."""
    return x0 + np.mod(np.asarray(x, dtype=float) - x0 + 0.5, 1.0) - 0.5


@dataclass(frozen=True)
class ScalarField:
    """A 1-periodic trigonometric polynomial and its derivatives.

    ``f(x) = sum_k cos_coef[k] cos(2 pi k x) + sin_coef[k] sin(2 pi k x)``;
    ``sin_coef[0]`` is ignored.
    """

    cos_coef: tuple = (0.0,)
    sin_coef: tuple = (0.0,)
    tag: str = "custom"

    def __post_init__(self):
        c = tuple(float(a) for a in self.cos_coef)
        s = tuple(float(a) for a in self.sin_coef)
        d = max(len(c), len(s), 1)
        c = c + (0.0,) * (d - len(c))
        s = s + (0.0,) * (d - len(s))
        object.__setattr__(self, "cos_coef", c)
        object.__setattr__(self, "sin_coef", (0.0,) + s[1:])

    @property
    def degree(self) -> int:
        return len(self.cos_coef) - 1

    @property
    def is_zero(self) -> bool:
        return not any(self.cos_coef) and not any(self.sin_coef)

    def _eval(self, x, order):
        x = np.asarray(x, dtype=float)
        k = np.arange(self.degree + 1)
        w = TWO_PI * k
        theta = np.multiply.outer(x, w)
        a = np.asarray(self.cos_coef)
        b = np.asarray(self.sin_coef)
        # d/dx of (a cos + b sin) rotates the coefficient pair by a quarter turn
        for _ in range(order):
            a, b = b * w, -a * w
        out = np.cos(theta) @ a + np.sin(theta) @ b
        return float(out) if out.ndim == 0 else out

    def __call__(self, x):
        return self._eval(x, 0)

    def d1(self, x):
        return self._eval(x, 1)

    def d2(self, x):
        return self._eval(x, 2)

    def d3(self, x):
        return self._eval(x, 3)

    def max_abs(self) -> float:
        """Crude sup bound: sum of absolute coefficients."""
        return float(np.sum(np.abs(self.cos_coef)) + np.sum(np.abs(self.sin_coef)))

    def coefficient_arrays(self):
        return np.asarray(self.cos_coef), np.asarray(self.sin_coef)


def _field(cos, sin=(0.0,), tag="custom"):
    return ScalarField(tuple(cos), tuple(sin), tag)


@dataclass(frozen=True)
class HamiltonianSpec:
    """``H(x, p) = p**2/2 + b(x) p + U(x)`` on the circle.

    Strict convexity and superlinearity in ``p`` hold automatically for this
    family.  ``family`` records how the spec was built (used by the config
    serializer); ``params`` keeps family-level parameters such as the Remark
    amplitude.
    """

    b: ScalarField = field(default_factory=lambda: _field((0.0,), tag="zero"))
    U: ScalarField = field(default_factory=lambda: _field((0.0,), tag="zero"))
    family: str = "custom"
    params: tuple = ()

    @property
    def reversible(self) -> bool:
        return self.b.is_zero

    @property
    def name(self) -> str:
        if self.family == "mechanical":
            return f"mechanical[{self.U.tag}]"
        if self.family == "mane":
            return f"mane[{self.b.tag}]"
        return self.family

    def param(self, key, default=None):
        return dict(self.params).get(key, default)


# -- built-in fields and specs ------------------------------------------------

def zero_field() -> ScalarField:
    return _field((0.0,), tag="zero")


def pendulum_cos(amplitude: float = 1.0) -> ScalarField:
    return _field((0.0, amplitude), tag="pendulum_cos")


def remark_w(amplitude: float = 0.1) -> ScalarField:
    """``w(x) = A (1 - cos 2 pi x)``: unique minimum at 0, second critical point at 1/2."""
    return _field((amplitude, -amplitude), tag="remark_w")


def remark_potential(amplitude: float = 0.1) -> ScalarField:
    """``U = -w - (w')**2 / 2`` for ``w = remark_w(amplitude)``, expanded exactly.

    (w')**2 / 2 = 2 pi**2 A**2 sin**2(2 pi x) = pi**2 A**2 (1 - cos 4 pi x).
    """
    A = float(amplitude)
    q = np.pi ** 2 * A ** 2
    return _field((-A - q, A, q), tag="remark_U")


def zero() -> HamiltonianSpec:
    return HamiltonianSpec(zero_field(), zero_field(), "mechanical", (("potential", "zero"),))


def pendulum(amplitude: float = 1.0) -> HamiltonianSpec:
    """Mechanical Hamiltonian with ``U = amplitude * cos(2 pi x)``."""
    return HamiltonianSpec(zero_field(), pendulum_cos(amplitude), "mechanical")


def mechanical(U: ScalarField) -> HamiltonianSpec:
    return HamiltonianSpec(zero_field(), U, "mechanical")


def mane(X: ScalarField | None = None) -> HamiltonianSpec:
    """Mañé Hamiltonian ``p**2/2 + X(x) p``; default ``X = sin(2 pi x)``."""
    if X is None:
        X = _field((0.0, 0.0), (0.0, 1.0), tag="sin")
    return HamiltonianSpec(X, zero_field(), "mane")


def remark(amplitude: float = 0.1) -> HamiltonianSpec:
    return HamiltonianSpec(
        zero_field(), remark_potential(amplitude), "remark", (("amplitude", float(amplitude)),)
    )


def custom(b: ScalarField, U: ScalarField) -> HamiltonianSpec:
    return HamiltonianSpec(b, U, "custom")


# -- Hamiltonian and Lagrangian evaluation ------------------------------------

def eval_H(spec: HamiltonianSpec, x, p):
    return 0.5 * p * p + spec.b(x) * p + spec.U(x)


def eval_H_check(spec: HamiltonianSpec, x, p):
    """``H(x, -p)``."""
    return eval_H(spec, x, -np.asarray(p) if np.ndim(p) else -p)


def eval_L(spec: HamiltonianSpec, x, v):
    d = v - spec.b(x)
    return 0.5 * d * d - spec.U(x)


def eval_L_check(spec: HamiltonianSpec, x, v):
    """Fenchel dual of ``H_check``: ``(v + b(x))**2 / 2 - U(x)``."""
    d = v + spec.b(x)
    return 0.5 * d * d - spec.U(x)


def dH_check_dp(spec, x, p):
    return p - spec.b(x)


def dH_check_dx(spec, x, p):
    return -spec.b.d1(x) * p + spec.U.d1(x)


# -- grids ---------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid ``x_i = i / n``."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 16:
            raise ValueError(f"grid needs an integer n >= 16, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n) / self.n

    def sample(self, f) -> "GridFunction":
        return GridFunction(self, np.asarray(f(self.nodes), dtype=float))

    def constant(self, value: float = 0.0) -> "GridFunction":
        return GridFunction(self, np.full(self.n, float(value)))

    def nearest(self, x) -> np.ndarray:
        return np.rint(wrap(x) * self.n).astype(int) % self.n


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nodal values on a :class:`Grid`, read-only."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} values, got shape {v.shape}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __call__(self, x):
        return interpolate(self, x)

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __add__(self, other):
        if isinstance(other, GridFunction):
            other = other.values
        return GridFunction(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            other = other.values
        return GridFunction(self.grid, self.values - other)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def sup_dist(self, other: "GridFunction") -> float:
        return float(np.max(np.abs(self.values - other.values)))


def interpolate(f: GridFunction, x):
    """Periodic piecewise-linear interpolation, exact at nodes."""
    n = f.grid.n
    s = np.asarray(wrap(x), dtype=float) * n
    i = np.floor(s)
    t = s - i
    i = i.astype(int) % n
    out = f.values[i] * (1.0 - t) + f.values[(i + 1) % n] * t
    return float(out) if np.ndim(out) == 0 else out


def grad_central(f: GridFunction, i=None):
    """``(u[i+1] - u[i-1]) / (2h)`` with periodic indices; all nodes when ``i`` is None."""
    v = f.values
    g = (np.roll(v, -1) - np.roll(v, 1)) * (0.5 * f.grid.n)
    if i is None:
        return g
    out = g[np.asarray(i) % f.grid.n]
    return float(out) if np.ndim(out) == 0 else out


def one_sided_gradients(f: GridFunction):
    """Backward and forward differences ``(D-, D+)`` at every node."""
    v = f.values
    n = f.grid.n
    return (v - np.roll(v, 1)) * n, (np.roll(v, -1) - v) * n


def lipschitz_constant(f: GridFunction) -> float:
    """Discrete Lipschitz constant ``max_i |u[i+1] - u[i]| / h``."""
    return float(np.max(np.abs(np.roll(f.values, -1) - f.values)) * f.grid.n)
