"""Input checks shared by the estimators, experiments and the CLI."""

from __future__ import annotations

import math

import numpy as np

from .model import Grid, HamiltonianSpec


def check_spec(spec) -> HamiltonianSpec:
    if not isinstance(spec, HamiltonianSpec):
        raise TypeError(f"expected a HamiltonianSpec, got {type(spec).__name__}")
    return spec


def check_lambda(lam, *, allow_zero: bool = False) -> float:
    try:
        lam = float(lam)
    except (TypeError, ValueError):
        raise TypeError(f"discount must be a real number, got {lam!r}") from None
    if not math.isfinite(lam) or lam < 0 or (lam == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise ValueError(f"discount must be finite and {bound}, got {lam}")
    return lam


def check_lambda_sweep(lams, *, strict: bool = True) -> list:
    """Positive values; strictly decreasing when ``strict``."""
    out = [check_lambda(v) for v in np.atleast_1d(np.asarray(lams, dtype=float))]
    if not out:
        raise ValueError("empty discount list")
    if strict and any(b >= a for a, b in zip(out, out[1:])):
        raise ValueError(f"discounts must be strictly decreasing, got {out}")
    return out


def check_points(x) -> np.ndarray:
    """1-D finite float array of positions (scalars are promoted)."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.ravel()
    arr = np.atleast_1d(arr)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D array of positions, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("positions must be finite")
    return arr


def check_grid(n) -> Grid:
    if isinstance(n, Grid):
        return n
    if isinstance(n, bool) or int(n) != n:
        raise TypeError(f"grid size must be an integer, got {n!r}")
    return Grid(int(n))
