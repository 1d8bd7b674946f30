"""Compiled inner loops.  Pure functions of their array arguments."""

import math

import numba
import numpy as np

@numba.njit(cache=True, inline="always")
def _interp(u, s):
    # s is a position in index units
    n = u.shape[0]
    f = math.floor(s)
    t = s - f
    i = int(f) % n
    if t == 0.0:
        return u[i]
    return u[i] * (1.0 - t) + u[(i + 1) % n] * t


@numba.njit(cache=True, inline="always")
def _objective(u, i, v, bi, Ui, c, weight, beta, shift, sign):
    d = v + bi
    return sign * weight * _interp(u, i + shift * v) + beta * (0.5 * d * d - Ui + c)


@numba.njit(cache=True, inline="always")
def sl_node(u, i, bi, Ui, c, weight, beta, shift, sign, vmax):
    """Exact minimum over ``|v| <= vmax`` at node ``i``.  Returns ``(sign * min F, argmin)``.

    The foot ``i + shift*v`` crosses a node at each integer, and between two
    crossings ``F`` is a convex quadratic in ``v``, minimized in closed form on
    each piece.  Ties keep the smaller speed.
    """
    n = u.shape[0]
    best = math.inf
    bv = 0.0
    if shift == 0.0:
        v = min(max(-bi, -vmax), vmax)
        return sign * _objective(u, i, v, bi, Ui, c, weight, beta, shift, sign), v
    s_lo = i - abs(shift) * vmax
    s_hi = i + abs(shift) * vmax
    m = math.floor(s_lo)
    while m < s_hi:
        a = max(float(m), s_lo)
        z = min(float(m + 1), s_hi)
        va = (a - i) / shift
        vz = (z - i) / shift
        if va > vz:
            va, vz = vz, va
        j = int(m) % n
        slope = sign * weight * shift * (u[(j + 1) % n] - u[j])
        v = min(max(-bi - slope / beta, va), vz)
        f = _objective(u, i, v, bi, Ui, c, weight, beta, shift, sign)
        if f < best or (f == best and abs(v) < abs(bv)):
            best = f
            bv = v
        m += 1
    return sign * best, bv


@numba.njit(cache=True)
def sl_sweep(u, out, vel, b_nodes, U_nodes, c, weight, beta, shift, sign, vmax):
    """One Jacobi sweep of the semi-Lagrangian operator.

    For node ``i`` minimize over ``v`` in [-vmax, vmax]

        F(v) = sign * weight * u(x_i + shift*v*h) + beta * (L_check(x_i, v) + c)

    and store ``sign * min F`` in ``out[i]`` and the minimizer in ``vel[i]``.
    ``shift`` is ``±dt/h``.  Returns the number of nodes whose minimizer sits on the box edge.
    """
    n = u.shape[0]
    edge = 0
    lim = vmax * (1.0 - 1e-9)
    for i in range(n):
        out[i], vel[i] = sl_node(u, i, b_nodes[i], U_nodes[i], c, weight, beta, shift,
                                 sign, vmax)
        if abs(vel[i]) >= lim:
            edge += 1
    return edge


@numba.njit(cache=True)
def sl_sweep_inplace(u, vel, b_nodes, U_nodes, c, weight, beta, shift, sign, vmax,
                     anchor, relative, cap, use_cap, reverse):
    """Gauss-Seidel variant of :func:`sl_sweep`, updating ``u`` in place.

    The anchor node is updated first.  With ``relative`` its new value ``s`` is
    subtracted from every node, so a fixed point of this sweep is exactly a
    fixed point of ``u -> T(u) - T(u)[anchor]`` for the Jacobi operator ``T``.
    ``cap`` (when ``use_cap``) bounds the new values from above.  Nodes are
    visited in increasing order from the anchor, or decreasing when ``reverse``.
    Returns ``(s, max_abs_update, edge_hits)``.
    """
    n = u.shape[0]
    s = 0.0
    upd = 0.0
    edge = 0
    lim = vmax * (1.0 - 1e-9)
    for j in range(n):
        i = (anchor - j) % n if reverse else (anchor + j) % n
        new, bv = sl_node(u, i, b_nodes[i], U_nodes[i], c, weight, beta, shift, sign, vmax)
        if relative:
            if j == 0:
                s = new
            new -= s
        if use_cap and new > cap[i]:
            new = cap[i]
        d = abs(new - u[i])
        if d > upd:
            upd = d
        u[i] = new
        vel[i] = bv
        if abs(bv) >= lim:
            edge += 1
    return s, upd, edge


@numba.njit(cache=True)
def sl_sweep_rows(U2, out2, vel2, b_nodes, U_nodes, c, weight, beta, shift, sign, vmax):
    edge = 0
    for r in range(U2.shape[0]):
        edge += sl_sweep(U2[r], out2[r], vel2[r], b_nodes, U_nodes, c, weight, beta,
                         shift, sign, vmax)
    return edge


# -- characteristic flow -------------------------------------------------------

@numba.njit(cache=True, inline="always")
def _trig(ca, sa, x):
    s = 0.0
    w = 2.0 * math.pi * x
    for k in range(ca.shape[0]):
        s += ca[k] * math.cos(k * w) + sa[k] * math.sin(k * w)
    return s


@numba.njit(cache=True, inline="always")
def _field(x, p, coefs, lam):
    # coefs rows: b, b', U' as (cos, sin) pairs
    b = _trig(coefs[0], coefs[1], x)
    db = _trig(coefs[2], coefs[3], x)
    dU = _trig(coefs[4], coefs[5], x)
    return p - b, db * p - dU - lam * p


@numba.njit(cache=True)
def rk4_step(x, p, dt, coefs, lam):
    k1x, k1p = _field(x, p, coefs, lam)
    k2x, k2p = _field(x + 0.5 * dt * k1x, p + 0.5 * dt * k1p, coefs, lam)
    k3x, k3p = _field(x + 0.5 * dt * k2x, p + 0.5 * dt * k2p, coefs, lam)
    k4x, k4p = _field(x + dt * k3x, p + dt * k3p, coefs, lam)
    return (x + dt * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) / 6.0,
            p + dt * (k1p + 2.0 * k2p + 2.0 * k3p + k4p) / 6.0)


@numba.njit(cache=True)
def rk4_orbit(x0, p0, nsteps, dt, coefs, lam, pbound):
    """Fixed-step RK4 in lifted coordinates.  Returns (x, p, last_valid_index)."""
    xs = np.empty(nsteps + 1)
    ps = np.empty(nsteps + 1)
    xs[0] = x0
    ps[0] = p0
    for k in range(nsteps):
        x, p = rk4_step(xs[k], ps[k], dt, coefs, lam)
        if not (abs(p) <= pbound):
            return xs, ps, k
        xs[k + 1] = x
        ps[k + 1] = p
    return xs, ps, nsteps


@numba.njit(cache=True)
def rk4_inverse_step(x, p, dt, coefs, lam, iters):
    """Solve ``rk4_step(y) == (x, p)`` for ``y`` (exact inverse of the discrete map)."""
    yx, yp = rk4_step(x, p, -dt, coefs, lam)
    for _ in range(iters):
        fx, fp = rk4_step(yx, yp, dt, coefs, lam)
        ex = fx - x
        ep = fp - p
        yx -= ex
        yp -= ep
        if abs(ex) + abs(ep) == 0.0:
            break
    return yx, yp


@numba.njit(cache=True)
def stable_branch(x0, p0, sx, sp, x_center, delta, dt, coefs, lam, max_steps, iters):
    """Iterate the inverse RK4 map from a seed until ``|x - x_center| > delta``."""
    xs = np.empty(max_steps + 1)
    ps = np.empty(max_steps + 1)
    xs[0] = x0 + sx
    ps[0] = p0 + sp
    k = 0
    while k < max_steps and abs(xs[k] - x_center) <= delta:
        xs[k + 1], ps[k + 1] = rk4_inverse_step(xs[k], ps[k], dt, coefs, lam, iters)
        k += 1
    return xs[: k + 1], ps[: k + 1]


def flow_coefficients(spec):
    """Pack the coefficient arrays used by the flow kernels."""
    from .model import TWO_PI

    def deriv(f):
        k = TWO_PI * np.arange(f.degree + 1)
        a, b = f.coefficient_arrays()
        return b * k, -a * k

    d = max(spec.b.degree, spec.U.degree) + 1
    rows = []
    for a, b in (spec.b.coefficient_arrays(), deriv(spec.b), deriv(spec.U)):
        rows.append(np.pad(a, (0, d - a.size)))
        rows.append(np.pad(b, (0, d - b.size)))
    return np.ascontiguousarray(np.vstack(rows))


@numba.njit(cache=True)
def sl_sweep_rows_pruned(U2, out2, vel2, b_nodes, U_nodes, c, weight, beta, shift, sign,
                         vmax, thresh, reach, big):
    """Row sweeps that only update nodes within ``reach`` cells of a value <= ``thresh``.

    Other nodes are set to ``big``.  Exact for the question "is the value at most
    ``thresh``" when the running cost is nonnegative, since then no path can
    get back under the threshold after exceeding it.
    """
    R, n = U2.shape
    pref = np.empty(n + 1)
    for r in range(R):
        u = U2[r]
        pref[0] = 0.0
        for i in range(n):
            pref[i + 1] = pref[i] + (1.0 if u[i] <= thresh else 0.0)
        total = pref[n]
        for i in range(n):
            out2[r, i] = big
            vel2[r, i] = 0.0
        if total == 0.0:
            continue
        for i in range(n):
            if 2 * reach + 1 >= n:
                hit = True
            else:
                lo = i - reach
                hi = i + reach + 1
                if lo < 0:
                    cnt = pref[hi] + total - pref[n + lo]
                elif hi > n:
                    cnt = total - pref[lo] + pref[hi - n]
                else:
                    cnt = pref[hi] - pref[lo]
                hit = cnt > 0.0
            if hit:
                out2[r, i], vel2[r, i] = sl_node(u, i, b_nodes[i], U_nodes[i], c, weight,
                                                 beta, shift, sign, vmax)
    return 0
