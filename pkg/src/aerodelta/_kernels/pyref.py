"""Pure NumPy reference implementation of the hot kernels.

Mirrors the compiled extension `_core` exactly: same signatures, same
numerical conventions. Selected at import when the extension is missing
or when AERODELTA_PURE_PYTHON is set.

Kernels:
  solve_box_qp  projected-Newton box QP solver
  delta_fk      parallel-arm forward kinematics (three-sphere intersection)
  delta_ik      per-arm inverse kinematics (planar circle intersection)
  plant_advance first-order-lag plant integration over n substeps
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"

# Arm azimuths: three arms equally spaced around the base column.
_PHI = (0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0)
_COS_PHI = tuple(math.cos(p) for p in _PHI)
_SIN_PHI = tuple(math.sin(p) for p in _PHI)

_DISC_TOL = 1e-12


def _kkt_residual(x, g, lo, hi):
    at_lo = x <= lo
    at_hi = x >= hi
    r = np.abs(g)
    r[at_lo] = np.maximum(0.0, -g[at_lo])
    r[at_hi] = np.maximum(0.0, g[at_hi])
    # a variable pinned from both sides is always stationary
    r[at_lo & at_hi] = 0.0
    return float(r.max()) if r.size else 0.0


def solve_box_qp(Q, q, lo, hi, x0, tol=1e-8, max_iter=100):
    """Minimize x'Qx + q'x subject to lo <= x <= hi, Q symmetric PD.

    Projected Newton on the free set with Armijo backtracking. Returns
    (x, iterations, kkt_residual); the caller decides convergence from
    the residual. x0 is clipped into the box as the warm start.
    """
    Q = np.asarray(Q, dtype=float)
    q = np.asarray(q, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    x = np.clip(np.asarray(x0, dtype=float), lo, hi)
    fx = float(x @ Q @ x + q @ x)
    iters = 0
    resid = math.inf
    for iters in range(1, max_iter + 1):
        g = 2.0 * (Q @ x) + q
        resid = _kkt_residual(x, g, lo, hi)
        if resid <= tol:
            return x, iters, resid
        clamped = ((x <= lo) & (g > 0.0)) | ((x >= hi) & (g < 0.0))
        free = ~clamped
        if not free.any():
            break
        d = np.zeros_like(x)
        Qff = Q[np.ix_(free, free)]
        try:
            d[free] = np.linalg.solve(2.0 * Qff, -g[free])
        except np.linalg.LinAlgError:
            d[free] = -g[free]
        slope = float(g @ d)
        if slope > 0.0:
            d[free] = -g[free]
            slope = float(g @ d)
        step = 1.0
        for _ in range(30):
            xn = np.clip(x + step * d, lo, hi)
            fn = float(xn @ Q @ xn + q @ xn)
            if fn <= fx + 1e-4 * step * slope or fn <= fx:
                break
            step *= 0.5
        else:
            break
        if fn >= fx and np.array_equal(xn, x):
            break
        x, fx = xn, fn
    g = 2.0 * (Q @ x) + q
    resid = _kkt_residual(x, g, lo, hi)
    return x, iters, resid


def delta_fk(r_eff, l_a, l_f, q):
    """Platform center from joint angles; returns (status, p).

    status 0: ok; 1: the three forearm spheres do not intersect.
    Coordinates: base joints in the z = 0 plane, workspace at positive z.
    """
    q = np.asarray(q, dtype=float)
    c = np.empty((3, 3))
    for i in range(3):
        radial = r_eff + l_a * math.cos(q[i])
        c[i, 0] = radial * _COS_PHI[i]
        c[i, 1] = radial * _SIN_PHI[i]
        c[i, 2] = l_a * math.sin(q[i])
    # intersection of three equal-radius spheres centered at c[i]
    ex = c[1] - c[0]
    d = math.sqrt(ex @ ex)
    if d < 1e-12:
        return 1, np.full(3, np.nan)
    ex = ex / d
    u = c[2] - c[0]
    i_comp = float(ex @ u)
    ey = u - i_comp * ex
    ey_n = math.sqrt(ey @ ey)
    if ey_n < 1e-12:
        return 1, np.full(3, np.nan)
    ey = ey / ey_n
    ez = np.cross(ex, ey)
    j_comp = float(ey @ u)
    x = 0.5 * d
    y = (i_comp * i_comp + j_comp * j_comp - 2.0 * i_comp * x) / (2.0 * j_comp)
    disc = l_f * l_f - x * x - y * y
    if disc < _DISC_TOL:
        return 1, np.full(3, np.nan)
    z = math.sqrt(disc)
    base = c[0] + x * ex + y * ey
    p_plus = base + z * ez
    p_minus = base - z * ez
    p = p_plus if p_plus[2] >= p_minus[2] else p_minus
    return 0, p


def delta_ik(r_eff, l_a, l_f, p):
    """Joint angles from the platform center; returns (status, q).

    status 0: ok; 1: point unreachable for some arm. Picks the elbow-out
    branch, the one forward kinematics maps back to the workspace side.
    """
    p = np.asarray(p, dtype=float)
    q = np.empty(3)
    for i in range(3):
        cp, sp = _COS_PHI[i], _SIN_PHI[i]
        dx = p[0] - r_eff * cp
        dy = p[1] - r_eff * sp
        dz = p[2]
        a = dx * cp + dy * sp
        h = dz
        d2 = dx * dx + dy * dy + dz * dz
        e_val = (d2 + l_a * l_a - l_f * l_f) / (2.0 * l_a)
        r2 = a * a + h * h
        disc = r2 - e_val * e_val
        if disc < _DISC_TOL:
            return 1, np.full(3, np.nan)
        gamma = math.atan2(h, a)
        delta = math.acos(max(-1.0, min(1.0, e_val / math.sqrt(r2))))
        q[i] = gamma - delta
    return 0, q


def plant_advance(state, refs, tau_base, tau_arm, yaw_rate_limit, r_eff, l_a, l_f, dt, n):
    """Advance the lag plant n substeps of dt toward held references.

    state: [p_B (3), yaw, q (3)]; refs: [p_B_d (3), psi_d, q_d (3)].
    Base and joints relax exponentially (exact step); yaw relaxes with
    tau_base under a hard rate limit. Returns (status, new_state, p_E_D,
    yaw_rate) where yaw_rate is the realized average over the interval.
    """
    st = np.array(state, dtype=float)
    rf = np.asarray(refs, dtype=float)
    kb = math.exp(-dt / tau_base)
    ka = math.exp(-dt / tau_arm)
    kyaw = -math.expm1(-dt / tau_base)
    max_step = yaw_rate_limit * dt
    yaw_acc = 0.0
    for _ in range(n):
        st[0:3] = rf[0:3] + (st[0:3] - rf[0:3]) * kb
        err = math.pi - (math.pi - (rf[3] - st[3])) % (2.0 * math.pi)
        step = err * kyaw
        if step > max_step:
            step = max_step
        elif step < -max_step:
            step = -max_step
        st[3] += step
        yaw_acc += step
        st[4:7] = rf[4:7] + (st[4:7] - rf[4:7]) * ka
    status, p_e_d = delta_fk(r_eff, l_a, l_f, st[4:7])
    yaw_rate = yaw_acc / (n * dt)
    return status, st, p_e_d, yaw_rate
