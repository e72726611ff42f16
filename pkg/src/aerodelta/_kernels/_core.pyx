# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels. Reference semantics and docs live in pyref.py."""

from libc.math cimport acos, atan2, cos, exp, expm1, fabs, fmod, sin, sqrt, INFINITY, M_PI

import numpy as np


BACKEND = "compiled"

cdef double _DISC_TOL = 1e-12

cdef double[3] _COS_PHI = [1.0, -0.5, -0.5]
cdef double[3] _SIN_PHI = [0.0, 0.8660254037844386467637231707529362, -0.8660254037844386467637231707529362]


cdef double _kkt_residual_c(int n, double* x, double* g, double* lo, double* hi) noexcept nogil:
    cdef double r = 0.0
    cdef double ri
    cdef int i
    for i in range(n):
        if x[i] <= lo[i] and x[i] >= hi[i]:
            ri = 0.0
        elif x[i] <= lo[i]:
            ri = -g[i] if -g[i] > 0.0 else 0.0
        elif x[i] >= hi[i]:
            ri = g[i] if g[i] > 0.0 else 0.0
        else:
            ri = fabs(g[i])
        if ri > r:
            r = ri
    return r


cdef bint _solve_spd(int m, double* A, double* b) noexcept nogil:
    """Cholesky solve of A x = b in place (b becomes x); A clobbered.
    Returns False if A is not positive definite."""
    cdef int i, j, k
    cdef double s
    for i in range(m):
        for j in range(i + 1):
            s = A[i * m + j]
            for k in range(j):
                s -= A[i * m + k] * A[j * m + k]
            if i == j:
                if s <= 0.0:
                    return False
                A[i * m + i] = sqrt(s)
            else:
                A[i * m + j] = s / A[j * m + j]
    for i in range(m):
        s = b[i]
        for k in range(i):
            s -= A[i * m + k] * b[k]
        b[i] = s / A[i * m + i]
    for i in range(m - 1, -1, -1):
        s = b[i]
        for k in range(i + 1, m):
            s -= A[k * m + i] * b[k]
        b[i] = s / A[i * m + i]
    return True


def solve_box_qp(Q, q, lo, hi, x0, tol=1e-8, max_iter=100):
    Q_arr = np.ascontiguousarray(Q, dtype=np.float64)
    cdef double[:, ::1] Qm = Q_arr
    cdef double[::1] qm = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[::1] lom = np.ascontiguousarray(lo, dtype=np.float64)
    cdef double[::1] him = np.ascontiguousarray(hi, dtype=np.float64)
    x_arr = np.array(x0, dtype=np.float64)
    cdef double[::1] xm = x_arr
    cdef int n = qm.shape[0]
    cdef int max_it = int(max_iter)
    cdef double tolv = float(tol)
    if n > 64:
        raise ValueError("kernel supports n <= 64")

    cdef double[64] g
    cdef double[64] d
    cdef double[64] xn
    cdef double[4096] Aff
    cdef double[64] bf
    cdef int[64] freeidx
    cdef int i, j, it, nf, ls
    cdef double resid = INFINITY
    cdef double fx, fn, slope, step, s
    cdef bint clamped, ok, moved
    cdef double* Qp = &Qm[0, 0]
    cdef double* qp = &qm[0]
    cdef double* lop = &lom[0]
    cdef double* hip = &him[0]
    cdef double* xp = &xm[0]
    cdef int iters = 0

    with nogil:
        for i in range(n):
            if xp[i] < lop[i]:
                xp[i] = lop[i]
            elif xp[i] > hip[i]:
                xp[i] = hip[i]
        fx = 0.0
        for i in range(n):
            s = 0.0
            for j in range(n):
                s += Qp[i * n + j] * xp[j]
            fx += xp[i] * s + qp[i] * xp[i]

        for it in range(1, max_it + 1):
            iters = it
            for i in range(n):
                s = 0.0
                for j in range(n):
                    s += Qp[i * n + j] * xp[j]
                g[i] = 2.0 * s + qp[i]
            resid = _kkt_residual_c(n, xp, &g[0], lop, hip)
            if resid <= tolv:
                break
            nf = 0
            for i in range(n):
                clamped = (xp[i] <= lop[i] and g[i] > 0.0) or (xp[i] >= hip[i] and g[i] < 0.0)
                if not clamped:
                    freeidx[nf] = i
                    nf += 1
            if nf == 0:
                break
            for i in range(nf):
                bf[i] = -g[freeidx[i]]
                for j in range(nf):
                    Aff[i * nf + j] = 2.0 * Qp[freeidx[i] * n + freeidx[j]]
            ok = _solve_spd(nf, &Aff[0], &bf[0])
            for i in range(n):
                d[i] = 0.0
            if ok:
                for i in range(nf):
                    d[freeidx[i]] = bf[i]
            else:
                for i in range(nf):
                    d[freeidx[i]] = -g[freeidx[i]]
            slope = 0.0
            for i in range(n):
                slope += g[i] * d[i]
            if slope > 0.0:
                for i in range(n):
                    d[i] = 0.0
                for i in range(nf):
                    d[freeidx[i]] = -g[freeidx[i]]
                slope = 0.0
                for i in range(n):
                    slope += g[i] * d[i]
            step = 1.0
            ok = False
            fn = fx
            for ls in range(30):
                for i in range(n):
                    xn[i] = xp[i] + step * d[i]
                    if xn[i] < lop[i]:
                        xn[i] = lop[i]
                    elif xn[i] > hip[i]:
                        xn[i] = hip[i]
                fn = 0.0
                for i in range(n):
                    s = 0.0
                    for j in range(n):
                        s += Qp[i * n + j] * xn[j]
                    fn += xn[i] * s + qp[i] * xn[i]
                if fn <= fx + 1e-4 * step * slope or fn <= fx:
                    ok = True
                    break
                step *= 0.5
            if not ok:
                break
            moved = False
            for i in range(n):
                if xn[i] != xp[i]:
                    moved = True
                    break
            if fn >= fx and not moved:
                break
            for i in range(n):
                xp[i] = xn[i]
            fx = fn
        for i in range(n):
            s = 0.0
            for j in range(n):
                s += Qp[i * n + j] * xp[j]
            g[i] = 2.0 * s + qp[i]
        resid = _kkt_residual_c(n, xp, &g[0], lop, hip)
    return x_arr, iters, resid


cdef int _fk_c(double r_eff, double l_a, double l_f, double* q, double* p) noexcept nogil:
    cdef double[3][3] c
    cdef double[3] ex
    cdef double[3] ey
    cdef double[3] ez
    cdef double[3] u
    cdef double radial, d, i_comp, ey_n, j_comp, x, y, disc, z
    cdef int i
    for i in range(3):
        radial = r_eff + l_a * cos(q[i])
        c[i][0] = radial * _COS_PHI[i]
        c[i][1] = radial * _SIN_PHI[i]
        c[i][2] = l_a * sin(q[i])
    for i in range(3):
        ex[i] = c[1][i] - c[0][i]
        u[i] = c[2][i] - c[0][i]
    d = sqrt(ex[0] * ex[0] + ex[1] * ex[1] + ex[2] * ex[2])
    if d < 1e-12:
        return 1
    for i in range(3):
        ex[i] /= d
    i_comp = ex[0] * u[0] + ex[1] * u[1] + ex[2] * u[2]
    for i in range(3):
        ey[i] = u[i] - i_comp * ex[i]
    ey_n = sqrt(ey[0] * ey[0] + ey[1] * ey[1] + ey[2] * ey[2])
    if ey_n < 1e-12:
        return 1
    for i in range(3):
        ey[i] /= ey_n
    ez[0] = ex[1] * ey[2] - ex[2] * ey[1]
    ez[1] = ex[2] * ey[0] - ex[0] * ey[2]
    ez[2] = ex[0] * ey[1] - ex[1] * ey[0]
    j_comp = ey[0] * u[0] + ey[1] * u[1] + ey[2] * u[2]
    x = 0.5 * d
    y = (i_comp * i_comp + j_comp * j_comp - 2.0 * i_comp * x) / (2.0 * j_comp)
    disc = l_f * l_f - x * x - y * y
    if disc < _DISC_TOL:
        return 1
    z = sqrt(disc)
    if ez[2] < 0.0:
        z = -z
    for i in range(3):
        p[i] = c[0][i] + x * ex[i] + y * ey[i] + z * ez[i]
    return 0


def delta_fk(r_eff, l_a, l_f, q):
    cdef double[::1] qm = np.ascontiguousarray(q, dtype=np.float64)
    p_arr = np.empty(3, dtype=np.float64)
    cdef double[::1] pm = p_arr
    cdef int status = _fk_c(float(r_eff), float(l_a), float(l_f), &qm[0], &pm[0])
    if status != 0:
        p_arr[:] = np.nan
    return status, p_arr


cdef int _ik_c(double r_eff, double l_a, double l_f, double* p, double* q) noexcept nogil:
    cdef double cp, sp, dx, dy, dz, a, h, d2, e_val, r2, disc, gamma, ratio
    cdef int i
    for i in range(3):
        cp = _COS_PHI[i]
        sp = _SIN_PHI[i]
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
            return 1
        gamma = atan2(h, a)
        ratio = e_val / sqrt(r2)
        if ratio > 1.0:
            ratio = 1.0
        elif ratio < -1.0:
            ratio = -1.0
        q[i] = gamma - acos(ratio)
    return 0


def delta_ik(r_eff, l_a, l_f, p):
    cdef double[::1] pm = np.ascontiguousarray(p, dtype=np.float64)
    q_arr = np.empty(3, dtype=np.float64)
    cdef double[::1] qm = q_arr
    cdef int status = _ik_c(float(r_eff), float(l_a), float(l_f), &pm[0], &qm[0])
    if status != 0:
        q_arr[:] = np.nan
    return status, q_arr


def plant_advance(state, refs, tau_base, tau_arm, yaw_rate_limit, r_eff, l_a, l_f, dt, n):
    st_arr = np.array(state, dtype=np.float64)
    cdef double[::1] st = st_arr
    cdef double[::1] rf = np.ascontiguousarray(refs, dtype=np.float64)
    p_arr = np.empty(3, dtype=np.float64)
    cdef double[::1] pm = p_arr
    cdef double* sp = &st[0]
    cdef double* rp = &rf[0]
    cdef double dtv = float(dt)
    cdef double kb = exp(-dtv / float(tau_base))
    cdef double ka = exp(-dtv / float(tau_arm))
    cdef double kyaw = -expm1(-dtv / float(tau_base))
    cdef double max_step = float(yaw_rate_limit) * dtv
    cdef double yaw_acc = 0.0
    cdef double r_eff_v = float(r_eff)
    cdef double l_a_v = float(l_a)
    cdef double l_f_v = float(l_f)
    cdef double err, step
    cdef int k, i, nn = int(n)
    cdef int status
    with nogil:
        for k in range(nn):
            for i in range(3):
                sp[i] = rp[i] + (sp[i] - rp[i]) * kb
            err = M_PI - fmod(M_PI - (rp[3] - sp[3]), 2.0 * M_PI)
            if err > M_PI:
                err -= 2.0 * M_PI
            step = err * kyaw
            if step > max_step:
                step = max_step
            elif step < -max_step:
                step = -max_step
            sp[3] += step
            yaw_acc += step
            for i in range(4, 7):
                sp[i] = rp[i] + (sp[i] - rp[i]) * ka
        status = _fk_c(r_eff_v, l_a_v, l_f_v, sp + 4, &pm[0])
    if status != 0:
        p_arr[:] = np.nan
    return status, st_arr, p_arr, yaw_acc / (nn * dtv)
