# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled flow kernels: the system right-hand sides and full integrator
loops (fixed-step RK4 and Dormand-Prince 5(4)).

Keep the arithmetic in lockstep with relcm/_core/fallback.py and the
generic loops in relcm/integrate.py; tests/test_backends.py enforces
parity.
"""

from libc.math cimport sqrt, fabs, fmax, fmin, pow, isfinite

import numpy as np

cdef int SV_ID = 1
cdef int PN_ID = 2
cdef int COULOMB_ID = 3

DIMS = {1: 16, 2: 6, 3: 6}


cdef inline double mdot(double* a, double* b) nogil:
    return -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]


cdef int rhs_c(int sysid, double* pr, double s, double* y, double* out) nogil:
    """Evaluate the named RHS; returns 0 on success, -1 on non-finite output."""
    cdef double px, pq, qx, w, dm2, g_val, g_der, b_der, lam
    cdef double rn, wroot, coef
    cdef int i

    if sysid == SV_ID:
        # params (m1, m2, kappa, alpha, chi, lam); state (z, P, x, q)
        px = mdot(y + 4, y + 8)
        pq = mdot(y + 4, y + 12)
        qx = mdot(y + 12, y + 8)
        w = -mdot(y + 4, y + 4)
        dm2 = (pr[0] - pr[3] * pr[1]) * (pr[0] - pr[3] * pr[1])
        g_val = 0.5 * pr[4] * pr[2] * (w - dm2)
        g_der = 0.5 * pr[4] * pr[2]
        b_der = 0.25 - (pr[0] * pr[0] - pr[1] * pr[1]) * (pr[0] * pr[0] - pr[1] * pr[1]) / (4.0 * w * w)
        lam = pr[5]
        for i in range(4):
            out[i] = lam * (
                -(qx / px) * y[12 + i]
                + (pq * qx / (px * px) + g_val / (px * px)) * y[8 + i]
                + (2.0 * g_der / px + b_der) * y[4 + i]
            )
            out[4 + i] = 0.0
            out[8 + i] = lam * (y[12 + i] - (qx / px) * y[4 + i] - (pq / px) * y[8 + i])
            out[12 + i] = lam * ((pq / px) * y[12 + i] - ((pq * qx + g_val) / (px * px)) * y[4 + i])
        for i in range(16):
            if not isfinite(out[i]):
                return -1
        return 0

    if sysid == PN_ID:
        # params (mu, kappa); state (r, v)
        rn = sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2])
        coef = pr[1] / (pr[0] * rn * rn * rn)
        for i in range(3):
            out[i] = y[3 + i]
            out[3 + i] = coef * y[i]
        for i in range(6):
            if not isfinite(out[i]):
                return -1
        return 0

    if sysid == COULOMB_ID:
        # params (m, kappa, kappa_prime); state (r, p)
        rn = sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2])
        wroot = sqrt(
            y[3] * y[3] + y[4] * y[4] + y[5] * y[5] + pr[0] * pr[0] + pr[2] * pr[2] / (rn * rn)
        )
        coef = pr[2] * pr[2] / (rn * rn * rn * rn * wroot) + pr[1] / (rn * rn * rn)
        for i in range(3):
            out[i] = y[3 + i] / wroot
            out[3 + i] = coef * y[i]
        for i in range(6):
            if not isfinite(out[i]):
                return -1
        return 0

    return -2


def rhs(int sysid, double[::1] params, double s, double[::1] y):
    """Single RHS evaluation (python entry, used for parity tests)."""
    cdef int dim = y.shape[0]
    out = np.empty(dim)
    cdef double[::1] ov = out
    if rhs_c(sysid, &params[0], s, &y[0], &ov[0]) != 0:
        return None
    return out


def rk4(int sysid, double[::1] params, double[::1] y0, double s0, double h, long nsteps, long record_every):
    """Fixed-step classic RK4; returns (sigmas, states) or (None, sigma)."""
    cdef int dim = y0.shape[0]
    cdef long k, nrec
    cdef int i, bad
    cdef double s = s0

    sig_arr = np.empty(nsteps + 1)
    sta_arr = np.empty((nsteps + 1, dim))
    cdef double[::1] sig = sig_arr
    cdef double[:, ::1] sta = sta_arr

    y_arr = np.array(y0, dtype=float)
    cdef double[::1] y = y_arr
    work = np.empty((5, dim))
    cdef double[:, ::1] wk = work

    sig[0] = s0
    for i in range(dim):
        sta[0, i] = y[i]
    nrec = 1
    bad = 0
    with nogil:
        for k in range(nsteps):
            bad = rhs_c(sysid, &params[0], s, &y[0], &wk[0, 0])
            if bad == 0:
                for i in range(dim):
                    wk[4, i] = y[i] + 0.5 * h * wk[0, i]
                bad = rhs_c(sysid, &params[0], s + 0.5 * h, &wk[4, 0], &wk[1, 0])
            if bad == 0:
                for i in range(dim):
                    wk[4, i] = y[i] + 0.5 * h * wk[1, i]
                bad = rhs_c(sysid, &params[0], s + 0.5 * h, &wk[4, 0], &wk[2, 0])
            if bad == 0:
                for i in range(dim):
                    wk[4, i] = y[i] + h * wk[2, i]
                bad = rhs_c(sysid, &params[0], s + h, &wk[4, 0], &wk[3, 0])
            if bad != 0:
                break
            for i in range(dim):
                y[i] = y[i] + (h / 6.0) * (wk[0, i] + 2.0 * wk[1, i] + 2.0 * wk[2, i] + wk[3, i])
            s = s0 + (k + 1) * h
            if (k + 1) % record_every == 0 or k == nsteps - 1:
                sig[nrec] = s
                for i in range(dim):
                    sta[nrec, i] = y[i]
                nrec += 1
    if bad != 0:
        return None, s
    return sig_arr[:nrec], sta_arr[:nrec]


# Dormand-Prince coefficients (c, a, b5, b4), same as relcm.integrate.
cdef double DP_C[7]
cdef double DP_A[7][6]
cdef double DP_B5[7]
cdef double DP_B4[7]

DP_C[0] = 0.0; DP_C[1] = 1.0 / 5; DP_C[2] = 3.0 / 10; DP_C[3] = 4.0 / 5
DP_C[4] = 8.0 / 9; DP_C[5] = 1.0; DP_C[6] = 1.0

DP_A[1][0] = 1.0 / 5
DP_A[2][0] = 3.0 / 40; DP_A[2][1] = 9.0 / 40
DP_A[3][0] = 44.0 / 45; DP_A[3][1] = -56.0 / 15; DP_A[3][2] = 32.0 / 9
DP_A[4][0] = 19372.0 / 6561; DP_A[4][1] = -25360.0 / 2187
DP_A[4][2] = 64448.0 / 6561; DP_A[4][3] = -212.0 / 729
DP_A[5][0] = 9017.0 / 3168; DP_A[5][1] = -355.0 / 33; DP_A[5][2] = 46732.0 / 5247
DP_A[5][3] = 49.0 / 176; DP_A[5][4] = -5103.0 / 18656
DP_A[6][0] = 35.0 / 384; DP_A[6][1] = 0.0; DP_A[6][2] = 500.0 / 1113
DP_A[6][3] = 125.0 / 192; DP_A[6][4] = -2187.0 / 6784; DP_A[6][5] = 11.0 / 84

DP_B5[0] = 35.0 / 384; DP_B5[1] = 0.0; DP_B5[2] = 500.0 / 1113; DP_B5[3] = 125.0 / 192
DP_B5[4] = -2187.0 / 6784; DP_B5[5] = 11.0 / 84; DP_B5[6] = 0.0

DP_B4[0] = 5179.0 / 57600; DP_B4[1] = 0.0; DP_B4[2] = 7571.0 / 16695; DP_B4[3] = 393.0 / 640
DP_B4[4] = -92097.0 / 339200; DP_B4[5] = 187.0 / 2100; DP_B4[6] = 1.0 / 40

MIN_STEP = 1e-14


def dopri45(int sysid, double[::1] params, double[::1] y0, double s0, double s1,
            double atol, double rtol, double h0, long max_steps):
    """Adaptive Dormand-Prince 5(4); returns (sigmas, states, stats) or
    (None, message, sigma) on failure."""
    cdef int dim = y0.shape[0]
    cdef double s = s0, h = h0
    cdef double err, sc, acc, factor, hmin_seen = 1e300, hmax_seen = 0.0
    cdef long n_acc = 0, n_rej = 0, cap = 4096, nrec
    cdef int i, j, stage, bad
    cdef double min_step = MIN_STEP

    y_arr = np.array(y0, dtype=float)
    cdef double[::1] y = y_arr
    karr = np.empty((7, dim))
    cdef double[:, ::1] kv = karr
    ytmp = np.empty(dim)
    cdef double[::1] yt = ytmp
    y5a = np.empty(dim)
    cdef double[::1] y5 = y5a
    y4a = np.empty(dim)
    cdef double[::1] y4 = y4a

    sig_arr = np.empty(cap)
    sta_arr = np.empty((cap, dim))
    cdef double[::1] sig = sig_arr
    cdef double[:, ::1] sta = sta_arr
    sig[0] = s
    for i in range(dim):
        sta[0, i] = y[i]
    nrec = 1

    while s < s1:
        h = fmin(h, s1 - s)
        if h < min_step * fmax(1.0, fabs(s)):
            return None, "stiffness or singularity encountered", s
        bad = rhs_c(sysid, &params[0], s, &y[0], &kv[0, 0])
        for stage in range(1, 7):
            if bad != 0:
                break
            for i in range(dim):
                acc = 0.0
                for j in range(stage):
                    acc += DP_A[stage][j] * kv[j, i]
                yt[i] = y[i] + h * acc
            bad = rhs_c(sysid, &params[0], s + DP_C[stage] * h, &yt[0], &kv[stage, 0])
        if bad != 0:
            return None, "non-finite right-hand side", s
        err = 0.0
        for i in range(dim):
            acc = 0.0
            for j in range(7):
                acc += DP_B5[j] * kv[j, i]
            y5[i] = y[i] + h * acc
            acc = 0.0
            for j in range(7):
                acc += DP_B4[j] * kv[j, i]
            y4[i] = y[i] + h * acc
            sc = atol + rtol * fmax(fabs(y[i]), fabs(y5[i]))
            err += ((y5[i] - y4[i]) / sc) * ((y5[i] - y4[i]) / sc)
        err = sqrt(err / dim)
        if err <= 1.0:
            s = s + h
            for i in range(dim):
                y[i] = y5[i]
            if nrec == cap:
                cap = cap * 2
                sig_arr = np.concatenate([sig_arr, np.empty(cap - nrec)])
                sta_arr = np.concatenate([sta_arr, np.empty((cap - nrec, dim))])
                sig = sig_arr
                sta = sta_arr
            sig[nrec] = s
            for i in range(dim):
                sta[nrec, i] = y[i]
            nrec += 1
            n_acc += 1
            hmin_seen = fmin(hmin_seen, h)
            hmax_seen = fmax(hmax_seen, h)
        else:
            n_rej += 1
        if err > 0:
            factor = 0.9 * pow(err, -0.2)
        else:
            factor = 0.9 * pow(1e-10, -0.2)
        factor = fmin(5.0, fmax(0.2, factor))
        h = h * factor
        if n_acc + n_rej > max_steps:
            return None, "step budget exhausted", s
    return sig_arr[:nrec], sta_arr[:nrec], (n_acc, n_rej, hmin_seen, hmax_seen)
