# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled model drivers.

These mirror the pure-Python fallback (and through it ebofrac.model /
ebofrac.integrators) statement for statement; keep the two in sync.  The
vector fields are inlined, state vectors live on the stack, and adaptive
output grows in doubling numpy buffers.
"""
import math

import numpy as np

from libc.math cimport fabs, fmax, fmin
from libc.math cimport pow as cpow
from libc.math cimport sqrt as csqrt

COMPILED = True

# layout of the 18-entry parameter array (ModelParams field order)
cdef enum:
    pBETA
    pETA_A
    pETA_D
    pSIGMA
    pP
    pGAMMA_S
    pGAMMA_A
    pGAMMA_H
    pDELTA_S
    pDELTA_H
    pH_S
    pLAMBDA
    pMU
    pMU_D
    pV
    pEPS
    pOMEGA
    pALPHA


# ---------------------------------------------------------------------------
# vector fields

cdef int _rhs_unc(double* p, double* y, double* out) noexcept nogil:
    cdef double n_living = y[0] + y[1] + y[2] + y[3] + y[4] + y[5] + y[7]
    if n_living <= 0.0:
        return 1
    cdef double lam = p[pBETA] * (y[3] + p[pETA_A] * y[4] + p[pETA_D] * y[6]) / n_living
    out[0] = p[pLAMBDA] - lam * y[0] + p[pOMEGA] * y[1] - (p[pV] + p[pMU]) * y[0]
    out[1] = p[pV] * y[0] - (1.0 - p[pEPS]) * lam * y[1] - (p[pMU] + p[pOMEGA]) * y[1]
    out[2] = lam * (y[0] + (1.0 - p[pEPS]) * y[1]) - (p[pMU] + p[pSIGMA]) * y[2]
    out[3] = p[pP] * p[pSIGMA] * y[2] - (p[pGAMMA_S] + p[pDELTA_S] + p[pH_S] + p[pMU]) * y[3]
    out[4] = (1.0 - p[pP]) * p[pSIGMA] * y[2] - (p[pGAMMA_A] + p[pMU]) * y[4]
    out[5] = p[pH_S] * y[3] - (p[pGAMMA_H] + p[pDELTA_H] + p[pMU]) * y[5]
    out[6] = p[pDELTA_S] * y[3] + p[pDELTA_H] * y[5] - p[pMU_D] * y[6]
    out[7] = p[pGAMMA_S] * y[3] + p[pGAMMA_A] * y[4] + p[pGAMMA_H] * y[5] - p[pMU] * y[7]
    return 0


cdef int _rhs_con(double* p, double* y, double* u, double* out) noexcept nogil:
    cdef double n_living = y[0] + y[1] + y[2] + y[3] + y[4] + y[5] + y[7]
    if n_living <= 0.0:
        return 1
    cdef double lam = (1.0 - u[0]) * (
        p[pBETA] * (y[3] + p[pETA_A] * y[4] + p[pETA_D] * y[6]) / n_living)
    out[0] = p[pLAMBDA] - lam * y[0] + p[pOMEGA] * y[1] - (u[1] + p[pMU]) * y[0]
    out[1] = u[1] * y[0] - (1.0 - p[pEPS]) * lam * y[1] - (p[pMU] + p[pOMEGA]) * y[1]
    out[2] = lam * (y[0] + (1.0 - p[pEPS]) * y[1]) - (p[pMU] + p[pSIGMA]) * y[2]
    out[3] = p[pP] * p[pSIGMA] * y[2] - (p[pGAMMA_S] + p[pDELTA_S] + u[2] + p[pMU]) * y[3]
    out[4] = (1.0 - p[pP]) * p[pSIGMA] * y[2] - (p[pGAMMA_A] + p[pMU]) * y[4]
    out[5] = u[2] * y[3] - (p[pGAMMA_H] + p[pDELTA_H] + p[pMU]) * y[5]
    out[6] = p[pDELTA_S] * y[3] + p[pDELTA_H] * y[5] - (u[3] + p[pMU_D]) * y[6]
    out[7] = p[pGAMMA_S] * y[3] + p[pGAMMA_A] * y[4] + p[pGAMMA_H] * y[5] - p[pMU] * y[7]
    return 0


cdef void _adjoint_rates(double* p, double* lam, double* y, double* u,
                         double* A, double* out) noexcept nogil:
    cdef double one_eps = 1.0 - p[pEPS]
    cdef double N = y[0] + y[1] + y[2] + y[3] + y[4] + y[5] + y[7]
    cdef double gma = y[3] + p[pETA_A] * y[4] + p[pETA_D] * y[6]
    cdef double bgn2 = p[pBETA] * gma / (N * N)
    cdef double P = lam[0] * y[0] + one_eps * lam[1] * y[1] - lam[2] * (y[0] + one_eps * y[1])
    cdef double k = 1.0 - u[0]
    out[0] = ((p[pMU] + u[1]) * lam[0] - u[1] * lam[1]
              + k * bgn2 * ((lam[0] - lam[2]) * (N - y[0]) - one_eps * (lam[1] - lam[2]) * y[1]))
    out[1] = (-p[pOMEGA] * lam[0] + (p[pMU] + p[pOMEGA]) * lam[1]
              + k * bgn2 * (one_eps * (lam[1] - lam[2]) * (N - y[1]) - (lam[0] - lam[2]) * y[0]))
    out[2] = ((p[pSIGMA] + p[pMU]) * lam[2]
              - p[pP] * p[pSIGMA] * lam[3] - (1.0 - p[pP]) * p[pSIGMA] * lam[4]
              - k * bgn2 * P)
    out[3] = (-A[0] + (p[pGAMMA_S] + p[pDELTA_S] + u[2] + p[pMU]) * lam[3]
              - u[2] * lam[5] - p[pDELTA_S] * lam[6] - p[pGAMMA_S] * lam[7]
              + k * (p[pBETA] / N) * (1.0 - gma / N) * P)
    out[4] = (-A[1] + (p[pGAMMA_A] + p[pMU]) * lam[4] - p[pGAMMA_A] * lam[7]
              + k * (p[pBETA] / N) * (p[pETA_A] - gma / N) * P)
    out[5] = (-A[2] + (p[pGAMMA_H] + p[pDELTA_H] + p[pMU]) * lam[5]
              - p[pDELTA_H] * lam[6] - p[pGAMMA_H] * lam[7]
              - k * bgn2 * P)
    out[6] = -A[3] + (u[3] + p[pMU_D]) * lam[6] + k * (p[pBETA] * p[pETA_D] / N) * P
    out[7] = p[pMU] * lam[7] - k * bgn2 * P


# ---------------------------------------------------------------------------
# schedule interpolation and dense output

cdef Py_ssize_t _bisect_right(double* xs, Py_ssize_t m, double x) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = m, mid
    while lo < hi:
        mid = (lo + hi) // 2
        if x < xs[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


cdef void _interp_u(double* ut, double* uv, Py_ssize_t m, double t,
                    double* out) noexcept nogil:
    cdef Py_ssize_t j, idx
    cdef double lo, hi
    if t <= ut[0]:
        for j in range(4):
            out[j] = uv[j]
        return
    if t >= ut[m - 1]:
        for j in range(4):
            out[j] = uv[(m - 1) * 4 + j]
        return
    idx = _bisect_right(ut, m, t) - 1
    if idx > m - 2:
        idx = m - 2
    for j in range(4):
        lo = uv[idx * 4 + j]
        hi = uv[(idx + 1) * 4 + j]
        out[j] = (hi - lo) / (ut[idx + 1] - ut[idx]) * (t - ut[idx]) + lo


cdef void _hermite8(double* ts, double* ys, double* fs, Py_ssize_t m,
                    double t, double* out) noexcept nogil:
    cdef Py_ssize_t idx, d
    cdef double h, s, h00, h10, h01, h11
    if t < ts[0]:
        t = ts[0]
    if t > ts[m - 1]:
        t = ts[m - 1]
    idx = _bisect_right(ts, m, t) - 1
    if idx < 0:
        idx = 0
    if idx > m - 2:
        idx = m - 2
    h = ts[idx + 1] - ts[idx]
    s = (t - ts[idx]) / h
    h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s)
    h10 = s * (1.0 - s) * (1.0 - s)
    h01 = s * s * (3.0 - 2.0 * s)
    h11 = s * s * (s - 1.0)
    for d in range(8):
        out[d] = (h00 * ys[idx * 8 + d] + h10 * h * fs[idx * 8 + d]
                  + h01 * ys[(idx + 1) * 8 + d] + h11 * h * fs[(idx + 1) * 8 + d])


# ---------------------------------------------------------------------------
# right-hand-side dispatch

ctypedef int (*rhs_fn)(void*, double, double*, double*) noexcept nogil

cdef struct ModelCtx:
    double* p
    double* ut
    double* uv
    Py_ssize_t nu

cdef struct AdjCtx:
    double* p
    double* A
    double T
    double* ft
    double* fy
    double* ff
    Py_ssize_t nf
    double* ut
    double* uv
    Py_ssize_t nu


cdef int _model_rhs(void* vctx, double t, double* y, double* out) noexcept nogil:
    cdef ModelCtx* c = <ModelCtx*> vctx
    cdef double u[4]
    if c.nu > 0:
        _interp_u(c.ut, c.uv, c.nu, t, u)
        return _rhs_con(c.p, y, u, out)
    return _rhs_unc(c.p, y, out)


cdef int _adj_rhs(void* vctx, double tau, double* lam, double* out) noexcept nogil:
    cdef AdjCtx* c = <AdjCtx*> vctx
    cdef double yx[8]
    cdef double u[4]
    cdef double g[8]
    cdef double t = c.T - tau
    cdef Py_ssize_t d
    _hermite8(c.ft, c.fy, c.ff, c.nf, t, yx)
    _interp_u(c.ut, c.uv, c.nu, t, u)
    _adjoint_rates(c.p, lam, yx, u, c.A, g)
    for d in range(8):
        out[d] = -g[d]
    return 0


# ---------------------------------------------------------------------------
# adaptive Fehlberg driver

cdef int _rkf45_step(rhs_fn rhs, void* ctx, double t, double* y, double h,
                     double* k1, double* y5, double* y4) noexcept nogil:
    cdef double k2[8]
    cdef double k3[8]
    cdef double k4[8]
    cdef double k5[8]
    cdef double k6[8]
    cdef double yt[8]
    cdef Py_ssize_t d
    for d in range(8):
        yt[d] = y[d] + h * ((1.0 / 4.0) * k1[d])
    if rhs(ctx, t + (1.0 / 4.0) * h, yt, k2):
        return 1
    for d in range(8):
        yt[d] = y[d] + h * ((3.0 / 32.0) * k1[d] + (9.0 / 32.0) * k2[d])
    if rhs(ctx, t + (3.0 / 8.0) * h, yt, k3):
        return 1
    for d in range(8):
        yt[d] = y[d] + h * ((1932.0 / 2197.0) * k1[d] + (-7200.0 / 2197.0) * k2[d]
                            + (7296.0 / 2197.0) * k3[d])
    if rhs(ctx, t + (12.0 / 13.0) * h, yt, k4):
        return 1
    for d in range(8):
        yt[d] = y[d] + h * ((439.0 / 216.0) * k1[d] + (-8.0) * k2[d]
                            + (3680.0 / 513.0) * k3[d] + (-845.0 / 4104.0) * k4[d])
    if rhs(ctx, t + 1.0 * h, yt, k5):
        return 1
    for d in range(8):
        yt[d] = y[d] + h * ((-8.0 / 27.0) * k1[d] + 2.0 * k2[d]
                            + (-3544.0 / 2565.0) * k3[d] + (1859.0 / 4104.0) * k4[d]
                            + (-11.0 / 40.0) * k5[d])
    if rhs(ctx, t + (1.0 / 2.0) * h, yt, k6):
        return 1
    for d in range(8):
        y5[d] = y[d] + h * ((16.0 / 135.0) * k1[d] + (6656.0 / 12825.0) * k3[d]
                            + (28561.0 / 56430.0) * k4[d] + (-9.0 / 50.0) * k5[d]
                            + (2.0 / 55.0) * k6[d])
        y4[d] = y[d] + h * ((25.0 / 216.0) * k1[d] + (1408.0 / 2565.0) * k3[d]
                            + (2197.0 / 4104.0) * k4[d] + (-1.0 / 5.0) * k5[d])
    return 0


cdef tuple _adaptive_drive(rhs_fn rhs, void* ctx, double* y0, double t0, double T,
                           double rel_tol, double abs_tol, double h_min, double h_max,
                           double h_init, double safety, double err_exp,
                           long max_steps, bint clip_neg):
    cdef double y[8]
    cdef double f[8]
    cdef double y5[8]
    cdef double y4[8]
    cdef double t = t0, h = h_init
    cdef double h_step, delta, tol, h_opt, low, ssq, ysq, end_gap
    cdef long accepted = 0, rejected = 0
    cdef int status = 0
    cdef Py_ssize_t d, n = 0, cap = 4096
    times_arr = np.empty(cap)
    states_arr = np.empty((cap, 8))
    derivs_arr = np.empty((cap, 8))
    cdef double[::1] tv = times_arr
    cdef double[:, ::1] sv = states_arr
    cdef double[:, ::1] dv = derivs_arr

    for d in range(8):
        y[d] = y0[d]
    if rhs(ctx, t, y, f):
        status = 3
        for d in range(8):
            f[d] = 0.0
    tv[0] = t
    for d in range(8):
        sv[0, d] = y[d]
        dv[0, d] = f[d]
    n = 1

    end_gap = 1e-14 * fmax(1.0, fabs(T))
    while status == 0 and t < T - end_gap:
        if accepted + rejected >= max_steps:
            status = 1
            break
        h_step = fmin(h, T - t)
        if _rkf45_step(rhs, ctx, t, y, h_step, f, y5, y4):
            status = 3
            break
        ssq = 0.0
        ysq = 0.0
        for d in range(8):
            ssq += (y5[d] - y4[d]) * (y5[d] - y4[d])
            ysq += y5[d] * y5[d]
        delta = csqrt(ssq)
        tol = rel_tol * csqrt(ysq) + abs_tol
        if delta > 0.0:
            h_opt = safety * h_step * cpow(tol / delta, err_exp)
        else:
            h_opt = h_max
        if delta <= tol:
            t = t + h_step
            for d in range(8):
                y[d] = y5[d]
            if clip_neg:
                low = y[0]
                for d in range(1, 8):
                    if y[d] < low:
                        low = y[d]
                if low < -1e-9:
                    status = 3
                    break
                for d in range(8):
                    if y[d] < 0.0:
                        y[d] = 0.0
            if rhs(ctx, t, y, f):
                status = 3
                break
            if n == cap:
                cap = cap * 2
                new_t = np.empty(cap)
                new_t[:n] = times_arr[:n]
                new_s = np.empty((cap, 8))
                new_s[:n] = states_arr[:n]
                new_d = np.empty((cap, 8))
                new_d[:n] = derivs_arr[:n]
                times_arr = new_t
                states_arr = new_s
                derivs_arr = new_d
                tv = times_arr
                sv = states_arr
                dv = derivs_arr
            tv[n] = t
            for d in range(8):
                sv[n, d] = y[d]
                dv[n, d] = f[d]
            n += 1
            accepted += 1
            h = fmin(h_max, fmax(h_min, h_opt))
        else:
            rejected += 1
            if h_step <= h_min * (1.0 + 1e-12):
                status = 2
                break
            h = fmax(h_min, h_opt)

    return (times_arr[:n].copy(), states_arr[:n].copy(), derivs_arr[:n].copy(),
            accepted, rejected, status)


# ---------------------------------------------------------------------------
# public drivers

def rkf45_model(par, y0, double t0, double T, double rel_tol, double abs_tol,
                double h_min, double h_max, double h_init, double safety,
                double error_exponent, long max_steps,
                u_times=None, u_values=None):
    """Adaptive forward solve of the (possibly controlled) model."""
    if T <= t0:
        raise ValueError("need T > t0")
    par_a = np.ascontiguousarray(par, dtype=np.float64)
    y0_a = np.ascontiguousarray(y0, dtype=np.float64)
    if par_a.shape[0] != 18:
        raise ValueError("parameter array must have 18 entries")
    if y0_a.shape[0] != 8:
        raise ValueError("state vector must have 8 entries")
    cdef double[::1] pmv = par_a
    cdef double[::1] ymv = y0_a
    cdef double[::1] utv
    cdef double[:, ::1] uvv
    cdef ModelCtx ctx
    ctx.p = &pmv[0]
    ctx.ut = NULL
    ctx.uv = NULL
    ctx.nu = 0
    if u_times is not None:
        ut_a = np.ascontiguousarray(u_times, dtype=np.float64)
        uv_a = np.ascontiguousarray(u_values, dtype=np.float64)
        if uv_a.ndim != 2 or uv_a.shape[1] != 4 or uv_a.shape[0] != ut_a.shape[0]:
            raise ValueError("control schedule must pair (n,) times with (n, 4) values")
        utv = ut_a
        uvv = uv_a
        ctx.ut = &utv[0]
        ctx.uv = &uvv[0, 0]
        ctx.nu = ut_a.shape[0]
    return _adaptive_drive(_model_rhs, <void*> &ctx, &ymv[0], t0, T,
                           rel_tol, abs_tol, h_min, h_max, h_init, safety,
                           error_exponent, max_steps, True)


def abm_model(par, y0, double t0, double T, double alpha, Py_ssize_t n_steps,
              u_times=None, u_values=None):
    """Fractional predictor-corrector forward solve on a uniform grid."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if n_steps < 2:
        raise ValueError("n_steps must be at least 2")
    if T <= t0:
        raise ValueError("need T > t0")
    par_a = np.ascontiguousarray(par, dtype=np.float64)
    y0_a = np.ascontiguousarray(y0, dtype=np.float64)
    if par_a.shape[0] != 18:
        raise ValueError("parameter array must have 18 entries")
    if y0_a.shape[0] != 8:
        raise ValueError("state vector must have 8 entries")

    h = (T - t0) / n_steps
    times = t0 + h * np.arange(n_steps + 1)
    states = np.empty((n_steps + 1, 8))
    rates = np.empty((n_steps + 1, 8))
    k = np.arange(n_steps + 1, dtype=np.float64)
    pred_w = (k + 1.0) ** alpha - k ** alpha
    corr_w = ((k + 2.0) ** (alpha + 1.0) + k ** (alpha + 1.0)
              - 2.0 * (k + 1.0) ** (alpha + 1.0))
    n_idx = np.arange(n_steps, dtype=np.float64)
    head_w = n_idx ** (alpha + 1.0) - (n_idx - alpha) * (n_idx + 1.0) ** alpha
    cdef double pre_pred = h ** alpha / math.gamma(alpha + 1.0)
    cdef double pre_corr = h ** alpha / math.gamma(alpha + 2.0)

    cdef double[::1] pmv = par_a
    cdef double[::1] ymv = y0_a
    cdef double[::1] utv
    cdef double[:, ::1] uvv
    cdef ModelCtx ctx
    ctx.p = &pmv[0]
    ctx.ut = NULL
    ctx.uv = NULL
    ctx.nu = 0
    if u_times is not None:
        ut_a = np.ascontiguousarray(u_times, dtype=np.float64)
        uv_a = np.ascontiguousarray(u_values, dtype=np.float64)
        if uv_a.ndim != 2 or uv_a.shape[1] != 4 or uv_a.shape[0] != ut_a.shape[0]:
            raise ValueError("control schedule must pair (n,) times with (n, 4) values")
        utv = ut_a
        uvv = uv_a
        ctx.ut = &utv[0]
        ctx.uv = &uvv[0, 0]
        ctx.nu = ut_a.shape[0]

    cdef double[::1] tmv = times
    cdef double[:, ::1] smv = states
    cdef double[:, ::1] rmv = rates
    cdef double[::1] pw = pred_w
    cdef double[::1] cw = corr_w
    cdef double[::1] hw = head_w
    cdef double ypred[8]
    cdef double fpred[8]
    cdef double ynew[8]
    cdef double acc, low
    cdef Py_ssize_t nn, j, d, n_done = 0
    cdef int status = 0

    for d in range(8):
        smv[0, d] = ymv[d]
    if _model_rhs(<void*> &ctx, tmv[0], &smv[0, 0], &rmv[0, 0]):
        return times[:1].copy(), states[:1].copy(), np.zeros((1, 8)), 3

    for nn in range(n_steps):
        for d in range(8):
            acc = 0.0
            for j in range(nn + 1):
                acc += pw[nn - j] * rmv[j, d]
            ypred[d] = smv[0, d] + pre_pred * acc
        if _model_rhs(<void*> &ctx, tmv[nn + 1], ypred, fpred):
            status = 3
            n_done = nn
            break
        for d in range(8):
            acc = 0.0
            for j in range(1, nn + 1):
                acc += cw[nn - j] * rmv[j, d]
            ynew[d] = smv[0, d] + pre_corr * (hw[nn] * rmv[0, d] + acc + fpred[d])
        low = ynew[0]
        for d in range(1, 8):
            if ynew[d] < low:
                low = ynew[d]
        if low < -1e-9:
            status = 3
            n_done = nn
            break
        for d in range(8):
            if ynew[d] < 0.0:
                ynew[d] = 0.0
            smv[nn + 1, d] = ynew[d]
        if _model_rhs(<void*> &ctx, tmv[nn + 1], ynew, &rmv[nn + 1, 0]):
            status = 3
            n_done = nn
            break
        n_done = nn + 1

    if status == 0:
        return times, states, rates, 0
    return (times[:n_done + 1].copy(), states[:n_done + 1].copy(),
            rates[:n_done + 1].copy(), status)


def rkf45_adjoint(par, burden, fwd_times, fwd_states, fwd_derivs,
                  u_times, u_values, double T, double rel_tol, double abs_tol,
                  double h_min, double h_max, double h_init, double safety,
                  double error_exponent, long max_steps):
    """Backward costate solve on the reversed clock tau = T - t."""
    if T <= 0.0:
        raise ValueError("need T > t0")
    par_a = np.ascontiguousarray(par, dtype=np.float64)
    burden_a = np.ascontiguousarray(burden, dtype=np.float64)
    ft_a = np.ascontiguousarray(fwd_times, dtype=np.float64)
    fy_a = np.ascontiguousarray(fwd_states, dtype=np.float64)
    ff_a = np.ascontiguousarray(fwd_derivs, dtype=np.float64)
    ut_a = np.ascontiguousarray(u_times, dtype=np.float64)
    uv_a = np.ascontiguousarray(u_values, dtype=np.float64)
    if par_a.shape[0] != 18:
        raise ValueError("parameter array must have 18 entries")
    if burden_a.shape[0] != 4:
        raise ValueError("burden array must have 4 entries")
    if fy_a.ndim != 2 or fy_a.shape[1] != 8 or fy_a.shape[0] != ft_a.shape[0]:
        raise ValueError("forward states must be (n, 8) matching (n,) times")
    if ff_a.shape[0] != fy_a.shape[0] or ff_a.shape[1] != 8:
        raise ValueError("forward derivatives must match forward states")
    if ft_a.shape[0] < 2:
        raise ValueError("need at least two forward nodes")
    if uv_a.ndim != 2 or uv_a.shape[1] != 4 or uv_a.shape[0] != ut_a.shape[0]:
        raise ValueError("control schedule must pair (n,) times with (n, 4) values")

    cdef double[::1] pmv = par_a
    cdef double[::1] bmv = burden_a
    cdef double[::1] ftv = ft_a
    cdef double[:, ::1] fyv = fy_a
    cdef double[:, ::1] ffv = ff_a
    cdef double[::1] utv = ut_a
    cdef double[:, ::1] uvv = uv_a
    cdef double lam0[8]
    cdef Py_ssize_t d
    for d in range(8):
        lam0[d] = 0.0
    cdef AdjCtx ctx
    ctx.p = &pmv[0]
    ctx.A = &bmv[0]
    ctx.T = T
    ctx.ft = &ftv[0]
    ctx.fy = &fyv[0, 0]
    ctx.ff = &ffv[0, 0]
    ctx.nf = ft_a.shape[0]
    ctx.ut = &utv[0]
    ctx.uv = &uvv[0, 0]
    ctx.nu = ut_a.shape[0]
    return _adaptive_drive(_adj_rhs, <void*> &ctx, lam0, 0.0, T,
                           rel_tol, abs_tol, h_min, h_max, h_init, safety,
                           error_exponent, max_steps, False)
