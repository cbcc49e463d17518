# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel backend (Cython).

Mirrors ``rsmd._kernels._pure`` function-for-function with the same
algorithms: derivative-sign coordinate bisection nested in scalar
multiplier bisections for the composite prox, and a tight C loop for the
Euclidean mirror-descent recursion. Behavioural parity with the pure
backend is enforced by tests/test_kernels.py.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs, log, pow, sqrt

cnp.import_array()

PEN_ZERO, PEN_L1, PEN_POWER, PEN_ENTROPY = 0, 1, 2, 3
SET_L2BALL, SET_BOX, SET_SIMPLEX, SET_L1BALL = 0, 1, 2, 3
EXTRA_NONE = -1

DEF C_PEN_ZERO = 0
DEF C_PEN_L1 = 1
DEF C_PEN_POWER = 2
DEF C_PEN_ENTROPY = 3
DEF C_SET_L2BALL = 0
DEF C_SET_BOX = 1
DEF C_SET_SIMPLEX = 2
DEF C_SET_L1BALL = 3
DEF C_EXTRA_NONE = -1

DEF TINY = 1e-300
DEF COORD_ITERS = 108


cdef inline double _sign(double v) nogil:
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


cdef inline double _pen_deriv(double z, int pen_kind, double pen_w, double pen_p) nogil:
    if pen_kind == C_PEN_ZERO or pen_w == 0.0:
        return 0.0
    if pen_kind == C_PEN_L1:
        return pen_w * _sign(z)
    if pen_kind == C_PEN_POWER:
        return pen_w * pen_p * _sign(z) * pow(fabs(z), pen_p - 1.0)
    if z < TINY:
        return pen_w * (log(TINY) + 1.0)
    return pen_w * (log(z) + 1.0)


cdef inline double _obj_deriv(double z, double lin, int pen_kind, double pen_w,
                              double pen_p, double prox_coef, double t,
                              double p_prox, double kq, double mq,
                              double w1, double c1, double w2, double c2) nogil:
    cdef double d = lin + _pen_deriv(z, pen_kind, pen_w, pen_p)
    cdef double u
    if prox_coef != 0.0:
        u = z - t
        if p_prox == 2.0:
            d += 2.0 * prox_coef * u
        else:
            d += prox_coef * p_prox * _sign(u) * pow(fabs(u), p_prox - 1.0)
    if kq != 0.0:
        d += kq * (z - mq)
    if w1 != 0.0:
        d += w1 * _sign(z - c1)
    if w2 != 0.0:
        d += w2 * _sign(z - c2)
    return d


cdef double _coord_solve(double lo, double hi, double lin, int pen_kind,
                         double pen_w, double pen_p, double prox_coef, double t,
                         double p_prox, double kq, double mq,
                         double w1, double c1, double w2, double c2) nogil:
    """Minimize one coordinate's convex objective on [lo, hi] by bisection
    on the (nondecreasing) subderivative sign."""
    cdef double dlo, dhi, mid, dm
    cdef int it
    dlo = _obj_deriv(lo, lin, pen_kind, pen_w, pen_p, prox_coef, t, p_prox,
                     kq, mq, w1, c1, w2, c2)
    if dlo >= 0.0:
        return lo
    dhi = _obj_deriv(hi, lin, pen_kind, pen_w, pen_p, prox_coef, t, p_prox,
                     kq, mq, w1, c1, w2, c2)
    if dhi <= 0.0:
        return hi
    for it in range(COORD_ITERS):
        if hi - lo <= 0.0:
            break
        mid = 0.5 * (lo + hi)
        dm = _obj_deriv(mid, lin, pen_kind, pen_w, pen_p, prox_coef, t, p_prox,
                        kq, mq, w1, c1, w2, c2)
        if dm >= 0.0:
            hi = mid
        if dm <= 0.0:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# generic separable engine
# ---------------------------------------------------------------------------


cdef struct ProxSpec:
    int n
    double prox_coef
    double p_prox
    int pen_kind
    double pen_w
    double pen_p
    int set_kind
    double set_r
    int extra_kind
    double extra_r
    double tol


cdef void _inner_solve(double[::1] z, const double[::1] a, double nu,
                       double mu_set, double mu_extra, ProxSpec* sp,
                       const double[::1] prox_center, const double[::1] set_c,
                       const double[::1] extra_c, const double[::1] lo,
                       const double[::1] hi) nogil:
    cdef int j
    cdef double kq, mq, w1, c1, w2, c2, lin
    for j in range(sp.n):
        kq = 0.0
        mq = 0.0
        w1 = 0.0
        c1 = 0.0
        w2 = 0.0
        c2 = 0.0
        if sp.set_kind == C_SET_L2BALL:
            kq += mu_set
            mq += mu_set * set_c[j]
        elif sp.set_kind == C_SET_L1BALL:
            w1 = mu_set
            c1 = set_c[j]
        if sp.extra_kind == C_SET_L2BALL:
            kq += mu_extra
            mq += mu_extra * extra_c[j]
        elif sp.extra_kind == C_SET_L1BALL:
            w2 = mu_extra
            c2 = extra_c[j]
        if kq > 0.0:
            mq = mq / kq
        lin = a[j] + nu if sp.set_kind == C_SET_SIMPLEX else a[j]
        z[j] = _coord_solve(lo[j], hi[j], lin, sp.pen_kind, sp.pen_w, sp.pen_p,
                            sp.prox_coef, prox_center[j], sp.p_prox,
                            kq, mq, w1, c1, w2, c2)


cdef double _ball_resid(const double[::1] z, int kind, const double[::1] c,
                        double r, int n) nogil:
    cdef double acc = 0.0
    cdef int j
    if kind == C_SET_L2BALL:
        for j in range(n):
            acc += (z[j] - c[j]) * (z[j] - c[j])
        return sqrt(acc) - r
    for j in range(n):
        acc += fabs(z[j] - c[j])
    return acc - r


cdef double _sum(const double[::1] z, int n) nogil:
    cdef double acc = 0.0
    cdef int j
    for j in range(n):
        acc += z[j]
    return acc


cdef void _solve_set(double[::1] z, const double[::1] a, double mu_extra,
                     ProxSpec* sp, const double[::1] prox_center,
                     const double[::1] set_c, const double[::1] extra_c,
                     const double[::1] lo, const double[::1] hi) nogil:
    """Solve with the extra multiplier fixed: dualize the set constraint."""
    cdef double feas_tol, nu_lo, nu_hi, nu, mid, fm, mu_hi, mu, scale
    cdef int it, j
    if sp.set_kind == C_SET_BOX:
        _inner_solve(z, a, 0.0, 0.0, mu_extra, sp, prox_center, set_c, extra_c, lo, hi)
        return
    feas_tol = sp.tol * max(1.0, sp.set_r)
    scale = 1.0
    for j in range(sp.n):
        if fabs(a[j]) > scale:
            scale = fabs(a[j])
    if sp.set_r > scale:
        scale = sp.set_r
    if sp.set_kind == C_SET_SIMPLEX:
        nu_lo = -scale
        nu_hi = scale
        _inner_solve(z, a, nu_lo, 0.0, mu_extra, sp, prox_center, set_c, extra_c, lo, hi)
        while _sum(z, sp.n) - sp.set_r < 0.0 and nu_lo > -1e300:
            nu_lo *= 2.0
            _inner_solve(z, a, nu_lo, 0.0, mu_extra, sp, prox_center, set_c, extra_c, lo, hi)
        _inner_solve(z, a, nu_hi, 0.0, mu_extra, sp, prox_center, set_c, extra_c, lo, hi)
        while _sum(z, sp.n) - sp.set_r > 0.0 and nu_hi < 1e300:
            nu_hi *= 2.0
            _inner_solve(z, a, nu_hi, 0.0, mu_extra, sp, prox_center, set_c, extra_c, lo, hi)
        nu = nu_hi
        for it in range(160):
            mid = 0.5 * (nu_lo + nu_hi)
            if mid == nu_lo or mid == nu_hi:
                nu = nu_hi
                break
            _inner_solve(z, a, mid, 0.0, mu_extra, sp, prox_center, set_c, extra_c, lo, hi)
            fm = _sum(z, sp.n) - sp.set_r
            if fabs(fm) <= feas_tol:
                nu = mid
                break
            if fm > 0.0:
                nu_lo = mid
            else:
                nu_hi = mid
            nu = nu_hi
        _inner_solve(z, a, nu, 0.0, mu_extra, sp, prox_center, set_c, extra_c, lo, hi)
        return
    # ball-constrained set (l2 or l1 ball)
    _inner_solve(z, a, 0.0, 0.0, mu_extra, sp, prox_center, set_c, extra_c, lo, hi)
    if _ball_resid(z, sp.set_kind, set_c, sp.set_r, sp.n) <= feas_tol:
        return
    mu_hi = 1e-8
    _inner_solve(z, a, 0.0, mu_hi, mu_extra, sp, prox_center, set_c, extra_c, lo, hi)
    while _ball_resid(z, sp.set_kind, set_c, sp.set_r, sp.n) > 0.0 and mu_hi < 1e300:
        mu_hi *= 4.0
        _inner_solve(z, a, 0.0, mu_hi, mu_extra, sp, prox_center, set_c, extra_c, lo, hi)
    cdef double mu_lo = 0.0
    mu = mu_hi
    for it in range(160):
        mid = 0.5 * (mu_lo + mu_hi)
        if mid == mu_lo or mid == mu_hi:
            mu = mu_hi
            break
        _inner_solve(z, a, 0.0, mid, mu_extra, sp, prox_center, set_c, extra_c, lo, hi)
        fm = _ball_resid(z, sp.set_kind, set_c, sp.set_r, sp.n)
        if fabs(fm) <= feas_tol:
            mu = mid
            break
        if fm > 0.0:
            mu_lo = mid
        else:
            mu_hi = mid
        mu = mu_hi
    _inner_solve(z, a, 0.0, mu, mu_extra, sp, prox_center, set_c, extra_c, lo, hi)


cdef void _polish_c(double[::1] z, ProxSpec* sp, const double[::1] set_c,
                    const double[::1] set_d, const double[::1] extra_c) nogil:
    cdef int j, n = sp.n
    cdef double s, nrm
    if sp.set_kind == C_SET_BOX:
        for j in range(n):
            if z[j] < set_c[j]:
                z[j] = set_c[j]
            if z[j] > set_d[j]:
                z[j] = set_d[j]
    elif sp.set_kind == C_SET_SIMPLEX:
        s = 0.0
        for j in range(n):
            if z[j] < 0.0:
                z[j] = 0.0
            s += z[j]
        if s > 0.0:
            for j in range(n):
                z[j] *= sp.set_r / s
    elif sp.set_kind == C_SET_L2BALL:
        nrm = 0.0
        for j in range(n):
            nrm += (z[j] - set_c[j]) * (z[j] - set_c[j])
        nrm = sqrt(nrm)
        if nrm > sp.set_r:
            for j in range(n):
                z[j] = set_c[j] + (z[j] - set_c[j]) * (sp.set_r / nrm)
    else:
        s = 0.0
        for j in range(n):
            s += fabs(z[j] - set_c[j])
        if s > sp.set_r:
            for j in range(n):
                z[j] = set_c[j] + (z[j] - set_c[j]) * (sp.set_r / s)
    if sp.extra_kind == C_SET_L2BALL:
        nrm = 0.0
        for j in range(n):
            nrm += (z[j] - extra_c[j]) * (z[j] - extra_c[j])
        nrm = sqrt(nrm)
        if nrm > sp.extra_r:
            for j in range(n):
                z[j] = extra_c[j] + (z[j] - extra_c[j]) * (sp.extra_r / nrm)
    elif sp.extra_kind == C_SET_L1BALL:
        s = 0.0
        for j in range(n):
            s += fabs(z[j] - extra_c[j])
        if s > sp.extra_r:
            for j in range(n):
                z[j] = extra_c[j] + (z[j] - extra_c[j]) * (sp.extra_r / s)


cdef void _generic_prox(double[::1] z, const double[::1] a, ProxSpec* sp,
                        const double[::1] prox_center, const double[::1] set_c,
                        const double[::1] set_d, const double[::1] extra_c,
                        const double[::1] lo, const double[::1] hi,
                        int max_alt) nogil:
    cdef double mu_extra = 0.0, r_extra, mu_hi, mu_lo, mid, fm, feas_tol
    cdef int it, k
    _solve_set(z, a, 0.0, sp, prox_center, set_c, extra_c, lo, hi)
    if sp.extra_kind == C_EXTRA_NONE:
        _polish_c(z, sp, set_c, set_d, extra_c)
        return
    feas_tol = sp.tol * max(1.0, sp.extra_r)
    for k in range(max_alt):
        r_extra = _ball_resid(z, sp.extra_kind, extra_c, sp.extra_r, sp.n)
        if r_extra <= feas_tol:
            break
        mu_hi = max(mu_extra, 1e-8)
        _solve_set(z, a, mu_hi, sp, prox_center, set_c, extra_c, lo, hi)
        while _ball_resid(z, sp.extra_kind, extra_c, sp.extra_r, sp.n) > 0.0 \
                and mu_hi < 1e300:
            mu_hi *= 4.0
            _solve_set(z, a, mu_hi, sp, prox_center, set_c, extra_c, lo, hi)
        mu_lo = 0.0
        mu_extra = mu_hi
        for it in range(160):
            mid = 0.5 * (mu_lo + mu_hi)
            if mid == mu_lo or mid == mu_hi:
                mu_extra = mu_hi
                break
            _solve_set(z, a, mid, sp, prox_center, set_c, extra_c, lo, hi)
            fm = _ball_resid(z, sp.extra_kind, extra_c, sp.extra_r, sp.n)
            if fabs(fm) <= feas_tol:
                mu_extra = mid
                break
            if fm > 0.0:
                mu_lo = mid
            else:
                mu_hi = mid
            mu_extra = mu_hi
        _solve_set(z, a, mu_extra, sp, prox_center, set_c, extra_c, lo, hi)
    _polish_c(z, sp, set_c, set_d, extra_c)


cdef void _coordinate_bounds_c(double[::1] lo, double[::1] hi, ProxSpec* sp,
                               const double[::1] set_c, const double[::1] set_d,
                               const double[::1] extra_c) nogil:
    cdef int j
    for j in range(sp.n):
        if sp.set_kind == C_SET_BOX:
            lo[j] = set_c[j]
            hi[j] = set_d[j]
        elif sp.set_kind == C_SET_SIMPLEX:
            lo[j] = 0.0
            hi[j] = sp.set_r
        else:
            lo[j] = set_c[j] - sp.set_r
            hi[j] = set_c[j] + sp.set_r
        if sp.extra_kind != C_EXTRA_NONE:
            if extra_c[j] - sp.extra_r > lo[j]:
                lo[j] = extra_c[j] - sp.extra_r
            if extra_c[j] + sp.extra_r < hi[j]:
                hi[j] = extra_c[j] + sp.extra_r
        if hi[j] < lo[j]:
            hi[j] = lo[j]


# ---------------------------------------------------------------------------
# exact Euclidean projections
# ---------------------------------------------------------------------------


cdef void _project_l2_ball_c(double[::1] z, const double[::1] v,
                             const double[::1] c, double r, int n) nogil:
    cdef double nrm = 0.0
    cdef int j
    for j in range(n):
        nrm += (v[j] - c[j]) * (v[j] - c[j])
    nrm = sqrt(nrm)
    if nrm <= r:
        for j in range(n):
            z[j] = v[j]
    else:
        for j in range(n):
            z[j] = c[j] + (v[j] - c[j]) * (r / nrm)


cdef void _project_simplex_c(double[::1] z, const double[::1] v, double s,
                             double[::1] u, int n) nogil:
    """Sort-based simplex projection; u is an n-sized work buffer."""
    cdef int i, j, rho
    cdef double key, css, theta
    for i in range(n):
        u[i] = v[i]
    # insertion sort, descending (n is small in this library's regime)
    for i in range(1, n):
        key = u[i]
        j = i - 1
        while j >= 0 and u[j] < key:
            u[j + 1] = u[j]
            j -= 1
        u[j + 1] = key
    css = 0.0
    rho = 0
    theta = 0.0
    cdef double running = 0.0
    for i in range(n):
        running += u[i]
        if u[i] - (running - s) / (i + 1) > 0.0:
            rho = i
            css = running
    theta = (css - s) / (rho + 1.0)
    for i in range(n):
        z[i] = v[i] - theta
        if z[i] < 0.0:
            z[i] = 0.0


cdef void _project_two_balls_c(double[::1] z, const double[::1] v,
                               const double[::1] c1, double r1,
                               const double[::1] c2, double r2,
                               double[::1] w, int n) nogil:
    """Projection onto the intersection of two l2 balls (nonempty)."""
    cdef int j, k
    cdef double d2, dist, x, y2, wn, proj
    _project_l2_ball_c(z, v, c1, r1, n)
    d2 = 0.0
    for j in range(n):
        d2 += (z[j] - c2[j]) * (z[j] - c2[j])
    if sqrt(d2) <= r2 * (1.0 + 1e-12):
        return
    _project_l2_ball_c(z, v, c2, r2, n)
    d2 = 0.0
    for j in range(n):
        d2 += (z[j] - c1[j]) * (z[j] - c1[j])
    if sqrt(d2) <= r1 * (1.0 + 1e-12):
        return
    # doubly active: plane geometry in span{c2-c1, v-c1}
    dist = 0.0
    for j in range(n):
        dist += (c2[j] - c1[j]) * (c2[j] - c1[j])
    dist = sqrt(dist)
    x = (r1 * r1 - r2 * r2 + dist * dist) / (2.0 * dist)
    proj = 0.0
    for j in range(n):
        proj += (v[j] - c1[j]) * ((c2[j] - c1[j]) / dist)
    wn = 0.0
    for j in range(n):
        w[j] = (v[j] - c1[j]) - proj * ((c2[j] - c1[j]) / dist)
        wn += w[j] * w[j]
    wn = sqrt(wn)
    if wn < 1e-15:
        # v on the axis: deterministic perpendicular
        k = 0
        for j in range(1, n):
            if fabs(c2[j] - c1[j]) / dist < fabs(c2[k] - c1[k]) / dist:
                k = j
        for j in range(n):
            w[j] = -((c2[j] - c1[j]) / dist) * ((c2[k] - c1[k]) / dist)
        w[k] += 1.0
        wn = 0.0
        for j in range(n):
            wn += w[j] * w[j]
        wn = sqrt(wn)
    y2 = r1 * r1 - x * x
    if y2 < 0.0:
        y2 = 0.0
    y2 = sqrt(y2)
    for j in range(n):
        z[j] = c1[j] + x * ((c2[j] - c1[j]) / dist) + y2 * (w[j] / wn)


# ---------------------------------------------------------------------------
# python-visible kernels
# ---------------------------------------------------------------------------


def project_l2_ball(v, center, radius):
    v = np.ascontiguousarray(v, dtype=np.float64)
    center = np.ascontiguousarray(center, dtype=np.float64)
    out = np.empty(v.shape[0], dtype=np.float64)
    cdef const double[::1] vv = v
    cdef const double[::1] cv = center
    cdef double[::1] ov = out
    _project_l2_ball_c(ov, vv, cv, float(radius), vv.shape[0])
    return out


def project_simplex(v, scale):
    v = np.ascontiguousarray(v, dtype=np.float64)
    out = np.empty(v.shape[0], dtype=np.float64)
    work = np.empty(v.shape[0], dtype=np.float64)
    cdef const double[::1] vv = v
    cdef double[::1] ov = out
    cdef double[::1] wv = work
    _project_simplex_c(ov, vv, float(scale), wv, vv.shape[0])
    return out


def project_two_l2_balls(v, c1, r1, c2, r2):
    v = np.ascontiguousarray(v, dtype=np.float64)
    c1 = np.ascontiguousarray(c1, dtype=np.float64)
    c2 = np.ascontiguousarray(c2, dtype=np.float64)
    out = np.empty(v.shape[0], dtype=np.float64)
    work = np.empty(v.shape[0], dtype=np.float64)
    cdef const double[::1] vv = v
    cdef const double[::1] c1v = c1
    cdef const double[::1] c2v = c2
    cdef double[::1] ov = out
    cdef double[::1] wv = work
    _project_two_balls_c(ov, vv, c1v, float(r1), c2v, float(r2), wv, vv.shape[0])
    return out


cdef void _soft_clip_inner(double[::1] z, const double[::1] v, double K,
                           double mu, const double[::1] c, double w, int n) nogil:
    """z_j = soft((K v_j + mu c_j)/(K+mu), w/(K+mu)) coordinate-wise."""
    cdef int j
    cdef double m, thr, val
    thr = w / (K + mu)
    for j in range(n):
        m = (K * v[j] + mu * c[j]) / (K + mu)
        if m > thr:
            z[j] = m - thr
        elif m < -thr:
            z[j] = m + thr
        else:
            z[j] = 0.0


cdef int _euclid_fast_c(double[::1] z, const double[::1] a, double prox_coef,
                        const double[::1] prox_center, int pen_kind, double pen_w,
                        ProxSpec* sp, const double[::1] set_c,
                        const double[::1] set_d, const double[::1] extra_c,
                        double[::1] v, double[::1] work) nogil:
    """Closed-form / single-bisection p=2 paths. Returns 1 if handled."""
    cdef int n = sp.n, j, it
    cdef double K = 2.0 * prox_coef
    cdef double feas_tol, mu_lo, mu_hi, mu, mid, fm
    cdef int effective_pen = pen_kind
    if sp.set_kind == C_SET_SIMPLEX and pen_kind == C_PEN_L1:
        effective_pen = C_PEN_ZERO
    for j in range(n):
        v[j] = prox_center[j] - a[j] / K

    if effective_pen == C_PEN_ZERO:
        if sp.set_kind == C_SET_L2BALL and sp.extra_kind == C_EXTRA_NONE:
            _project_l2_ball_c(z, v, set_c, sp.set_r, n)
            return 1
        if sp.set_kind == C_SET_L2BALL and sp.extra_kind == C_SET_L2BALL:
            _project_two_balls_c(z, v, set_c, sp.set_r, extra_c, sp.extra_r, work, n)
            return 1
        if sp.set_kind == C_SET_BOX and sp.extra_kind == C_EXTRA_NONE:
            for j in range(n):
                z[j] = v[j]
                if z[j] < set_c[j]:
                    z[j] = set_c[j]
                if z[j] > set_d[j]:
                    z[j] = set_d[j]
            return 1
        if sp.set_kind == C_SET_SIMPLEX and sp.extra_kind == C_EXTRA_NONE:
            _project_simplex_c(z, v, sp.set_r, work, n)
            return 1
        if sp.set_kind == C_SET_SIMPLEX and sp.extra_kind == C_SET_L2BALL:
            feas_tol = sp.tol * max(1.0, sp.extra_r)
            for j in range(n):
                work[j] = v[j]
            _project_simplex_c(z, work, sp.set_r, v, n)
            if _ball_resid(z, C_SET_L2BALL, extra_c, sp.extra_r, n) <= feas_tol:
                return 1
            # bisect the extra-ball multiplier; inner is a simplex projection
            mu_lo = 0.0
            mu_hi = 1e-8
            while True:
                for j in range(n):
                    work[j] = (K * (prox_center[j] - a[j] / K) + mu_hi * extra_c[j]) / (K + mu_hi)
                _project_simplex_c(z, work, sp.set_r, v, n)
                if _ball_resid(z, C_SET_L2BALL, extra_c, sp.extra_r, n) <= 0.0:
                    break
                if mu_hi >= 1e300:
                    break
                mu_hi *= 4.0
            mu = mu_hi
            for it in range(160):
                mid = 0.5 * (mu_lo + mu_hi)
                if mid == mu_lo or mid == mu_hi:
                    mu = mu_hi
                    break
                for j in range(n):
                    work[j] = (K * (prox_center[j] - a[j] / K) + mid * extra_c[j]) / (K + mid)
                _project_simplex_c(z, work, sp.set_r, v, n)
                fm = _ball_resid(z, C_SET_L2BALL, extra_c, sp.extra_r, n)
                if fabs(fm) <= feas_tol:
                    mu = mid
                    break
                if fm > 0.0:
                    mu_lo = mid
                else:
                    mu_hi = mid
                mu = mu_hi
            for j in range(n):
                work[j] = (K * (prox_center[j] - a[j] / K) + mu * extra_c[j]) / (K + mu)
            _project_simplex_c(z, work, sp.set_r, v, n)
            _polish_c(z, sp, set_c, set_d, extra_c)
            return 1
        return 0

    if pen_kind == C_PEN_L1:
        if sp.set_kind == C_SET_BOX and sp.extra_kind == C_EXTRA_NONE:
            _soft_clip_inner(z, v, K, 0.0, set_c, pen_w, n)
            for j in range(n):
                if z[j] < set_c[j]:
                    z[j] = set_c[j]
                if z[j] > set_d[j]:
                    z[j] = set_d[j]
            return 1
        if sp.set_kind == C_SET_L2BALL and sp.extra_kind == C_EXTRA_NONE:
            feas_tol = sp.tol * max(1.0, sp.set_r)
            _soft_clip_inner(z, v, K, 0.0, set_c, pen_w, n)
            if _ball_resid(z, C_SET_L2BALL, set_c, sp.set_r, n) <= feas_tol:
                return 1
            mu_lo = 0.0
            mu_hi = 1e-8
            _soft_clip_inner(z, v, K, mu_hi, set_c, pen_w, n)
            while _ball_resid(z, C_SET_L2BALL, set_c, sp.set_r, n) > 0.0 and mu_hi < 1e300:
                mu_hi *= 4.0
                _soft_clip_inner(z, v, K, mu_hi, set_c, pen_w, n)
            mu = mu_hi
            for it in range(160):
                mid = 0.5 * (mu_lo + mu_hi)
                if mid == mu_lo or mid == mu_hi:
                    mu = mu_hi
                    break
                _soft_clip_inner(z, v, K, mid, set_c, pen_w, n)
                fm = _ball_resid(z, C_SET_L2BALL, set_c, sp.set_r, n)
                if fabs(fm) <= feas_tol:
                    mu = mid
                    break
                if fm > 0.0:
                    mu_lo = mid
                else:
                    mu_hi = mid
                mu = mu_hi
            _soft_clip_inner(z, v, K, mu, set_c, pen_w, n)
            _polish_c(z, sp, set_c, set_d, extra_c)
            return 1
        return 0
    return 0


cdef int _linear_vertex_c(double[::1] z, const double[::1] a, ProxSpec* sp,
                          const double[::1] set_c, const double[::1] set_d) nogil:
    cdef int n = sp.n, j, jbest
    cdef double nrm, best
    if sp.set_kind == C_SET_L2BALL:
        nrm = 0.0
        for j in range(n):
            nrm += a[j] * a[j]
        nrm = sqrt(nrm)
        for j in range(n):
            z[j] = set_c[j] if nrm == 0.0 else set_c[j] - sp.set_r * a[j] / nrm
        return 1
    if sp.set_kind == C_SET_L1BALL:
        jbest = 0
        best = fabs(a[0])
        for j in range(1, n):
            if fabs(a[j]) > best:
                best = fabs(a[j])
                jbest = j
        for j in range(n):
            z[j] = set_c[j]
        if a[jbest] != 0.0:
            z[jbest] -= sp.set_r * _sign(a[jbest])
        return 1
    if sp.set_kind == C_SET_SIMPLEX:
        jbest = 0
        best = a[0]
        for j in range(1, n):
            if a[j] < best:
                best = a[j]
                jbest = j
        for j in range(n):
            z[j] = 0.0
        z[jbest] = sp.set_r
        return 1
    for j in range(n):
        z[j] = set_c[j] if a[j] > 0.0 else set_d[j]
    return 1


def composite_prox_kernel(a, prox_coef, prox_center, p_prox,
                          pen_kind, pen_w, pen_p,
                          set_kind, set_c, set_d, set_r,
                          extra_kind=EXTRA_NONE, extra_c=None, extra_r=0.0,
                          tol=1e-12, max_alt=80):
    """Minimize <a,z> + pen(z) + prox_coef*sum|z-t|^p over the feasible set."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    cdef int n = a.shape[0]
    prox_center = np.ascontiguousarray(prox_center, dtype=np.float64)
    set_c = np.ascontiguousarray(set_c, dtype=np.float64)
    set_d = np.ascontiguousarray(set_d, dtype=np.float64) if set_d is not None \
        else np.zeros(n)
    extra_c = np.ascontiguousarray(extra_c, dtype=np.float64) if extra_c is not None \
        else np.zeros(n)

    cdef ProxSpec sp
    sp.n = n
    sp.prox_coef = float(prox_coef)
    sp.p_prox = float(p_prox)
    sp.pen_kind = int(pen_kind)
    sp.pen_w = float(pen_w)
    sp.pen_p = float(pen_p)
    sp.set_kind = int(set_kind)
    sp.set_r = float(set_r)
    sp.extra_kind = int(extra_kind)
    sp.extra_r = float(extra_r)
    sp.tol = float(tol)

    out = np.empty(n, dtype=np.float64)
    v = np.empty(n, dtype=np.float64)
    work = np.empty(n, dtype=np.float64)
    cdef double[::1] zv = out
    cdef const double[::1] av = a
    cdef const double[::1] pcv = prox_center
    cdef const double[::1] scv = set_c
    cdef const double[::1] sdv = set_d
    cdef const double[::1] ecv = extra_c
    cdef double[::1] vv = v
    cdef double[::1] wv = work

    if sp.prox_coef > 0.0 and sp.p_prox == 2.0 and \
            sp.pen_kind in (C_PEN_ZERO, C_PEN_L1):
        if _euclid_fast_c(zv, av, sp.prox_coef, pcv, sp.pen_kind, sp.pen_w,
                          &sp, scv, sdv, ecv, vv, wv):
            return out
    if sp.prox_coef == 0.0 and sp.pen_kind == C_PEN_ZERO and \
            sp.extra_kind == C_EXTRA_NONE:
        _linear_vertex_c(zv, av, &sp, scv, sdv)
        return out

    # effective l1 penalty on the simplex is a constant: fold it away
    if sp.set_kind == C_SET_SIMPLEX and sp.pen_kind == C_PEN_L1:
        sp.pen_kind = C_PEN_ZERO
        sp.pen_w = 0.0

    lo = np.empty(n, dtype=np.float64)
    hi = np.empty(n, dtype=np.float64)
    cdef double[::1] lov = lo
    cdef double[::1] hiv = hi
    _coordinate_bounds_c(lov, hiv, &sp, scv, sdv, ecv)
    _generic_prox(zv, av, &sp, pcv, scv, sdv, ecv, lov, hiv, int(max_alt))
    return out


# ---------------------------------------------------------------------------
# whole-run driver (quadratic smooth part, Euclidean geometry)
# ---------------------------------------------------------------------------


def rsmd_loop_euclid(A, bvec, x0, noise, betas,
                     gbar, xbar, lip, thr_const, anchor_term,
                     pen_kind, pen_w, pen_p,
                     set_kind, set_c, set_d, set_r,
                     extra_kind=EXTRA_NONE, extra_c=None, extra_r=0.0,
                     tol=1e-12, record_xi=False):
    """Run N mirror-descent iterations with truncated gradients (see the
    pure backend for the contract)."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    bvec = np.ascontiguousarray(bvec, dtype=np.float64)
    noise = np.ascontiguousarray(noise, dtype=np.float64)
    betas = np.ascontiguousarray(betas, dtype=np.float64)
    gbar = np.ascontiguousarray(gbar, dtype=np.float64)
    xbar = np.ascontiguousarray(xbar, dtype=np.float64)
    set_c = np.ascontiguousarray(set_c, dtype=np.float64)
    cdef int N = noise.shape[0]
    cdef int n = noise.shape[1]
    set_d = np.ascontiguousarray(set_d, dtype=np.float64) if set_d is not None \
        else np.zeros(n)
    extra_c = np.ascontiguousarray(extra_c, dtype=np.float64) if extra_c is not None \
        else np.zeros(n)

    xs = np.empty((N + 1, n), dtype=np.float64)
    ys = np.empty((N, n), dtype=np.float64)
    clipped = np.zeros(N, dtype=np.uint8)
    vinc = np.empty(N, dtype=np.float64)
    xis = np.empty((N, n), dtype=np.float64) if record_xi else None

    cdef ProxSpec sp
    sp.n = n
    sp.p_prox = 2.0
    sp.pen_kind = int(pen_kind)
    sp.pen_w = float(pen_w)
    sp.pen_p = float(pen_p)
    sp.set_kind = int(set_kind)
    sp.set_r = float(set_r)
    sp.extra_kind = int(extra_kind)
    sp.extra_r = float(extra_r)
    sp.tol = float(tol)

    cdef const double[:, ::1] Av = A
    cdef const double[::1] bv = bvec
    cdef const double[:, ::1] Wv = noise
    cdef double[:, ::1] xsv = xs
    cdef double[:, ::1] ysv = ys
    cdef cnp.uint8_t[::1] clv = clipped
    cdef double[::1] viv = vinc
    cdef double[:, ::1] xiv = xis if record_xi else np.empty((1, 1))
    cdef const double[::1] betav = betas
    cdef const double[::1] gbarv = gbar
    cdef const double[::1] xbarv = xbar
    cdef const double[::1] scv = set_c
    cdef const double[::1] sdv = set_d
    cdef const double[::1] ecv = extra_c

    x_arr = np.ascontiguousarray(x0, dtype=np.float64).copy()
    g_arr = np.empty(n, dtype=np.float64)
    y_arr = np.empty(n, dtype=np.float64)
    z_arr = np.empty(n, dtype=np.float64)
    v_arr = np.empty(n, dtype=np.float64)
    w_arr = np.empty(n, dtype=np.float64)
    lo_arr = np.empty(n, dtype=np.float64)
    hi_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] x = x_arr
    cdef double[::1] g = g_arr
    cdef double[::1] y = y_arr
    cdef double[::1] z = z_arr
    cdef double[::1] vbuf = v_arr
    cdef double[::1] wbuf = w_arr
    cdef double[::1] lov = lo_arr
    cdef double[::1] hiv = hi_arr

    cdef int i, j, k, do_anchor = 1 if anchor_term else 0
    cdef int rec = 1 if record_xi else 0
    cdef double thr0 = float(thr_const), L = float(lip), beta
    cdef double acc, dev2, thr, diff

    # the generic engine needs coordinate brackets; loop-invariant
    _coordinate_bounds_c(lov, hiv, &sp, scv, sdv, ecv)

    xsv[0, :] = x
    for i in range(N):
        # smooth gradient + noise
        for j in range(n):
            acc = -bv[j]
            for k in range(n):
                acc += Av[j, k] * x[k]
            g[j] = acc
        dev2 = 0.0
        for j in range(n):
            y[j] = g[j] + Wv[i, j]
            diff = y[j] - gbarv[j]
            dev2 += diff * diff
        thr = thr0
        if do_anchor:
            acc = 0.0
            for j in range(n):
                acc += (xbarv[j] - x[j]) * (xbarv[j] - x[j])
            thr += L * sqrt(acc)
        if sqrt(dev2) <= thr:
            clv[i] = 0
        else:
            clv[i] = 1
            for j in range(n):
                y[j] = gbarv[j]
        if rec:
            for j in range(n):
                xiv[i, j] = y[j] - g[j]
        beta = betav[i]
        # Prox_{beta,x}(y): minimize <y,z> + pen(z) + (beta/2)||z-x||^2
        sp.prox_coef = 0.5 * beta
        if not ((sp.pen_kind == C_PEN_ZERO or sp.pen_kind == C_PEN_L1) and
                _euclid_fast_c(z, y, sp.prox_coef, x, sp.pen_kind, sp.pen_w,
                               &sp, scv, sdv, ecv, vbuf, wbuf)):
            _generic_prox(z, y, &sp, x, scv, sdv, ecv, lov, hiv, 80)
        acc = 0.0
        for j in range(n):
            diff = z[j] - x[j]
            acc += diff * diff
        viv[i] = 0.5 * acc
        for j in range(n):
            ysv[i, j] = y[j]
            x[j] = z[j]
            xsv[i + 1, j] = z[j]

    return xs, ys, clipped, vinc, (xis if record_xi else None)
