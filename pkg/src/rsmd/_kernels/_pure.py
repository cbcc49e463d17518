"""Pure-numpy kernel backend.

Reference implementations of the numerical hot kernels:

* ``composite_prox_kernel`` -- minimizer of
  ``<a, z> + pen(z) + prox_coef * sum_j |z_j - prox_center_j|**p_prox``
  over a compact feasible set (l2 ball, box, simplex or l1 ball),
  optionally intersected with a second ball (multistage stage sets).
  Solved by Lagrangian dualization of the coupling constraint: the inner
  problem is coordinate-separable given the multiplier, solved by a
  vectorized derivative-sign bisection; the multiplier by an outer scalar
  bisection on the (monotone) constraint residual.
* ``rsmd_loop_euclid`` -- the whole mirror-descent iteration loop for
  quadratic smooth parts under Euclidean geometry, with pre-drawn noise.

The compiled backend (``rsmd._kernels._fast``) mirrors these functions
with identical algorithms; both must stay behaviourally interchangeable
(see tests/test_kernels.py).
"""

import numpy as np

PEN_ZERO, PEN_L1, PEN_POWER, PEN_ENTROPY = 0, 1, 2, 3
SET_L2BALL, SET_BOX, SET_SIMPLEX, SET_L1BALL = 0, 1, 2, 3
EXTRA_NONE = -1

_TINY = 1e-300

# ---------------------------------------------------------------------------
# exact closed-form projections (Euclidean)
# ---------------------------------------------------------------------------


def project_l2_ball(v, center, radius):
    """Euclidean projection of v onto {z : ||z - center||_2 <= radius}."""
    d = v - center
    nrm = np.sqrt(np.dot(d, d))
    if nrm <= radius:
        return v.copy()
    return center + d * (radius / nrm)


def project_simplex(v, scale):
    """Euclidean projection of v onto {z >= 0, sum z = scale} (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - scale
    ks = np.arange(1, v.size + 1)
    cond = u - css / ks > 0
    rho = np.nonzero(cond)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def project_two_l2_balls(v, c1, r1, c2, r2):
    """Euclidean projection onto the intersection of two l2 balls.

    The intersection must be nonempty. Single-ball cases are resolved by
    closed-form radial projection; the doubly-active case reduces to plane
    geometry in span{c2-c1, v-c1}.
    """
    p1 = project_l2_ball(v, c1, r1)
    if np.sqrt(np.sum((p1 - c2) ** 2)) <= r2 * (1 + 1e-12):
        return p1
    p2 = project_l2_ball(v, c2, r2)
    if np.sqrt(np.sum((p2 - c1) ** 2)) <= r1 * (1 + 1e-12):
        return p2
    # both constraints active: solve on the sphere-intersection circle
    axis = c2 - c1
    d = np.sqrt(np.dot(axis, axis))
    e1 = axis / d
    x = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d)
    w = (v - c1) - np.dot(v - c1, e1) * e1
    wn = np.sqrt(np.dot(w, w))
    if wn < 1e-15:
        # v on the axis: any point of the circle is equidistant; pick a
        # deterministic perpendicular direction
        k = int(np.argmin(np.abs(e1)))
        w = -e1 * e1[k]
        w[k] += 1.0
        wn = np.sqrt(np.dot(w, w))
    e2 = w / wn
    y2 = max(r1 * r1 - x * x, 0.0)
    return c1 + x * e1 + np.sqrt(y2) * e2


def soft_threshold(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


# ---------------------------------------------------------------------------
# generic separable engine
# ---------------------------------------------------------------------------


def _pen_deriv(z, pen_kind, pen_w, pen_p):
    """Minimal-norm subgradient of the penalty, coordinate-wise."""
    if pen_kind == PEN_ZERO or pen_w == 0.0:
        return 0.0
    if pen_kind == PEN_L1:
        return pen_w * np.sign(z)
    if pen_kind == PEN_POWER:
        return pen_w * pen_p * np.sign(z) * np.abs(z) ** (pen_p - 1.0)
    # negative entropy: w * (ln z + 1), defined for z >= 0
    return pen_w * (np.log(np.maximum(z, _TINY)) + 1.0)


def _obj_deriv(z, lin, pen_kind, pen_w, pen_p, prox_coef, prox_center, p_prox,
               kq, mq, w1, c1, w2, c2):
    """Derivative (minimal-norm subgradient) of the per-coordinate objective.

    lin*z + pen(z) + prox_coef*|z-t|^p + kq/2*(z-mq)^2 + w1*|z-c1| + w2*|z-c2|
    """
    d = lin + _pen_deriv(z, pen_kind, pen_w, pen_p)
    if prox_coef != 0.0:
        u = z - prox_center
        if p_prox == 2.0:
            d = d + 2.0 * prox_coef * u
        else:
            d = d + prox_coef * p_prox * np.sign(u) * np.abs(u) ** (p_prox - 1.0)
    if kq != 0.0:
        d = d + kq * (z - mq)
    if w1 != 0.0:
        d = d + w1 * np.sign(z - c1)
    if w2 != 0.0:
        d = d + w2 * np.sign(z - c2)
    return d


def _coord_bisect(lo, hi, deriv, iters=108):
    """Vectorized minimization of coordinate-wise convex objectives on [lo, hi].

    ``deriv(z)`` returns a nondecreasing (sub)derivative per coordinate; the
    minimizer is where it changes sign, clipped to the bracket.
    """
    lo = lo.astype(float).copy()
    hi = hi.astype(float).copy()
    dlo = deriv(lo)
    dhi = deriv(hi)
    at_lo = dlo >= 0.0
    at_hi = dhi <= 0.0
    hi = np.where(at_lo, lo, hi)
    lo = np.where(at_hi, hi, lo)
    for _ in range(iters):
        if np.all(hi - lo <= 0.0):
            break
        mid = 0.5 * (lo + hi)
        dm = deriv(mid)
        hi = np.where(dm >= 0.0, mid, hi)
        lo = np.where(dm <= 0.0, mid, lo)
    return 0.5 * (lo + hi)


def _coordinate_bounds(n, set_kind, set_c, set_d, set_r, extra_kind, extra_c, extra_r):
    if set_kind == SET_BOX:
        lo, hi = set_c.copy(), set_d.copy()
    elif set_kind == SET_SIMPLEX:
        lo, hi = np.zeros(n), np.full(n, set_r)
    else:  # either ball kind: the coordinate range is center +/- radius
        lo, hi = set_c - set_r, set_c + set_r
    if extra_kind != EXTRA_NONE:
        lo = np.maximum(lo, extra_c - extra_r)
        hi = np.minimum(hi, extra_c + extra_r)
    return lo, np.maximum(hi, lo)


def _ball_residual(z, kind, c, r):
    if kind == SET_L2BALL:
        return np.sqrt(np.sum((z - c) ** 2)) - r
    return np.sum(np.abs(z - c)) - r


def _bisect_scalar(resfun, lo, hi, stop_tol=0.0, iters=160):
    """Root of a nonincreasing scalar residual, bracketing [lo, hi]."""
    flo = resfun(lo)
    if flo <= 0.0:
        return lo
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fm = resfun(mid)
        if abs(fm) <= stop_tol:
            return mid
        if fm > 0.0:
            lo = mid
        else:
            hi = mid
    return hi


def composite_prox_kernel(a, prox_coef, prox_center, p_prox,
                          pen_kind, pen_w, pen_p,
                          set_kind, set_c, set_d, set_r,
                          extra_kind=EXTRA_NONE, extra_c=None, extra_r=0.0,
                          tol=1e-12, max_alt=80):
    """Minimize <a,z> + pen(z) + prox_coef*sum|z-t|^p over the feasible set.

    Returns the minimizer; feasibility of the output is enforced to ~1e-12.
    """
    a = np.asarray(a, dtype=float)
    n = a.size
    set_c = np.asarray(set_c, dtype=float)
    set_d = np.asarray(set_d, dtype=float) if set_d is not None else np.zeros(n)
    prox_center = np.asarray(prox_center, dtype=float)
    if extra_c is None:
        extra_c = np.zeros(n)
    extra_c = np.asarray(extra_c, dtype=float)

    # fast exact paths for the Euclidean quadratic prox with simple penalties
    if prox_coef > 0.0 and p_prox == 2.0 and pen_kind in (PEN_ZERO, PEN_L1):
        z = _euclid_fast(a, prox_coef, prox_center, pen_kind, pen_w,
                         set_kind, set_c, set_d, set_r,
                         extra_kind, extra_c, extra_r, tol)
        if z is not None:
            return z
    if prox_coef == 0.0 and pen_kind == PEN_ZERO and extra_kind == EXTRA_NONE:
        return _linear_vertex(a, set_kind, set_c, set_d, set_r)

    lo, hi = _coordinate_bounds(n, set_kind, set_c, set_d, set_r,
                                extra_kind, extra_c, extra_r)

    # effective l1 penalty on the simplex is a constant: fold it away
    eff_pen_kind, eff_pen_w = pen_kind, pen_w
    if set_kind == SET_SIMPLEX and pen_kind == PEN_L1:
        eff_pen_kind, eff_pen_w = PEN_ZERO, 0.0

    def inner(nu, mu_set, mu_extra):
        kq = 0.0
        w1, c1 = 0.0, 0.0
        w2, c2 = 0.0, 0.0
        mq_num = np.zeros(n)
        if set_kind == SET_L2BALL:
            kq += mu_set
            mq_num = mq_num + mu_set * set_c
        elif set_kind == SET_L1BALL:
            w1, c1 = mu_set, set_c
        if extra_kind == SET_L2BALL:
            kq += mu_extra
            mq_num = mq_num + mu_extra * extra_c
        elif extra_kind == SET_L1BALL:
            w2, c2 = mu_extra, extra_c
        mq = mq_num / kq if kq > 0.0 else 0.0
        lin = a + nu if set_kind == SET_SIMPLEX else a

        def deriv(z):
            return _obj_deriv(z, lin, eff_pen_kind, eff_pen_w, pen_p,
                              prox_coef, prox_center, p_prox,
                              kq, mq, w1, c1, w2, c2)

        return _coord_bisect(lo, hi, deriv)

    scale = max(1.0, abs(set_r), float(np.max(np.abs(a))) if n else 1.0)

    def solve_set(mu_extra):
        """Solve with the extra-ball multiplier fixed; returns (z, mu_set)."""
        if set_kind == SET_BOX:
            return inner(0.0, 0.0, mu_extra), 0.0
        if set_kind == SET_SIMPLEX:
            feas_tol = tol * max(1.0, set_r)

            def resid(nu):
                return float(np.sum(inner(nu, 0.0, mu_extra))) - set_r

            nu_lo, nu_hi = -scale, scale
            while resid(nu_lo) < 0.0 and nu_lo > -1e300:
                nu_lo *= 2.0
            while resid(nu_hi) > 0.0 and nu_hi < 1e300:
                nu_hi *= 2.0
            nu = nu_hi
            for _ in range(160):
                mid = 0.5 * (nu_lo + nu_hi)
                if mid == nu_lo or mid == nu_hi:
                    nu = nu_hi
                    break
                fm = resid(mid)
                if abs(fm) <= feas_tol:
                    nu = mid
                    break
                if fm > 0.0:
                    nu_lo = mid
                else:
                    nu_hi = mid
                nu = nu_hi
            return inner(nu, 0.0, mu_extra), 0.0
        # ball-constrained set: complementary multiplier
        feas_tol = tol * max(1.0, set_r)
        z0 = inner(0.0, 0.0, mu_extra)
        if _ball_residual(z0, set_kind, set_c, set_r) <= feas_tol:
            return z0, 0.0
        mu_hi = 1e-8
        while _ball_residual(inner(0.0, mu_hi, mu_extra), set_kind, set_c, set_r) > 0.0 \
                and mu_hi < 1e300:
            mu_hi *= 4.0
        mu = _bisect_scalar(
            lambda m: _ball_residual(inner(0.0, m, mu_extra), set_kind, set_c, set_r),
            0.0, mu_hi, stop_tol=feas_tol)
        return inner(0.0, mu, mu_extra), mu

    if extra_kind == EXTRA_NONE:
        z, _ = solve_set(0.0)
    else:
        # alternating-multiplier bisection over the two coupling constraints
        mu_extra = 0.0
        z, _ = solve_set(mu_extra)
        for _ in range(max_alt):
            r_extra = _ball_residual(z, extra_kind, extra_c, extra_r)
            if r_extra <= tol * max(1.0, extra_r):
                break
            mu_hi = max(mu_extra, 1e-8)

            def extra_resid(me):
                zz, _ = solve_set(me)
                return _ball_residual(zz, extra_kind, extra_c, extra_r)

            while extra_resid(mu_hi) > 0.0 and mu_hi < 1e300:
                mu_hi *= 4.0
            mu_extra = _bisect_scalar(extra_resid, 0.0, mu_hi,
                                      stop_tol=tol * max(1.0, extra_r))
            z, _ = solve_set(mu_extra)

    return _polish(z, set_kind, set_c, set_d, set_r, extra_kind, extra_c, extra_r)


def _linear_vertex(a, set_kind, set_c, set_d, set_r):
    """Exact minimizer of a linear function over the feasible set."""
    if set_kind == SET_L2BALL:
        nrm = np.sqrt(np.dot(a, a))
        if nrm == 0.0:
            return set_c.copy()
        return set_c - set_r * a / nrm
    if set_kind == SET_L1BALL:
        j = int(np.argmax(np.abs(a)))
        z = set_c.copy()
        if a[j] != 0.0:
            z[j] -= set_r * np.sign(a[j])
        return z
    if set_kind == SET_SIMPLEX:
        j = int(np.argmin(a))
        z = np.zeros(a.size)
        z[j] = set_r
        return z
    return np.where(a > 0.0, set_c, set_d)  # box: lower where a>0, else upper


def _euclid_fast(a, prox_coef, prox_center, pen_kind, pen_w,
                 set_kind, set_c, set_d, set_r,
                 extra_kind, extra_c, extra_r, tol):
    """Closed-form / single-bisection paths for the p=2 prox. None if unsupported."""
    K = 2.0 * prox_coef
    v = prox_center - a / K  # unconstrained zero-penalty minimizer

    if pen_kind == PEN_ZERO or (set_kind == SET_SIMPLEX and pen_kind == PEN_L1):
        if set_kind == SET_L2BALL and extra_kind == EXTRA_NONE:
            return project_l2_ball(v, set_c, set_r)
        if set_kind == SET_L2BALL and extra_kind == SET_L2BALL:
            return project_two_l2_balls(v, set_c, set_r, extra_c, extra_r)
        if set_kind == SET_BOX and extra_kind == EXTRA_NONE:
            return np.minimum(np.maximum(v, set_c), set_d)
        if set_kind == SET_SIMPLEX and extra_kind == EXTRA_NONE:
            return project_simplex(v, set_r)
        if set_kind == SET_SIMPLEX and extra_kind == SET_L2BALL:
            def zfun(mu):
                return project_simplex((K * v + mu * extra_c) / (K + mu), set_r)
            z0 = zfun(0.0)
            if _ball_residual(z0, SET_L2BALL, extra_c, extra_r) <= tol * max(1.0, extra_r):
                return z0
            mu_hi = 1e-8
            while _ball_residual(zfun(mu_hi), SET_L2BALL, extra_c, extra_r) > 0.0 \
                    and mu_hi < 1e300:
                mu_hi *= 4.0
            mu = _bisect_scalar(
                lambda m: _ball_residual(zfun(m), SET_L2BALL, extra_c, extra_r), 0.0, mu_hi)
            return _polish(zfun(mu), set_kind, set_c, set_d, set_r,
                           extra_kind, extra_c, extra_r)
        return None

    if pen_kind == PEN_L1:
        if set_kind == SET_BOX and extra_kind == EXTRA_NONE:
            z = soft_threshold(v, pen_w / K)
            return np.minimum(np.maximum(z, set_c), set_d)
        if set_kind == SET_L2BALL and extra_kind == EXTRA_NONE:
            def zfun(mu):
                return soft_threshold((K * v + mu * set_c) / (K + mu), pen_w / (K + mu))
            z0 = zfun(0.0)
            if _ball_residual(z0, SET_L2BALL, set_c, set_r) <= tol * max(1.0, set_r):
                return z0
            mu_hi = 1e-8
            while _ball_residual(zfun(mu_hi), SET_L2BALL, set_c, set_r) > 0.0 \
                    and mu_hi < 1e300:
                mu_hi *= 4.0
            mu = _bisect_scalar(
                lambda m: _ball_residual(zfun(m), SET_L2BALL, set_c, set_r), 0.0, mu_hi)
            return _polish(zfun(mu), set_kind, set_c, set_d, set_r,
                           EXTRA_NONE, extra_c, extra_r)
        return None
    return None


def _polish(z, set_kind, set_c, set_d, set_r, extra_kind, extra_c, extra_r):
    """Enforce exact feasibility (to ~1e-12) of an almost-feasible point."""
    if set_kind == SET_BOX:
        z = np.minimum(np.maximum(z, set_c), set_d)
    elif set_kind == SET_SIMPLEX:
        z = np.maximum(z, 0.0)
        s = z.sum()
        if s > 0.0:
            z = z * (set_r / s)
    elif set_kind == SET_L2BALL:
        d = z - set_c
        nrm = np.sqrt(np.dot(d, d))
        if nrm > set_r:
            z = set_c + d * (set_r / nrm)
    else:  # l1 ball
        s = np.sum(np.abs(z - set_c))
        if s > set_r:
            z = set_c + (z - set_c) * (set_r / s)
    if extra_kind == SET_L2BALL:
        d = z - extra_c
        nrm = np.sqrt(np.dot(d, d))
        if nrm > extra_r:
            z = extra_c + d * (extra_r / nrm)
    elif extra_kind == SET_L1BALL:
        s = np.sum(np.abs(z - extra_c))
        if s > extra_r:
            z = extra_c + (z - extra_c) * (extra_r / s)
    return z


# ---------------------------------------------------------------------------
# whole-run driver (quadratic smooth part, Euclidean geometry)
# ---------------------------------------------------------------------------


def rsmd_loop_euclid(A, bvec, x0, noise, betas,
                     gbar, xbar, lip, thr_const, anchor_term,
                     pen_kind, pen_w, pen_p,
                     set_kind, set_c, set_d, set_r,
                     extra_kind=EXTRA_NONE, extra_c=None, extra_r=0.0,
                     tol=1e-12, record_xi=False):
    """Run N mirror-descent iterations with truncated gradients.

    The smooth gradient is ``A @ x - bvec``; ``noise`` holds the N pre-drawn
    oracle noise vectors. The acceptance test per step is
    ``||G - gbar||_2 <= thr_const + lip*||xbar - x||_2`` (the norm term is
    dropped when ``anchor_term`` is false, i.e. interior-optimum mode).
    Returns (xs, ys, clipped, vinc, xis).
    """
    A = np.asarray(A, dtype=float)
    bvec = np.asarray(bvec, dtype=float)
    noise = np.asarray(noise, dtype=float)
    N, n = noise.shape
    xs = np.empty((N + 1, n))
    ys = np.empty((N, n))
    clipped = np.zeros(N, dtype=np.uint8)
    vinc = np.empty(N)
    xis = np.empty((N, n)) if record_xi else None
    if extra_c is None:
        extra_c = np.zeros(n)

    x = np.asarray(x0, dtype=float).copy()
    xs[0] = x
    for i in range(N):
        g_true = A @ x - bvec
        G = g_true + noise[i]
        dev = G - gbar
        thr = thr_const
        if anchor_term:
            d = xbar - x
            thr = thr + lip * np.sqrt(np.dot(d, d))
        if np.sqrt(np.dot(dev, dev)) <= thr:
            y = G
        else:
            y = gbar.copy()
            clipped[i] = 1
        beta = betas[i]
        # Prox_{beta,x}(y): minimize <y,z> + pen(z) + (beta/2)||z - x||^2
        x_new = composite_prox_kernel(
            y, 0.5 * beta, x, 2.0, pen_kind, pen_w, pen_p,
            set_kind, set_c, set_d, set_r,
            extra_kind, extra_c, extra_r, tol)
        diff = x_new - x
        vinc[i] = 0.5 * np.dot(diff, diff)
        ys[i] = y
        if record_xi:
            xis[i] = y - g_true
        x = x_new
        xs[i + 1] = x
    return xs, ys, clipped, vinc, xis
