"""Synthetic composite problem instances and the stochastic gradient oracle.

An instance is a quadratic smooth part ``phi(x) = 0.5 <x, A x> - <b, x>``
plus a convex penalty on a compact set. The oracle returns
``G(x) = grad phi(x) + noise`` where the noise is centered, i.i.d. across
calls, and calibrated so that ``E ||noise||_*^2 <= sigma^2`` in the dual
norm of the instance geometry.
"""

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import geometry as geo
from .geometry import CompositePenalty, FeasibleSet, GeometryError, GeometrySetup


@dataclass(frozen=True)
class ProblemInstance:
    """Composite objective F = phi + psi over a feasible set, with known optimum."""

    A: np.ndarray
    b: np.ndarray
    penalty: CompositePenalty
    set_: FeasibleSet
    geometry: GeometrySetup
    L: float
    sigma: float
    Fstar: float
    xstar: np.ndarray
    kappa: float = None

    @property
    def dim(self):
        return self.b.size

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * float(x @ self.A @ x) - float(self.b @ x)

    def grad_phi(self, x):
        x = np.asarray(x, dtype=float)
        return self.A @ x - self.b

    def with_sigma(self, sigma):
        return replace(self, sigma=float(sigma))


def objective(instance, x, check_membership=True):
    """F(x) = phi(x) + psi(x)."""
    x = np.asarray(x, dtype=float)
    if check_membership and not instance.set_.contains(x, instance.geometry,
                                                       tol=geo.MEMBERSHIP_TOL):
        raise GeometryError("point is outside the feasible set")
    return instance.phi(x) + instance.penalty.value(x)


def lipschitz_constant(A, geometry_kind):
    """Operator norm of A for the geometry's (norm, dual norm) pair.

    l2 -> l2: largest eigenvalue (A symmetric PSD); l1 -> l-infinity:
    max absolute entry.
    """
    if geometry_kind == geo.EUCLIDEAN:
        return float(np.max(np.linalg.eigvalsh(A)))
    return float(np.max(np.abs(A)))


def _proximal_gradient_solve(A, b, penalty, set_, setup, tol=1e-12, max_iter=500000):
    """High-accuracy reference solve of min phi + psi over the set.

    Accelerated (FISTA-style) proximal gradient with gradient-mapping
    stopping rule and gradient-based adaptive restart. The prox metric is
    Euclidean regardless of the ambient geometry (any metric finds the same
    optimum), but the feasible set keeps its geometry-resolved meaning (a
    ``ball`` set is an l1 ball under l1 geometry).
    """
    from . import _kernels as K

    n = b.size
    lip = lipschitz_constant(A, geo.EUCLIDEAN)
    step = 1.0 / max(lip, 1e-12)
    pen_kind, pen_w, pen_p = penalty.kernel_args()
    set_kind, set_c, set_d, set_r = geo._set_kernel_args(set_, setup)

    def fb_step(point, grad):
        # argmin <grad,z> + psi(z) + (1/(2 step))||z - point||^2 over the set
        return K.composite_prox_kernel(
            grad, 0.5 / step, point, 2.0, pen_kind, pen_w, pen_p,
            set_kind, set_c, set_d, set_r)

    x_prev = _feasible_point(set_, n)
    y = x_prev.copy()
    t = 1.0
    for _ in range(max_iter):
        x = fb_step(y, A @ y - b)
        if float(np.linalg.norm(y - x)) <= tol * step:
            # confirm the gradient map at x itself (not the extrapolated y)
            x_plus = fb_step(x, A @ x - b)
            if float(np.linalg.norm(x - x_plus)) <= tol * step:
                return x_plus
            x, y, t = x_plus, x_plus.copy(), 1.0
            x_prev = x.copy()
            continue
        # gradient-based adaptive restart (no objective comparisons: those
        # deadlock at machine precision near the optimum)
        if float(np.dot(y - x, x - x_prev)) > 0.0:
            t = 1.0
            y = x.copy()
        else:
            t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            y = x + ((t - 1.0) / t_new) * (x - x_prev)
            t = t_new
        x_prev = x
    raise RuntimeError("reference solve did not reach the gradient-map tolerance")


def _feasible_point(set_, n):
    if set_.kind == "box":
        return 0.5 * (set_.lower + set_.upper)
    if set_.kind == "simplex":
        return np.full(n, set_.scale / n)
    return set_.center.astype(float).copy()


def make_instance(dim, spectrum, geometry_kind=geo.EUCLIDEAN, set_=None,
                  penalty=None, sigma=0.0, seed=0, b=None, target=None,
                  kappa=None):
    """Build a quadratic instance with a trusted optimum.

    ``spectrum``: eigenvalues of A (nonnegative). A random orthogonal basis
    (seeded) mixes them for dim > 1 unless the geometry is l1, where A is
    kept diagonal so the l1->linf Lipschitz constant stays well scaled.
    ``target``: if given, b := A @ target (puts the unconstrained minimum
    at ``target``). ``Fstar``/``xstar`` come from a deterministic
    accelerated solve run to gradient-map norm <= 1e-12.
    """
    spectrum = np.atleast_1d(np.asarray(spectrum, dtype=float))
    if spectrum.size != dim or np.any(spectrum < 0):
        raise GeometryError("spectrum must be nonnegative with length dim")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(7,)))
    if dim == 1 or geometry_kind == geo.L1:
        A = np.diag(spectrum)
    else:
        Q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
        A = Q @ np.diag(spectrum) @ Q.T
        A = 0.5 * (A + A.T)
    if target is not None:
        target = np.full(dim, float(target)) if np.isscalar(target) \
            else np.asarray(target, dtype=float)
        b = A @ target
    elif b is None:
        b = rng.normal(size=dim)
    else:
        b = np.asarray(b, dtype=float)

    if set_ is None:
        set_ = FeasibleSet.ball(np.zeros(dim), 10.0)
    if penalty is None:
        penalty = CompositePenalty.zero()
    penalty.validate_for(set_)

    x0 = _geometry_center(set_, dim)
    tmp_setup = GeometrySetup(geometry_kind, dim, x0, 1.0)
    radius = set_.circumradius(tmp_setup, x0)
    setup = GeometrySetup(geometry_kind, dim, x0, radius)

    L = lipschitz_constant(A, geometry_kind)
    xstar = _proximal_gradient_solve(A, b, penalty, set_, setup)
    Fstar = 0.5 * float(xstar @ A @ xstar) - float(b @ xstar) + penalty.value(xstar)
    if kappa is None and geometry_kind == geo.EUCLIDEAN and penalty.kind == "zero":
        lam_min = float(np.min(spectrum))
        kappa = lam_min if lam_min > 0 else None
    return ProblemInstance(A=A, b=b, penalty=penalty, set_=set_, geometry=setup,
                           L=L, sigma=float(sigma), Fstar=Fstar, xstar=xstar,
                           kappa=kappa)


def _geometry_center(set_, dim):
    if set_.kind == "ball":
        return set_.center.astype(float).copy()
    if set_.kind == "box":
        return 0.5 * (set_.lower + set_.upper)
    return np.full(dim, set_.scale / dim)


# ---------------------------------------------------------------------------
# noise models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseModel:
    """Centered i.i.d. coordinate noise, scaled to E||noise||_*^2 = sigma^2.

    Heavy-tailed draws are symmetrized by an independent random sign so the
    mean is exactly zero.
    """

    kind: str  # none | gaussian | student_t | pareto
    dim: int
    scale: float = 0.0
    df: float = 0.0
    alpha: float = 0.0
    dual: str = "l2"

    def draw(self, rng, size=None):
        shape = (self.dim,) if size is None else (size, self.dim)
        if self.kind == "none" or self.scale == 0.0:
            return np.zeros(shape)
        if self.kind == "gaussian":
            return self.scale * rng.standard_normal(shape)
        if self.kind == "student_t":
            return self.scale * rng.standard_t(self.df, size=shape)
        if self.kind == "pareto":
            mag = (1.0 + rng.pareto(self.alpha, size=shape))  # Pareto(alpha), x_m = 1
            sign = rng.choice([-1.0, 1.0], size=shape)
            return self.scale * sign * mag
        raise GeometryError(f"unknown noise kind {self.kind!r}")


def _coordinate_second_moment(kind, df, alpha):
    """E X^2 of one unit-scale coordinate draw."""
    if kind == "gaussian":
        return 1.0
    if kind == "student_t":
        return df / (df - 2.0)
    if kind == "pareto":
        return alpha / (alpha - 2.0)
    return 0.0


def _abs_tail(kind, x, df, alpha):
    """S(x) = P(|X| > x) at unit scale, vectorized over x."""
    x = np.asarray(x, dtype=float)
    if kind == "gaussian":
        erfc = np.vectorize(math.erfc)
        return erfc(x / math.sqrt(2.0)).astype(float)
    if kind == "pareto":
        return np.where(x < 1.0, 1.0, np.maximum(x, 1.0) ** (-alpha))
    # student t: S(x) = 2 * integral_x^inf f(t) dt, f the t_df density
    c = math.exp(math.lgamma((df + 1.0) / 2.0) - math.lgamma(df / 2.0)) \
        / math.sqrt(df * math.pi)

    def pdf(t):
        return c * (1.0 + t * t / df) ** (-(df + 1.0) / 2.0)

    # cumulative Simpson from the far end on a fine log grid, plus the
    # analytic power-law remainder beyond the grid
    lo, hi, m = 1e-8, 1e12, 40001
    grid = np.exp(np.linspace(math.log(lo), math.log(hi), m))
    vals = pdf(grid) * grid  # integrand in log space
    h = (math.log(hi) - math.log(lo)) / (m - 1)
    seg = (h / 6.0) * (vals[:-1] + vals[1:] +
                       4.0 * pdf(np.sqrt(grid[:-1] * grid[1:])) * np.sqrt(grid[:-1] * grid[1:]))
    tail_beyond = 2.0 * c * df ** ((df + 1.0) / 2.0) * hi ** (-df) / df
    cum = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    S_grid = np.minimum(2.0 * cum + tail_beyond, 1.0)
    out = np.interp(np.log(np.maximum(x, lo)), np.log(grid), S_grid)
    return np.where(x <= lo, 1.0, out)


@lru_cache(maxsize=64)
def _linf_second_moment(kind, dim, df, alpha):
    """E max_j |X_j|^2 at unit coordinate scale (deterministic quadrature).

    Uses E M^2 = int_0^inf 2x (1 - (1 - S(x))^n) dx with the exact
    coordinate tail S; heavy tails make naive Monte-Carlo means unstable
    (infinite variance of X^2 for tail indices < 4), so the fit is done by
    tail-integrated quadrature instead.
    """
    n = dim
    if kind == "pareto":
        # closed form: mass below x=1 is exactly 1; beyond, binomial expansion
        total = 1.0
        for k in range(1, n + 1):
            total += ((-1) ** (k + 1)) * math.comb(n, k) * 2.0 / (alpha * k - 2.0)
        return total
    lo, hi, m = 1e-8, (50.0 if kind == "gaussian" else 1e10), 40001
    grid = np.exp(np.linspace(math.log(lo), math.log(hi), m))
    mids = np.sqrt(grid[:-1] * grid[1:])
    h = (math.log(hi) - math.log(lo)) / (m - 1)

    def integrand(x):
        S = _abs_tail(kind, x, df, alpha)
        return 2.0 * x * (1.0 - (1.0 - S) ** n) * x  # extra x: log-space measure

    total = float(np.sum((h / 6.0) * (integrand(grid[:-1]) + integrand(grid[1:])
                                      + 4.0 * integrand(mids))))
    total += lo * lo  # [0, lo] where the integrand is 2x to machine precision
    if kind == "student_t":
        c = math.exp(math.lgamma((df + 1.0) / 2.0) - math.lgamma(df / 2.0)) \
            / math.sqrt(df * math.pi)
        s_const = 2.0 * c * df ** ((df + 1.0) / 2.0) / df
        total += 2.0 * n * s_const * hi ** (2.0 - df) / (df - 2.0)
    return total


def dual_second_moment(kind, dim, dual, df=3.0, alpha=2.5):
    """E ||X||_*^2 at unit coordinate scale (exact/quadrature, no sampling)."""
    if kind == "none":
        return 0.0
    if dual == "l2":
        return dim * _coordinate_second_moment(kind, df, alpha)
    return _linf_second_moment(kind, dim, df, alpha)


def calibrate_noise(kind, sigma, setup, df=3.0, alpha=2.5):
    """Noise model with E||noise||_*^2 = sigma^2 in the geometry's dual norm.

    Closed form for the l2 dual (coordinate second moments add); for the
    l-infinity dual the max-moment is computed by deterministic
    tail-integrated quadrature (machine-accurate, seed-free).
    """
    if sigma < 0:
        raise GeometryError("sigma must be nonnegative")
    if sigma == 0.0 or kind == "none":
        return NoiseModel(kind="none", dim=setup.dim)
    if kind == "student_t" and not df > 2.0:
        raise GeometryError("student_t requires df > 2 (finite variance)")
    if kind == "pareto" and not alpha > 2.0:
        raise GeometryError("pareto requires tail index > 2 (finite variance)")
    dual = "l2" if setup.kind == geo.EUCLIDEAN else "linf"
    m2 = dual_second_moment(kind, setup.dim, dual, df, alpha)
    return NoiseModel(kind=kind, dim=setup.dim, scale=sigma / math.sqrt(m2),
                      df=df, alpha=alpha, dual=dual)


def sample_gradient(instance, noise, x, rng):
    """One stochastic oracle call: grad phi(x) plus a fresh noise draw."""
    return instance.grad_phi(x) + noise.draw(rng)
