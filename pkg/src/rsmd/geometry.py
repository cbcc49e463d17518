"""Normed-space setups, proxy functions, Bregman divergence, and prox solvers.

Two geometries are supported:

* Euclidean: norm l2, dual l2, proxy theta(u) = 0.5*||u||_2^2;
* L1: norm l1, dual l-infinity, proxy theta(u) = 2e*ln(n)*||u||_p^p with
  p = 1 + 1/(2 ln n)  (strongly convex with coefficient 1 w.r.t. l1 on
  the unit l1 ball, n >= 2).

The working proxy on the feasible set is the scaled/centered version
``vartheta(x) = R^2 * theta((x - x0)/R)``; the Bregman divergence
``V_x(z) = vartheta(z) - vartheta(x) - <vartheta'(x), z - x>`` satisfies
``V_x(z) >= 0.5*||x - z||^2``.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K

EUCLIDEAN = "euclidean"
L1 = "l1"

MEMBERSHIP_TOL = 1e-9
OUTPUT_TOL = 1e-12


class GeometryError(ValueError):
    pass


class ProxError(RuntimeError):
    pass


def _as_center(center, dim):
    if np.isscalar(center):
        return np.full(dim, float(center))
    c = np.asarray(center, dtype=float)
    if c.shape != (dim,):
        raise GeometryError(f"center has shape {c.shape}, expected ({dim},)")
    return c


@dataclass(frozen=True)
class GeometrySetup:
    """A normed space with a proxy function centered at x0, radius R."""

    kind: str
    dim: int
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if self.kind not in (EUCLIDEAN, L1):
            raise GeometryError(f"unknown geometry kind {self.kind!r}")
        if self.dim < 1:
            raise GeometryError("dim must be >= 1")
        if self.kind == L1 and self.dim < 2:
            raise GeometryError("l1 geometry requires dim >= 2")
        if not self.radius > 0:
            raise GeometryError("radius must be positive")
        object.__setattr__(self, "center", _as_center(self.center, self.dim))
        self.center.setflags(write=False)

    @property
    def p(self):
        """Proxy exponent: 2 for Euclidean, 1 + 1/(2 ln n) for l1."""
        if self.kind == EUCLIDEAN:
            return 2.0
        return 1.0 + 1.0 / (2.0 * math.log(self.dim))

    @property
    def theta_coef(self):
        """Coefficient c in theta(u) = c * ||u||_p^p."""
        if self.kind == EUCLIDEAN:
            return 0.5
        return 2.0 * math.e * math.log(self.dim)

    @property
    def capacity(self):
        """Theta = max_B theta - min_B theta (>= 1/2).

        Computed by evaluating theta over the unit-ball extreme points: the
        maximum of ||u||_p^p over the l1 ball sits at a vertex, and of
        0.5*||u||_2^2 at any point of the sphere.
        """
        if self.kind == EUCLIDEAN:
            return 0.5
        vertex = np.zeros(self.dim)
        best = 0.0
        for j in range(self.dim):
            vertex[:] = 0.0
            vertex[j] = 1.0
            best = max(best, self.theta_coef * float(np.sum(np.abs(vertex) ** self.p)))
        return best

    @property
    def prox_coef(self):
        """Coefficient of sum_j |x_j - x0_j|^p in vartheta (= c * R^(2-p))."""
        return self.theta_coef * self.radius ** (2.0 - self.p)

    def norm(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == EUCLIDEAN:
            return float(np.sqrt(np.dot(x, x)))
        return float(np.sum(np.abs(x)))


def dual_norm(setup, s):
    """Conjugate norm ||s||_* (l2 is self-dual; l-infinity for l1 geometry)."""
    s = np.asarray(s, dtype=float)
    if s.shape != (setup.dim,):
        raise GeometryError(f"vector has shape {s.shape}, expected ({setup.dim},)")
    if setup.kind == EUCLIDEAN:
        return float(np.sqrt(np.dot(s, s)))
    return float(np.max(np.abs(s))) if s.size else 0.0


@dataclass(frozen=True)
class FeasibleSet:
    """Compact convex feasible set: norm ball, box, or standard simplex.

    A ``ball`` is in the ambient geometry's norm (l2 ball under Euclidean
    geometry, l1 ball under l1 geometry).
    """

    kind: str
    center: np.ndarray = None
    radius: float = 0.0
    lower: np.ndarray = None
    upper: np.ndarray = None
    scale: float = 0.0

    @staticmethod
    def ball(center, radius):
        center = np.atleast_1d(np.asarray(center, dtype=float))
        if not radius > 0:
            raise GeometryError("ball radius must be positive")
        return FeasibleSet(kind="ball", center=center, radius=float(radius))

    @staticmethod
    def box(lower, upper):
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        if lower.shape != upper.shape or np.any(upper < lower):
            raise GeometryError("box bounds are inconsistent")
        return FeasibleSet(kind="box", lower=lower, upper=upper)

    @staticmethod
    def simplex(scale, dim):
        if not scale > 0:
            raise GeometryError("simplex scale must be positive")
        return FeasibleSet(kind="simplex", scale=float(scale), center=np.zeros(dim))

    def dim_of(self):
        if self.kind == "box":
            return self.lower.size
        return self.center.size

    def contains(self, x, setup, tol=OUTPUT_TOL):
        x = np.asarray(x, dtype=float)
        if self.kind == "ball":
            return setup.norm(x - self.center) <= self.radius + tol
        if self.kind == "box":
            return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))
        return bool(np.all(x >= -tol) and abs(float(np.sum(x)) - self.scale) <= tol * max(1.0, self.scale))

    def diameter(self, setup):
        """Exact diameter in the geometry norm."""
        if self.kind == "ball":
            return 2.0 * self.radius
        if self.kind == "box":
            return setup.norm(self.upper - self.lower)
        # simplex: farthest vertex pair s*e_i, s*e_j
        if setup.kind == L1:
            return 2.0 * self.scale
        return self.scale * math.sqrt(2.0)

    def circumradius(self, setup, x0):
        """Exact max_{x in set} ||x - x0|| in the geometry norm."""
        x0 = np.asarray(x0, dtype=float)
        if self.kind == "ball":
            return setup.norm(self.center - x0) + self.radius
        if self.kind == "box":
            far = np.where(np.abs(self.upper - x0) >= np.abs(self.lower - x0),
                           self.upper, self.lower)
            return setup.norm(far - x0)
        n = x0.size
        best = 0.0
        for j in range(n):
            v = -x0.copy()
            v[j] += self.scale
            best = max(best, setup.norm(v))
        return best

    def sample(self, setup, rng, size=1):
        """Uniform-ish random feasible points (for sampling-based audits)."""
        n = self.dim_of()
        if self.kind == "box":
            return rng.uniform(self.lower, self.upper, size=(size, n))
        if self.kind == "simplex":
            return self.scale * rng.dirichlet(np.ones(n), size=size)
        if setup.kind == EUCLIDEAN:
            d = rng.normal(size=(size, n))
            d /= np.linalg.norm(d, axis=1, keepdims=True)
            r = self.radius * rng.uniform(0, 1, size=(size, 1)) ** (1.0 / n)
            return self.center + d * r
        w = rng.dirichlet(np.ones(n), size=size)
        s = rng.choice([-1.0, 1.0], size=(size, n))
        r = self.radius * rng.uniform(0, 1, size=(size, 1)) ** (1.0 / n)
        return self.center + w * s * r

    def kernel_args(self):
        """(set_kind, set_c, set_d, set_r) for the kernel layer.

        NOTE: ``ball`` maps to the l2 or l1 kernel ball depending on the
        geometry; the caller passes the geometry-resolved kind.
        """
        if self.kind == "box":
            return K.SET_BOX, self.lower, self.upper, 0.0
        if self.kind == "simplex":
            n = self.dim_of()
            return K.SET_SIMPLEX, np.zeros(n), np.zeros(n), self.scale
        return None, self.center, np.zeros(self.center.size), self.radius


def _set_kernel_args(set_, setup):
    kind, c, d, r = set_.kernel_args()
    if kind is None:
        kind = K.SET_L2BALL if setup.kind == EUCLIDEAN else K.SET_L1BALL
    return kind, c, d, r


@dataclass(frozen=True)
class CompositePenalty:
    """Convex penalty psi handled exactly inside the prox."""

    kind: str = "zero"
    weight: float = 0.0
    exponent: float = 2.0

    def __post_init__(self):
        if self.kind not in ("zero", "l1", "power", "negentropy"):
            raise GeometryError(f"unknown penalty kind {self.kind!r}")
        if self.weight < 0:
            raise GeometryError("penalty weight must be nonnegative")
        if self.kind == "power" and not 1.0 <= self.exponent <= 2.0:
            raise GeometryError("power exponent must be in [1, 2]")

    @staticmethod
    def zero():
        return CompositePenalty()

    @staticmethod
    def l1(weight):
        return CompositePenalty(kind="l1", weight=weight)

    @staticmethod
    def power(weight, exponent):
        return CompositePenalty(kind="power", weight=weight, exponent=exponent)

    @staticmethod
    def negentropy(weight):
        return CompositePenalty(kind="negentropy", weight=weight)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "zero" or self.weight == 0.0:
            return 0.0
        if self.kind == "l1":
            return self.weight * float(np.sum(np.abs(x)))
        if self.kind == "power":
            return self.weight * float(np.sum(np.abs(x) ** self.exponent))
        # x ln x extended by 0 at x = 0
        pos = x[x > 0]
        return self.weight * float(np.sum(pos * np.log(pos)))

    def subgradient(self, x):
        """Minimal-norm subgradient (deterministic selection)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "zero" or self.weight == 0.0:
            return np.zeros_like(x)
        if self.kind == "l1":
            return self.weight * np.sign(x)
        if self.kind == "power":
            return self.weight * self.exponent * np.sign(x) * np.abs(x) ** (self.exponent - 1.0)
        return self.weight * (np.log(np.maximum(x, 1e-300)) + 1.0)

    def scaled(self, factor):
        return CompositePenalty(kind=self.kind, weight=self.weight * factor,
                                exponent=self.exponent)

    def kernel_args(self):
        kmap = {"zero": K.PEN_ZERO, "l1": K.PEN_L1, "power": K.PEN_POWER,
                "negentropy": K.PEN_ENTROPY}
        return kmap[self.kind], self.weight, self.exponent

    def validate_for(self, set_):
        if self.kind == "negentropy" and set_.kind != "simplex":
            raise GeometryError("negentropy penalty is only valid on a simplex")


def _check_membership(setup, set_, x, tol=MEMBERSHIP_TOL, what="point"):
    if not set_.contains(x, setup, tol=tol):
        raise GeometryError(f"{what} is outside the feasible set (tol={tol})")


def proxy(setup, x, set_=None):
    """Value and gradient of vartheta(x) = R^2 theta((x - x0)/R)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (setup.dim,):
        raise GeometryError(f"point has shape {x.shape}, expected ({setup.dim},)")
    if set_ is not None:
        _check_membership(setup, set_, x)
    u = x - setup.center
    if setup.kind == EUCLIDEAN:
        return 0.5 * float(np.dot(u, u)), u.copy()
    c, p = setup.prox_coef, setup.p
    val = c * float(np.sum(np.abs(u) ** p))
    grad = c * p * np.sign(u) * np.abs(u) ** (p - 1.0)
    return val, grad


def bregman(setup, x, z, set_=None):
    """V_x(z) = vartheta(z) - vartheta(x) - <vartheta'(x), z - x>."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if set_ is not None:
        _check_membership(setup, set_, x, what="x")
        _check_membership(setup, set_, z, what="z")
    if setup.kind == EUCLIDEAN:
        d = z - x
        return 0.5 * float(np.dot(d, d))
    vx, gx = proxy(setup, x)
    vz, _ = proxy(setup, z)
    return vz - vx - float(np.dot(gx, z - x))


def composite_prox(setup, set_, penalty, x, xi, beta, extra_ball=None, tol=1e-12):
    """argmin over z in X of <xi, z> + psi(z) + beta * V_x(z).

    ``extra_ball``: optional (center, radius) intersected with X (stage sets
    of the multistage scheme; the ball is in the geometry norm).
    """
    if not beta > 0:
        raise GeometryError("beta must be positive")
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (setup.dim,):
        raise GeometryError("xi dimension mismatch")
    _check_membership(setup, set_, x, what="x")
    penalty.validate_for(set_)
    _, gx = proxy(setup, x)
    a = xi - beta * gx
    pen_kind, pen_w, pen_p = penalty.kernel_args()
    set_kind, set_c, set_d, set_r = _set_kernel_args(set_, setup)
    if extra_ball is None:
        ek, ec, er = K.EXTRA_NONE, None, 0.0
    else:
        ec, er = extra_ball
        ec = np.asarray(ec, dtype=float)
        ek = K.SET_L2BALL if setup.kind == EUCLIDEAN else K.SET_L1BALL
    z = K.composite_prox_kernel(a, beta * setup.prox_coef, setup.center, setup.p,
                                pen_kind, pen_w, pen_p,
                                set_kind, set_c, set_d, set_r,
                                ek, ec, er, tol)
    if not np.all(np.isfinite(z)):
        raise ProxError("prox solve produced non-finite values")
    return z


def linear_min(setup, set_, penalty, a, tol=1e-12):
    """(argmin, min) of <a, z> + psi(z) over z in X (the beta = 0 prox form)."""
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise GeometryError("linear term must be finite")
    penalty.validate_for(set_)
    pen_kind, pen_w, pen_p = penalty.kernel_args()
    set_kind, set_c, set_d, set_r = _set_kernel_args(set_, setup)
    z = K.composite_prox_kernel(a, 0.0, np.zeros(a.size), 2.0,
                                pen_kind, pen_w, pen_p,
                                set_kind, set_c, set_d, set_r,
                                K.EXTRA_NONE, None, 0.0, tol)
    val = float(np.dot(a, z)) + penalty.value(z)
    return z, val
