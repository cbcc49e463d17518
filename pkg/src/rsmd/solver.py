"""The mirror-descent iteration with truncated gradients.

``run`` executes N steps of

    x_i = argmin_z { <y_i, z> + psi(z) + beta_{i-1} V_{x_{i-1}}(z) }

where y_i is the truncated oracle draw, and returns the full trace plus the
weighted average solution. Quadratic instances under Euclidean geometry are
dispatched to the whole-loop kernel (compiled when available); everything
else runs the step-wise path over the prox kernels.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from . import geometry as geo
from .geometry import CompositePenalty, GeometryError
from .problems import sample_gradient
from .truncation import TruncationConfig, truncate


@dataclass(frozen=True)
class RsmdConfig:
    """Iteration budget, step-size(s), truncation rule, and start point.

    ``beta`` is the constant step parameter; per-iteration arrays are a
    test-mode facility only (the quantitative guarantees all use a constant).
    """

    beta: object
    N: int
    truncation: TruncationConfig
    x0: np.ndarray
    test_mode: bool = False
    extra_ball: tuple = None
    prox_tol: float = 1e-12

    def betas(self):
        if np.isscalar(self.beta):
            return np.full(self.N, float(self.beta))
        arr = np.asarray(self.beta, dtype=float)
        if not self.test_mode:
            raise GeometryError("per-iteration beta arrays are test-mode only")
        if arr.shape != (self.N,):
            raise GeometryError("beta array must have length N")
        return arr.copy()


@dataclass
class RunTrace:
    """Everything a run produced: iterates, used gradients, diagnostics."""

    xs: np.ndarray          # (N+1, n)
    ys: np.ndarray          # (N, n)
    clipped: np.ndarray     # (N,) bool
    vinc: np.ndarray        # (N,) Bregman increments V_{x_{i-1}}(x_i)
    betas: np.ndarray       # (N,)
    xhat: np.ndarray        # (n,) weighted average of x_1..x_N
    geometry: object
    set_: object
    penalty: object
    meta: dict = field(default_factory=dict)
    xis: np.ndarray = None  # (N, n), test mode only

    @property
    def N(self):
        return self.ys.shape[0]

    def bregman_sum(self):
        return float(np.sum(self.vinc))


def stepsize_constant(L, sigma, N, R, Theta):
    """Constant step parameter: max{2L, sigma*sqrt(N)/(R*sqrt(Theta))}."""
    if L < 0 or sigma < 0 or N <= 0 or R <= 0 or Theta <= 0:
        raise GeometryError("invalid step-size inputs")
    return max(2.0 * L, sigma * np.sqrt(N) / (R * np.sqrt(Theta)))


def weighted_average(xs, betas):
    """[sum 1/beta]^{-1} sum (1/beta) x_i over i = 1..N (machine-exact mean
    when beta is constant)."""
    w = 1.0 / betas
    return (w[:, None] * xs[1:]).sum(axis=0) / w.sum()


def step(cfg, instance, x_prev, rng, noise, beta=None):
    """One mirror-descent step from x_prev; returns (x_next, y, diagnostics)."""
    setup = instance.geometry
    beta = float(cfg.beta if beta is None else beta)
    G = sample_gradient(instance, noise, x_prev, rng)
    y, clipped = truncate(G, cfg.truncation, x_prev, setup)
    x_next = geo.composite_prox(setup, instance.set_, instance.penalty,
                                x_prev, y, beta, extra_ball=cfg.extra_ball,
                                tol=cfg.prox_tol)
    v = geo.bregman(setup, x_prev, x_next)
    return x_next, y, {"V": v, "clipped": clipped}


def run(cfg, instance, noise, rng):
    """Execute the full N-step recursion; deterministic given the rng state."""
    setup = instance.geometry
    betas = cfg.betas()
    if np.any(betas < 2.0 * instance.L - 1e-12):
        raise GeometryError("step parameters must satisfy beta >= 2L")
    x0 = np.asarray(cfg.x0, dtype=float)
    if not instance.set_.contains(x0, setup, tol=geo.MEMBERSHIP_TOL):
        raise GeometryError("start point outside the feasible set")
    W = noise.draw(rng, size=cfg.N)

    tr = cfg.truncation
    if setup.kind == geo.EUCLIDEAN:
        pen_kind, pen_w, pen_p = instance.penalty.kernel_args()
        set_kind, set_c, set_d, set_r = geo._set_kernel_args(instance.set_, setup)
        if cfg.extra_ball is None:
            ek, ec, er = K.EXTRA_NONE, None, 0.0
        else:
            ec, er = cfg.extra_ball
            ec = np.asarray(ec, dtype=float)
            ek = K.SET_L2BALL
        thr_const = (tr.L * tr.diameter + tr.lam) if tr.interior_mode \
            else (tr.lam + tr.upsilon_sigma)
        xs, ys, clipped, vinc, xis = K.rsmd_loop_euclid(
            instance.A, instance.b, x0, W, betas,
            np.asarray(tr.gbar, dtype=float), np.asarray(tr.xbar, dtype=float),
            tr.L, thr_const, not tr.interior_mode,
            pen_kind, pen_w, pen_p, set_kind, set_c, set_d, set_r,
            ek, ec, er, cfg.prox_tol, cfg.test_mode)
        clipped = clipped.astype(bool)
    else:
        n = setup.dim
        xs = np.empty((cfg.N + 1, n))
        ys = np.empty((cfg.N, n))
        clipped = np.zeros(cfg.N, dtype=bool)
        vinc = np.empty(cfg.N)
        xis = np.empty((cfg.N, n)) if cfg.test_mode else None
        x = x0.copy()
        xs[0] = x
        for i in range(cfg.N):
            G = instance.grad_phi(x) + W[i]
            y, was_clipped = truncate(G, tr, x, setup)
            x_new = geo.composite_prox(setup, instance.set_, instance.penalty,
                                       x, y, betas[i], extra_ball=cfg.extra_ball,
                                       tol=cfg.prox_tol)
            vinc[i] = geo.bregman(setup, x, x_new)
            ys[i] = y
            clipped[i] = was_clipped
            if cfg.test_mode:
                xis[i] = y - instance.grad_phi(x)
            x = x_new
            xs[i + 1] = x

    xhat = weighted_average(xs, betas)
    return RunTrace(xs=xs, ys=ys, clipped=clipped, vinc=vinc, betas=betas,
                    xhat=xhat, geometry=setup, set_=instance.set_,
                    penalty=instance.penalty,
                    meta={"test_mode": cfg.test_mode}, xis=xis)


def gap_epsilon(trace, instance, z):
    """The per-trajectory gap functional at comparison point z:

    sum_i { beta_{i-1}^{-1} [<grad phi(x_{i-1}), x_i - z> + psi(x_i) - psi(z)]
            + 0.5 V_{x_{i-1}}(x_i) }.

    The Bregman term enters unweighted: this is the reading under which
    (beta/N) * sup_z of this quantity equals the computable accuracy
    functional at curvature beta/2 (see the certificate module).
    """
    z = np.asarray(z, dtype=float)
    if not instance.set_.contains(z, instance.geometry, tol=geo.MEMBERSHIP_TOL):
        raise GeometryError("z outside the feasible set")
    grads = trace.xs[:-1] @ instance.A - instance.b
    inner = np.einsum("ij,ij->i", grads, trace.xs[1:] - z)
    psi_iter = np.array([instance.penalty.value(x) for x in trace.xs[1:]])
    psi_z = instance.penalty.value(z)
    return float(np.sum((inner + psi_iter - psi_z) / trace.betas)
                 + 0.5 * np.sum(trace.vinc))


def auxiliary_sequence(trace):
    """The comparison sequence z_0..z_{N-1} driven by the noise residuals:

    z_0 = x_0,  z_i = argmin_z { beta_{i-1}^{-1} <-xi_i, z> + V_{z_{i-1}}(z) },

    the dual-averaging regret sequence on the NEGATED residuals. This is the
    orientation under which the summed bound

        sum_i beta_{i-1}^{-1} <xi_i, z - z_{i-1}>
            <= V_{x_0}(z) + (1/2) sum_i beta_{i-1}^{-2} ||xi_i||_*^2

    holds deterministically for every z (the +xi orientation bounds the
    reversed inner products and admits counterexamples for this one).
    Test mode only (requires recorded residuals xi_i).
    """
    if trace.xis is None:
        raise GeometryError("auxiliary sequence needs a test-mode trace")
    N = trace.N
    zs = np.empty((N, trace.xs.shape[1]))
    zs[0] = trace.xs[0]
    zero = CompositePenalty.zero()
    for i in range(1, N):
        zs[i] = geo.composite_prox(trace.geometry, trace.set_, zero,
                                   zs[i - 1], -trace.xis[i - 1] / trace.betas[i - 1],
                                   1.0)
    return zs


def export_trace_csv(trace, path, coordinate_limit=12, header_comment=None):
    """One row per iteration: i, x_i (coordinates, or norm-from-center
    summary for high dimensions), clipped flag, Bregman increment."""
    n = trace.xs.shape[1]
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh)
        if n <= coordinate_limit:
            w.writerow(["i"] + [f"x{j}" for j in range(n)] + ["clipped", "V_inc"])
            for i in range(trace.N):
                w.writerow([i + 1] + [repr(v) for v in trace.xs[i + 1]]
                           + [int(trace.clipped[i]), repr(float(trace.vinc[i]))])
        else:
            w.writerow(["i", "norm_from_center", "clipped", "V_inc"])
            for i in range(trace.N):
                nrm = trace.geometry.norm(trace.xs[i + 1] - trace.geometry.center)
                w.writerow([i + 1, repr(nrm), int(trace.clipped[i]),
                            repr(float(trace.vinc[i]))])


def trace_summary(trace):
    """JSON-ready run summary."""
    return {
        "N": trace.N,
        "clip_count": int(np.sum(trace.clipped)),
        "bregman_sum": trace.bregman_sum(),
        "xhat": [float(v) for v in trace.xhat],
        "meta": dict(trace.meta),
    }


def export_trace_summary(trace, path):
    with open(path, "w") as fh:
        json.dump(trace_summary(trace), fh, indent=2, sort_keys=True)
        fh.write("\n")
