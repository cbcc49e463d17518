"""Anchor gradients, truncation thresholds, and the gradient truncation rule.

The truncation rule replaces an oracle draw G by the anchor gradient
g(xbar) whenever ``||G - g(xbar)||_* > L ||xbar - x|| + lambda + upsilon*sigma``.
With the threshold policies below this caps the effective noise tails, which
is what buys the sub-Gaussian confidence bounds.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import GeometryError, dual_norm


@dataclass(frozen=True)
class TruncationConfig:
    """Anchor data and threshold for the truncation rule.

    ``upsilon_sigma`` is the product upsilon*sigma (only the product enters
    any formula). ``interior_mode`` switches to the simplified rule for
    problems whose smooth part has an interior minimum: gbar = 0,
    upsilon_sigma = 0, and the test becomes ``||G||_* <= L*D + lambda``
    with D the set diameter.
    """

    xbar: np.ndarray
    gbar: np.ndarray
    upsilon_sigma: float
    lam: float
    L: float
    interior_mode: bool = False
    diameter: float = 0.0

    def __post_init__(self):
        if self.lam <= 0:
            raise GeometryError("threshold lambda must be positive")
        if self.upsilon_sigma < 0:
            raise GeometryError("upsilon_sigma must be nonnegative")
        if self.interior_mode and (self.upsilon_sigma != 0.0
                                   or np.any(np.asarray(self.gbar) != 0.0)):
            raise GeometryError("interior mode requires gbar = 0 and upsilon_sigma = 0")

    def cap(self, setup, x_prev):
        """The acceptance threshold at the current iterate."""
        if self.interior_mode:
            return self.L * self.diameter + self.lam
        return (self.L * setup.norm(np.asarray(self.xbar) - np.asarray(x_prev))
                + self.lam + self.upsilon_sigma)


def threshold_tau(sigma, N, tau, M, upsilon=0.0):
    """Confidence-matched threshold: max{sigma*sqrt(N/tau), M} + upsilon*sigma.

    Valid for 1 <= tau <= N / upsilon^2.
    """
    if tau < 1.0 or (upsilon > 0 and tau > N / upsilon ** 2):
        raise GeometryError("tau outside the validity window [1, N/upsilon^2]")
    if sigma < 0 or M < 0:
        raise GeometryError("sigma and M must be nonnegative")
    return max(sigma * math.sqrt(N / tau), M) + upsilon * sigma


def threshold_universal(sigma, N, M, upsilon=0.0):
    """Confidence-free threshold: max{sigma*sqrt(N), M} + upsilon*sigma.

    Valid for N >= upsilon^2; coarser bounds, but lambda no longer depends
    on the confidence parameter.
    """
    if N < upsilon ** 2:
        raise GeometryError("requires N >= upsilon^2")
    if sigma < 0 or M < 0:
        raise GeometryError("sigma and M must be nonnegative")
    return max(sigma * math.sqrt(N), M) + upsilon * sigma


def truncate(G, cfg, x_prev, setup):
    """Apply the truncation rule; returns (y, clipped)."""
    G = np.asarray(G, dtype=float)
    dev = G if cfg.interior_mode else G - np.asarray(cfg.gbar, dtype=float)
    if dual_norm(setup, dev) <= cfg.cap(setup, x_prev):
        return G, False
    return np.asarray(cfg.gbar, dtype=float).copy(), True


def geometric_median(samples, tol=1e-10, max_iter=2000):
    """Geometric median by Weiszfeld iteration (Euclidean metric).

    Minimizes the sum of Euclidean distances to the samples to within
    ``tol`` on the relative objective decrease, with the standard safeguard
    when an iterate coincides with a sample point. Emits a RuntimeWarning
    and returns the best iterate if the iteration budget runs out.
    """
    pts = np.asarray(samples, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise GeometryError("need at least one sample point")
    if pts.shape[0] == 1:
        return pts[0].copy()

    def objective(z):
        return float(np.sum(np.linalg.norm(pts - z, axis=1)))

    z = pts.mean(axis=0)
    f = objective(z)
    for _ in range(max_iter):
        d = np.linalg.norm(pts - z, axis=1)
        coincident = d < 1e-14
        if np.any(coincident):
            # Vardi-Zhang safeguard: pull toward the non-coincident mass
            others = ~coincident
            if not np.any(others):
                return z
            w = 1.0 / d[others]
            t = (pts[others] * w[:, None]).sum(axis=0) / w.sum()
            rvec = ((pts[others] - z) * w[:, None]).sum(axis=0)
            rnorm = np.linalg.norm(rvec)
            eta = coincident.sum()
            if rnorm <= eta:
                return z
            step = min(1.0, eta / rnorm)
            z_new = (1.0 - step) * t + step * z
        else:
            w = 1.0 / d
            z_new = (pts * w[:, None]).sum(axis=0) / w.sum()
        f_new = objective(z_new)
        if f - f_new <= tol * max(1.0, abs(f)):
            return z_new
        z, f = z_new, f_new
    warnings.warn("geometric median did not converge; returning best iterate",
                  RuntimeWarning)
    return z


def anchor_sample_count(tau):
    """Heuristic sample budget for the median anchor: 10 * ceil(tau).

    The anchor estimate needs m of order ln(1/eps) draws for failure
    probability eps = exp(-tau); the constant factor is not pinned down by
    theory, so this is a calibration placeholder.
    """
    return 10 * max(1, math.ceil(tau))


def median_anchor(instance, noise, xbar, rng, m=None, tau=2.0):
    """Anchor gradient from the geometric median of m oracle draws at xbar."""
    if m is None:
        m = anchor_sample_count(tau)
    draws = instance.grad_phi(xbar) + noise.draw(rng, size=m)
    return geometric_median(draws)
