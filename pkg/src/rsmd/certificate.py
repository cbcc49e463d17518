"""Computable accuracy certificates for stochastic first-order trajectories.

For any trajectory x_0..x_N with averaged solution xhat = mean(x_1..x_N),

    eps_N(t)  = N^{-1} sup_z sum_i [ <grad phi(x_{i-1}), x_i - z>
                                     + psi(x_i) - psi(z) + t V_{x_{i-1}}(x_i) ]

upper-bounds F(xhat) - F_* for any t >= L, but needs the unknown gradient.
Replacing it by the recorded truncated gradients y_i gives the computable
analogue eps_hat_N(t); adding the deviation allowance rho_bar(tau)/N yields
the certificate Delta_N(tau, t) = eps_hat_N(t) + rho_bar(tau)/N which holds
with probability at least 1 - 2 exp(-tau) when the y_i were produced with
the tau-matched threshold.

The sup over z is computed exactly through the linear minimization oracle
(the beta = 0 prox form), never by sampling.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .geometry import GeometryError


@dataclass(frozen=True)
class Certificate:
    eps_hat: float
    rho_bar: float
    delta: float
    tau: float
    t: float
    heuristic: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.eps_hat) and math.isfinite(self.rho_bar)
                and math.isfinite(self.delta)):
            raise GeometryError("certificate components must be finite")
        if self.rho_bar < 0:
            raise GeometryError("rho_bar must be nonnegative")


def _sup_linear(trace, a_sum):
    """sup_z { <-a_sum, z> - N psi(z) } over the feasible set, exact."""
    pen_scaled = trace.penalty.scaled(trace.N)
    _, val = geo.linear_min(trace.geometry, trace.set_, pen_scaled, a_sum)
    return -val


def _eps_from_gradients(trace, grads, t):
    inner = float(np.einsum("ij,ij->i", grads, trace.xs[1:]).sum())
    psi_sum = float(sum(trace.penalty.value(x) for x in trace.xs[1:]))
    const = inner + psi_sum + t * trace.bregman_sum()
    a_sum = grads.sum(axis=0)
    return (const + _sup_linear(trace, a_sum)) / trace.N


def eps_true(trace, instance, t):
    """The oracle-knowledge accuracy functional eps_N(t) (test support)."""
    if t < instance.L - 1e-12:
        raise GeometryError("t must be at least the Lipschitz constant")
    grads = trace.xs[:-1] @ instance.A - instance.b
    return _eps_from_gradients(trace, grads, t)


def eps_hat(trace, t, L=None):
    """The computable analogue of eps_N(t), using recorded gradients y_i."""
    if L is not None and t < L - 1e-12:
        raise GeometryError("t must be at least the Lipschitz constant")
    return _eps_from_gradients(trace, trace.ys, t)


def rho_mu_profile(A_max, S, mu):
    """The mu-section of the deviation allowance: 20 mu A + S / mu."""
    return 20.0 * mu * A_max + (S / mu if mu > 0 else np.inf)


def rho_bar(trace, tau, R, Theta, sigma, M):
    """Deviation allowance rho_bar_N(tau) with the mu-minimum in closed form.

    With A = max{N sigma^2, M^2 tau} and S = sum_i V_{x_{i-1}}(x_i):

        rho_bar = 4 R sqrt(5 Theta A) + 16 R max{sigma sqrt(N tau), M tau}
                  + 2 sqrt(20 A S)

    (the last term is min_mu {20 mu A + S/mu}; S = 0 gives 0 as mu -> inf).
    """
    if tau <= 0:
        raise GeometryError("tau must be positive")
    N = trace.N
    A_max = max(N * sigma ** 2, M ** 2 * tau)
    S = trace.bregman_sum()
    term1 = 4.0 * R * math.sqrt(5.0 * Theta * A_max)
    term2 = 16.0 * R * max(sigma * math.sqrt(N * tau), M * tau)
    term3 = 2.0 * math.sqrt(20.0 * A_max * S)
    return term1 + term2 + term3


def delta(trace, tau, t, R, Theta, sigma, M, L=None):
    """Assemble the certificate Delta_N(tau, t) = eps_hat + rho_bar / N.

    Certificates for traces produced with the universal threshold (or with a
    mismatched tau) are flagged heuristic: the guarantee's proof requires
    y_i computed with the tau-matched threshold.
    """
    eh = eps_hat(trace, t, L=L)
    rb = rho_bar(trace, tau, R, Theta, sigma, M)
    policy = trace.meta.get("threshold_policy")
    trace_tau = trace.meta.get("tau")
    heuristic = (policy is not None and policy != "tau") or \
        (trace_tau is not None and abs(trace_tau - tau) > 1e-12)
    if heuristic:
        trace.meta.setdefault("certificate_mismatch", []).append(
            {"policy": policy, "trace_tau": trace_tau, "requested_tau": tau})
    return Certificate(eps_hat=eh, rho_bar=rb, delta=eh + rb / trace.N,
                       tau=tau, t=t, heuristic=heuristic)
