"""Restart scheme for objectives with quadratic growth.

Stage k minimizes F over the set intersected with the ball of radius
r_{k-1} around the previous stage output, using stage-local threshold and
step parameters; the radii contract as r_k^2 = 2^{-k} r_0^2. Under
quadratic growth F - F_* >= (kappa/2) dist^2 each stage halves the squared
distance to the minimizer set with probability 1 - 2 exp(-tau).
"""

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from . import geometry as geo
from .geometry import GeometryError, GeometrySetup
from .solver import RsmdConfig, run
from .truncation import TruncationConfig

# stage-budget constants read off the explicit high-probability bound;
# configurable because the theory states them only as numerical constants
DEFAULT_C1 = 46.0
DEFAULT_C2 = 62.0


@dataclass(frozen=True)
class StagePlan:
    """Stage radii and budgets fitting a total iteration budget N."""

    r0: float
    radii: tuple          # (r_0, r_1, ..., r_m)
    budgets: tuple        # (N_1, ..., N_m)
    m: int
    kappa: float
    L: float
    sigma: float
    tau: float
    Theta: float
    C1: float
    C2: float
    N_total: int


def stage_budget(kappa, L, sigma, tau, Theta, r_prev, C1=DEFAULT_C1, C2=DEFAULT_C2):
    """The fractional stage budget: max{4 C1 L tv/kappa, 16 C2 sigma^2 tv/(kappa^2 r^2)}
    with tv = max(tau, Theta)."""
    tv = max(tau, Theta)
    return max(4.0 * C1 * L * tv / kappa,
               16.0 * C2 * sigma ** 2 * tv / (kappa ** 2 * r_prev ** 2))


def stage_schedule(kappa, L, sigma, tau, Theta, r0, N, C1=DEFAULT_C1, C2=DEFAULT_C2):
    """Plan the stages: N_k = ceil(budget_k), m(N) = max{k : sum N_j <= N}.

    m may be 0 (budget too small for one stage); the plan then carries no
    stages and the runner returns the start point unchanged.
    """
    if min(kappa, L, r0, N) <= 0 or tau <= 0 or Theta <= 0:
        raise GeometryError("schedule inputs must be positive")
    radii = [float(r0)]
    budgets = []
    total = 0
    k = 0
    while k < 10 ** 6:
        r_prev = radii[-1]
        Nk = math.ceil(stage_budget(kappa, L, sigma, tau, Theta, r_prev, C1, C2))
        if total + Nk > N:
            break
        budgets.append(Nk)
        total += Nk
        k += 1
        radii.append(r0 * 2.0 ** (-k / 2.0))
    return StagePlan(r0=float(r0), radii=tuple(radii), budgets=tuple(budgets),
                     m=len(budgets), kappa=kappa, L=L, sigma=sigma, tau=tau,
                     Theta=Theta, C1=C1, C2=C2, N_total=N)


def run_multistage(instance, noise, plan, rng, x0=None, truncation=None,
                   keep_traces=False):
    """Execute the staged scheme; returns (y_final, stage_log).

    Per stage k (radius r = r_{k-1}, budget N_k):
      lambda_k = max{sigma sqrt(N_k / tau), L r} + upsilon*sigma,
      beta_k   = max{2L, sigma sqrt(N_k) / (r sqrt(Theta))},
    run on the set intersected with the ball of radius r around the previous
    output, with the proxy re-centered there and scaled to r. The anchor
    (xbar, gbar, upsilon*sigma) is reused across stages. A stage prox
    failure aborts with the partial log (entry `aborted`).
    """
    setup = instance.geometry
    y = np.asarray(x0 if x0 is not None else setup.center, dtype=float).copy()
    if truncation is None:
        us = 0.0
        anchor_g = instance.grad_phi(y)
    else:
        us = truncation.upsilon_sigma
        anchor_g = np.asarray(truncation.gbar, dtype=float)
    anchor_x = y.copy() if truncation is None else np.asarray(truncation.xbar, dtype=float)

    log = []
    for k in range(1, plan.m + 1):
        r = plan.radii[k - 1]
        Nk = plan.budgets[k - 1]
        lam = max(plan.sigma * math.sqrt(Nk / plan.tau), plan.L * r) + us
        beta = max(2.0 * plan.L, plan.sigma * math.sqrt(Nk) / (r * math.sqrt(plan.Theta)))
        stage_setup = GeometrySetup(setup.kind, setup.dim, y.copy(), r)
        stage_instance = replace(instance, geometry=stage_setup)
        cfg = RsmdConfig(
            beta=beta, N=Nk,
            truncation=TruncationConfig(xbar=anchor_x, gbar=anchor_g,
                                        upsilon_sigma=us, lam=lam, L=plan.L),
            x0=y, extra_ball=(y.copy(), r))
        entry = {"stage": k, "N_k": Nk, "r_prev": r, "lambda": lam, "beta": beta}
        try:
            trace = run(cfg, stage_instance, noise, rng)
        except geo.ProxError as exc:
            entry["aborted"] = str(exc)
            log.append(entry)
            return y, log
        y = trace.xhat
        entry["gap"] = float(instance.phi(y) + instance.penalty.value(y)
                             - instance.Fstar)
        entry["dist"] = float(setup.norm(y - instance.xstar))
        entry["clip_count"] = int(np.sum(trace.clipped))
        if keep_traces:
            entry["trace"] = trace
        log.append(entry)
    return y, log


def export_stage_log_csv(log, path, header_comment=None):
    """Stage log CSV: (stage, N_k, r_prev, lambda, beta, gap, dist)."""
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh)
        w.writerow(["stage", "N_k", "r_prev", "lambda", "beta", "gap", "dist"])
        for e in log:
            w.writerow([e["stage"], e["N_k"], repr(e["r_prev"]), repr(e["lambda"]),
                        repr(e["beta"]), repr(e.get("gap", float("nan"))),
                        repr(e.get("dist", float("nan")))])
