"""Robust stochastic mirror descent under heavy-tailed gradient noise.

Composite convex stochastic optimization with truncated stochastic
gradients, computable accuracy certificates, a multistage restart scheme
for quadratic-growth objectives, and a Monte Carlo coverage harness.
"""

from ._kernels import BACKEND
from .bounds import bound_corollary1, bound_theorem1, bound_theorem2
from .certificate import Certificate, delta, eps_hat, eps_true, rho_bar
from .geometry import (CompositePenalty, FeasibleSet, GeometryError,
                       GeometrySetup, ProxError, bregman, composite_prox,
                       dual_norm, linear_min, proxy)
from .multistage import StagePlan, run_multistage, stage_schedule
from .problems import (NoiseModel, ProblemInstance, calibrate_noise,
                       make_instance, objective, sample_gradient)
from .solver import (RsmdConfig, RunTrace, auxiliary_sequence, gap_epsilon,
                     run, step, stepsize_constant)
from .truncation import (TruncationConfig, geometric_median, threshold_tau,
                         threshold_universal, truncate)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Certificate",
    "CompositePenalty",
    "FeasibleSet",
    "GeometryError",
    "GeometrySetup",
    "NoiseModel",
    "ProblemInstance",
    "ProxError",
    "RsmdConfig",
    "RunTrace",
    "StagePlan",
    "TruncationConfig",
    "auxiliary_sequence",
    "bound_corollary1",
    "bound_theorem1",
    "bound_theorem2",
    "bregman",
    "calibrate_noise",
    "composite_prox",
    "delta",
    "dual_norm",
    "eps_hat",
    "eps_true",
    "gap_epsilon",
    "geometric_median",
    "linear_min",
    "make_instance",
    "objective",
    "proxy",
    "rho_bar",
    "run",
    "run_multistage",
    "sample_gradient",
    "stage_schedule",
    "step",
    "stepsize_constant",
    "threshold_tau",
    "threshold_universal",
    "truncate",
]
