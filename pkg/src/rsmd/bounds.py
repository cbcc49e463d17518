"""Closed-form theoretical error bounds (pure functions of scalar inputs)."""

import math

from .geometry import GeometryError

THEOREM2_DEFAULT_C = 62.0


def bound_corollary1(L, R, Theta, sigma, N):
    """Expected-gap bound for the truncated method at lambda >= max{M, sigma sqrt(N)}:

    max{ 2 L R^2 Theta / N + 4 R sigma (1 + sqrt(Theta)) / sqrt(N),
         2 R sigma (1 + 4 sqrt(Theta)) / sqrt(N) }.
    """
    _check(L, R, Theta, N)
    rt = math.sqrt(Theta)
    a = 2.0 * L * R * R * Theta / N + 4.0 * R * sigma * (1.0 + rt) / math.sqrt(N)
    b = 2.0 * R * sigma * (1.0 + 4.0 * rt) / math.sqrt(N)
    return max(a, b)


def bound_theorem1(L, R, Theta, sigma, N, tau, upsilon=0.0):
    """High-probability gap bound (>= 1 - 2 exp(-tau)) for the tau-matched
    threshold, with the explicit constants:

    N^{-1} max{46 L R^2 tau, 4 L R^2 Theta, 62 sigma R sqrt(N Theta),
               16 sigma R sqrt(N tau)}.
    """
    _check(L, R, Theta, N)
    if tau < 1.0 or (upsilon > 0 and tau > N / upsilon ** 2):
        raise GeometryError("tau outside the validity window [1, N/upsilon^2]")
    lr2 = L * R * R
    sr = sigma * R
    return max(46.0 * lr2 * tau, 4.0 * lr2 * Theta,
               62.0 * sr * math.sqrt(N * Theta),
               16.0 * sr * math.sqrt(N * tau)) / N


def bound_theorem2(L, R, Theta, sigma, N, tau, C=THEOREM2_DEFAULT_C, upsilon=0.0):
    """High-probability gap bound for the universal (tau-free) threshold:

    C * max{ L R^2 max(tau, Theta) / N, tau sigma R sqrt(Theta / N) }.

    The numerical constant is not pinned down by the theory; the default is
    conservative and coverage tests are the ground truth.
    """
    _check(L, R, Theta, N)
    if N < upsilon ** 2:
        raise GeometryError("requires N >= upsilon^2")
    return C * max(L * R * R * max(tau, Theta) / N,
                   tau * sigma * R * math.sqrt(Theta / N))


def _check(L, R, Theta, N):
    if L < 0 or R <= 0 or Theta <= 0 or N <= 0:
        raise GeometryError("bound inputs must be positive (L, sigma >= 0)")
