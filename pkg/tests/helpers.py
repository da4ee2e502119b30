"""Shared test oracles, independent of the library's formulas."""
import math

import numpy as np


def grid_posterior(n, lam, kappa, y):
    """Posterior mean/variance of one coordinate by direct grid integration.

    Normalizes exp(-mu^2/(2 lam) - n (y - kappa mu)^2 / 2) numerically. The
    grid scale comes from the elementary bound 1/v = 1/lam + n kappa^2, which
    pins sd between min(prior_sd, like_sd)/sqrt(2) and min(prior_sd, like_sd);
    the mode is located by bracket shrinking around the running argmax, so no
    closed-form posterior quantity is consumed.
    """

    def logf(mu):
        return -mu * mu / (2.0 * lam) - 0.5 * n * (y - kappa * mu) ** 2

    prior_sd = math.sqrt(lam)
    like_sd = 1.0 / (kappa * math.sqrt(n))
    sd_bound = min(prior_sd, like_sd)
    lo = min(-12.0 * prior_sd, y / kappa - 12.0 * like_sd)
    hi = max(12.0 * prior_sd, y / kappa + 12.0 * like_sd)
    for _ in range(60):
        xs = np.linspace(lo, hi, 4001)
        h = xs[1] - xs[0]
        if h <= 1e-3 * sd_bound:
            break
        k = int(np.argmax(logf(xs)))
        lo = xs[max(k - 1, 0)]
        hi = xs[min(k + 1, 4000)]
    mode = xs[int(np.argmax(logf(xs)))]
    grid = np.linspace(mode - 17.0 * sd_bound, mode + 17.0 * sd_bound, 20001)
    lg = logf(grid)
    w = np.exp(lg - lg.max())
    z = math.fsum(w)
    mean = math.fsum(w * grid) / z
    var = math.fsum(w * (grid - mean) ** 2) / z
    return mean, var
