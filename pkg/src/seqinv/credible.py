"""Credible sets and their frequentist coverage.

Two weight sequences control everything. The posterior spread weights
s_i = lambda_i/(1+g_i) give the law of the credible-ball radius statistic
U = sum_i s_i Z_i^2; the sampling weights t_i = lambda_i g_i/(1+g_i)^2 give
the law V = sum_i t_i Z_i^2 of the posterior mean around its expectation.
Coordinatewise t_i <= s_i always (exactly, in floating point), with gap
s_i - t_i = lambda_i/(1+g_i)^2; how far the two laws separate decides
whether credible sets are conservative, honest, or misleading.

All quantile/coverage conventions use lower Gaussian quantiles: z_gamma < 0
for gamma < 1/2, and a central credible interval is
[mean + z_{gamma/2} s_n, mean - z_{gamma/2} s_n].
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate, stats

from .model import ForwardSpec, PriorSpec, gain
from .posterior import Functional, _shrink
from .util import (
    DegenerateInputError,
    DimensionMismatchError,
    rng_for,
    seed_tag,
    stable_sum,
)

_MC_CHUNK = 8192


@dataclass(frozen=True)
class EigenWeights:
    """Spread weights s_w and sampling weights t_w at a fixed n."""

    s_w: np.ndarray
    t_w: np.ndarray
    n: float

    def __post_init__(self):
        s = np.ascontiguousarray(self.s_w, dtype=float)
        t = np.ascontiguousarray(self.t_w, dtype=float)
        if s.shape != t.shape or s.ndim != 1:
            raise DimensionMismatchError("weight arrays must be 1-d, same length")
        if np.any(t < 0) or np.any(s < t):
            raise ValueError("need 0 <= t_w <= s_w coordinatewise")
        s.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "s_w", s)
        object.__setattr__(self, "t_w", t)

    @property
    def trunc(self) -> int:
        return int(self.s_w.size)

    def noise_only(self) -> "EigenWeights":
        """Weights whose ball statistic is the posterior-mean sampling law."""
        return EigenWeights(s_w=self.t_w, t_w=self.t_w, n=self.n)


@dataclass(frozen=True)
class CoverageReport:
    radius_or_halfwidth: float
    coverage: float
    method: str  # "exact-normal" | "monte-carlo"
    mc_stderr: float | None = None
    mc_samples: int | None = None
    seed_key: str | None = None

    def __post_init__(self):
        if self.method not in ("exact-normal", "monte-carlo"):
            raise ValueError(f"unknown method {self.method!r}")
        is_mc = self.method == "monte-carlo"
        if is_mc != (self.mc_stderr is not None):
            raise ValueError("mc_stderr must be present exactly for monte-carlo")
        if not (0.0 <= self.coverage <= 1.0):
            raise ValueError("coverage must lie in [0, 1]")


class BvmDiagnostics(NamedTuple):
    ratio: float      # s_n / t_n
    sup_bias: float   # worst bias over the unit Sobolev-beta ball
    tv: float         # TV distance between N(0, s_n^2) and N(0, t_n^2)


def credible_weights(prior: PriorSpec, fwd: ForwardSpec, n: float) -> EigenWeights:
    """Compute both weight sequences from one shared gain factor."""
    if not (n > 0):
        raise ValueError("n must be positive")
    lam = prior.eigenvalues()
    g = gain(prior, fwd, n)
    s = lam / (1.0 + g)
    t = s * _shrink(g)
    return EigenWeights(s_w=s, t_w=t, n=float(n))


def _chi_bar_quantile_mc(weights: np.ndarray, prob: float, mc_samples: int,
                         seed) -> float:
    """Empirical `prob`-quantile of sum_i w_i Z_i^2.

    Chunked with per-chunk derived streams in fixed order, so the result does
    not depend on how the chunks are scheduled.
    """
    draws = np.empty(mc_samples)
    pos = 0
    chunk_idx = 0
    k = weights.size
    while pos < mc_samples:
        rows = min(_MC_CHUNK, mc_samples - pos)
        rng = rng_for(seed, chunk_idx)
        z = rng.standard_normal((rows, k))
        np.square(z, out=z)
        draws[pos:pos + rows] = z @ weights
        pos += rows
        chunk_idx += 1
    return float(np.quantile(draws, prob))


def ball_radius(w: EigenWeights, gamma: float, method: str = "monte-carlo",
                mc_samples: int = 200_000, seed: int = 0) -> float:
    """Radius r with P(sum_i s_i Z_i^2 <= r^2) = 1 - gamma.

    method "monte-carlo" (default): empirical quantile with a fixed seed.
    method "satterthwaite": moment-matched scaled chi-square, for use as a
    cross-check, not as the primary path.
    """
    if not (0.0 < gamma < 1.0):
        raise ValueError("gamma must lie in (0, 1)")
    s = w.s_w
    if not np.any(s > 0):
        warnings.warn("all-zero spread weights; radius degenerates to 0")
        return 0.0
    if method == "monte-carlo":
        if mc_samples < 10_000:
            raise ValueError("mc_samples must be at least 10_000")
        r_sq = _chi_bar_quantile_mc(s, 1.0 - gamma, int(mc_samples), seed)
        return math.sqrt(r_sq)
    if method == "satterthwaite":
        m1 = stable_sum(s)
        m2 = stable_sum(s * s)
        scale = m2 / m1
        dof = m1 * m1 / m2
        return math.sqrt(scale * stats.chi2.ppf(1.0 - gamma, dof))
    raise ValueError(f"unknown method {method!r}")


def ball_coverage(w: EigenWeights, bias, r: float, method: str = "monte-carlo",
                  mc_samples: int = 2000, seed: int = 0) -> CoverageReport:
    """P(sum_i (sqrt(t_i) Z_i + b_i)^2 <= r^2) for the posterior-mean law.

    `bias` is the coordinatewise posterior-mean bias at the truth of
    interest (see posterior.bias_coordinates).
    """
    if method != "monte-carlo":
        raise ValueError("ball coverage is only available by monte-carlo")
    if r < 0:
        raise ValueError("radius must be nonnegative")
    b = np.ascontiguousarray(bias, dtype=float).ravel()
    if b.size != w.trunc:
        raise DimensionMismatchError("bias length != weight length")
    sd = np.sqrt(w.t_w)
    r_sq = r * r
    hits = 0
    pos = 0
    chunk_idx = 0
    m = int(mc_samples)
    if m < 1:
        raise ValueError("mc_samples must be positive")
    while pos < m:
        rows = min(_MC_CHUNK, m - pos)
        rng = rng_for(seed, chunk_idx)
        z = rng.standard_normal((rows, b.size))
        z *= sd
        z += b
        np.square(z, out=z)
        hits += int(np.count_nonzero(z.sum(axis=1) <= r_sq))
        pos += rows
        chunk_idx += 1
    p_hat = hits / m
    stderr = math.sqrt(p_hat * (1.0 - p_hat) / m)
    return CoverageReport(radius_or_halfwidth=float(r), coverage=p_hat,
                          method="monte-carlo", mc_stderr=stderr,
                          mc_samples=m, seed_key=seed_tag(seed))


def interval_coverage(bias: float, s_n: float, t_n: float, gamma: float) -> float:
    """Exact frequentist coverage of the central credible interval.

    The posterior-mean functional is N(truth + bias, t_n^2); the interval has
    half-width -z_{gamma/2} s_n. Coverage is
    Phi((-z s_n - bias)/t_n) - Phi((z s_n - bias)/t_n) with z = z_{gamma/2} < 0.
    """
    if not (0.0 < gamma < 1.0):
        raise ValueError("gamma must lie in (0, 1)")
    if not (s_n > 0) or not (t_n > 0):
        raise DegenerateInputError("s_n and t_n must be positive")
    z = stats.norm.ppf(gamma / 2.0)
    hi = (-z * s_n - bias) / t_n
    lo = (z * s_n - bias) / t_n
    return float(stats.norm.cdf(hi) - stats.norm.cdf(lo))


def _tv_centered_normals(s: float, t: float) -> float:
    """TV distance between N(0, s^2) and N(0, t^2), in [0, 1].

    Adaptive quadrature of |p - q|/2 on [-10 max(s,t), 10 max(s,t)]; the
    integrand's kinks at the density crossings are passed as break points.
    """
    if s == t:
        return 0.0
    lo_sd, hi_sd = (s, t) if s < t else (t, s)
    lim = 10.0 * hi_sd
    # densities cross at x^2 = 2 log(hi/lo) * lo^2 hi^2 / (hi^2 - lo^2)
    x_star = math.sqrt(2.0 * math.log(hi_sd / lo_sd)
                       * lo_sd ** 2 * hi_sd ** 2 / (hi_sd ** 2 - lo_sd ** 2))

    c_s = 1.0 / (s * math.sqrt(2.0 * math.pi))
    c_t = 1.0 / (t * math.sqrt(2.0 * math.pi))

    def absdiff(x: float) -> float:
        return abs(c_s * math.exp(-0.5 * (x / s) ** 2)
                   - c_t * math.exp(-0.5 * (x / t) ** 2))

    val, _ = integrate.quad(absdiff, -lim, lim, epsabs=1e-8, limit=200,
                            points=(-x_star, x_star))
    return 0.5 * float(val)


def bvm_diagnostics(prior: PriorSpec, fwd: ForwardSpec, l: Functional,
                    n: float, beta: float) -> BvmDiagnostics:
    """Spread-vs-sampling diagnostics for the functional's credible interval.

    ratio s_n/t_n -> 1 is the hallmark of correct uncertainty calibration;
    sup_bias = sqrt(sum_i l_i^2 i^(-2 beta) / (1+g_i)^2) is the exact worst
    bias over the unit Sobolev-beta ball (Cauchy-Schwarz is attained by the
    extremal truth); tv is the TV distance between the two centered Gaussian
    laws.
    """
    if l.trunc != prior.trunc:
        raise DimensionMismatchError("functional and prior lengths differ")
    lam = prior.eigenvalues()
    g = gain(prior, fwd, n)
    denom = 1.0 + g
    l_sq = l.coeffs ** 2
    s_sq = stable_sum(l_sq * (lam / denom))
    if s_sq == 0.0:
        raise DegenerateInputError("functional has zero posterior spread")
    t_sq = stable_sum(l_sq * (lam / denom) * _shrink(g))
    i = prior.indices()
    sup_bias = math.sqrt(stable_sum(l_sq * i ** (-2.0 * beta) / (denom * denom)))
    s_n = math.sqrt(s_sq)
    t_n = math.sqrt(t_sq)
    ratio = s_n / t_n if t_n > 0 else math.inf
    tv = _tv_centered_normals(s_n, t_n) if t_n > 0 else 1.0
    return BvmDiagnostics(ratio=ratio, sup_bias=sup_bias, tv=tv)
