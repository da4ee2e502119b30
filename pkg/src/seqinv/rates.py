"""Closed-form rates, tau scalings, and order checks for the key series.

Everything here lives on the idealized polynomial scale: prior eigenvalues
tau^2 i^(-1-2 alpha), singular values i^(-p), noise budget N = n tau^2, and
effective frequency rho = N^(1/(1+2 alpha+2p)). The workhorse bound is for

    sum_i xi_i^2 i^(-t) / (1 + N i^(-u))^v

with xi_i = i^(-q-1/2) S(i) for a slowly varying S: the sum is of exact
order N^(-min((t+2q)/u, v)) (S == 1), with a logarithmic factor on the
boundary. Truncated evaluation is guarded by an integral tail bound, and an
operation that would return a visibly biased sum raises instead, naming the
truncation that would have sufficed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import optimize, special

from .model import Truth
from .posterior import Functional
from .util import DegenerateInputError, RegimeError, TruncationError, stable_sum

_EULER_GAMMA = float(np.euler_gamma)
_EVAL_CHUNK = 1_000_000


@dataclass(frozen=True)
class SlowlyVarying:
    """S(x) = (log(x+1))^log_power; log_power = 0 is the unit factor."""

    log_power: float = 0.0

    def __call__(self, x):
        return np.log(np.asarray(x, dtype=float) + 1.0) ** self.log_power

    @property
    def is_unit(self) -> bool:
        return self.log_power == 0.0


@dataclass(frozen=True)
class SequenceFamily:
    """xi_i = scale * i^(-q-1/2) * (log(i+1))^log_power."""

    q: float
    log_power: float = 0.0
    scale: float = 1.0

    def __call__(self, idx):
        i = np.asarray(idx, dtype=float)
        out = self.scale * i ** (-self.q - 0.5)
        if self.log_power != 0.0:
            out = out * np.log(i + 1.0) ** self.log_power
        return out


@dataclass(frozen=True)
class RegimeParams:
    """Smoothness/scaling exponents defining an asymptotic regime.

    tau_exponent scales the prior multiplier with the noise level,
    tau = n^tau_exponent; the noise budget n tau^2 must grow, so
    1 + 2 tau_exponent > 0 is required.
    """

    alpha: float
    beta: float
    p: float
    q: float | None = None
    tau_exponent: float = 0.0

    def __post_init__(self):
        if not (self.alpha > 0):
            raise ValueError("alpha must be positive")
        if not (self.beta > 0):
            raise ValueError("beta must be positive")
        if self.p < 0:
            raise ValueError("p must be nonnegative")
        if self.q is not None and not (self.q > -self.beta):
            raise ValueError("q must exceed -beta")
        if not (1.0 + 2.0 * self.tau_exponent > 0):
            raise ValueError("need 1 + 2*tau_exponent > 0")

    @property
    def resolution_exponent(self) -> float:
        """1 + 2 alpha + 2 p, the exponent resolving the bias/variance balance."""
        return 1.0 + 2.0 * self.alpha + 2.0 * self.p

    def tau(self, n: float) -> float:
        return float(n) ** self.tau_exponent

    def noise_budget(self, n: float) -> float:
        tau = self.tau(n)
        return float(n) * tau * tau

    def effective_frequency(self, n: float) -> float:
        return self.noise_budget(n) ** (1.0 / self.resolution_exponent)

    def _require_budget(self, n: float) -> float:
        big_n = self.noise_budget(n)
        if not (big_n > 1.0):
            raise RegimeError("noise budget n*tau^2 must exceed 1")
        return big_n


class RateTerms(NamedTuple):
    term1: float  # bias-driven part
    term2: float  # variance-driven part


class FunctionalRateTerms(NamedTuple):
    term1: float
    term2: float
    gamma_n: float
    delta_n: float


# --- full-sequence contraction ---------------------------------------------

def contraction_terms(rp: RegimeParams, n: float) -> RateTerms:
    """The two summands of the contraction rate at a given n."""
    big_n = rp._require_budget(n)
    u = rp.resolution_exponent
    term1 = big_n ** (-min(rp.beta / u, 1.0))
    term2 = rp.tau(n) * big_n ** (-rp.alpha / u)
    return RateTerms(term1, term2)


def contraction_rate(rp: RegimeParams, n: float) -> float:
    """epsilon_n = (n tau^2)^(-(beta/(1+2a+2p)) ^ 1) + tau (n tau^2)^(-a/(1+2a+2p))."""
    t1, t2 = contraction_terms(rp, n)
    return t1 + t2


def contraction_exponents(rp: RegimeParams) -> RateTerms:
    """Exponents of the two terms as powers of n (log-log slopes)."""
    u = rp.resolution_exponent
    scale = 1.0 + 2.0 * rp.tau_exponent
    e1 = -scale * min(rp.beta / u, 1.0)
    e2 = rp.tau_exponent - scale * rp.alpha / u
    return RateTerms(e1, e2)


def optimal_tau_exponent(rp: RegimeParams) -> float | None:
    """Scaling exponent minimizing the contraction rate.

    Returns (alpha - beta)/(1 + 2 beta + 2 p) while the truth's smoothness
    can still be matched (beta <= 1 + 2 alpha + 2 p); above that saturation
    point no scaling recovers the optimal rate and None is returned.
    """
    if rp.beta > rp.resolution_exponent:
        return None
    return (rp.alpha - rp.beta) / (1.0 + 2.0 * rp.beta + 2.0 * rp.p)


# --- linear functionals -----------------------------------------------------

def _log_power_partial_harmonic(m: int, log_power: float) -> float:
    """sum_{i<=m} (log(i+1))^(2a) / i, exactly for a = 0 via digamma."""
    if m < 1:
        return 0.0
    if log_power == 0.0:
        return float(special.digamma(m + 1.0)) + _EULER_GAMMA
    partials = []
    for start in range(1, m + 1, _EVAL_CHUNK):
        i = np.arange(start, min(start + _EVAL_CHUNK, m + 1), dtype=float)
        partials.append(float(np.sum(np.log(i + 1.0) ** (2.0 * log_power) / i)))
    return math.fsum(partials)


def slowly_varying_corrections(rp: RegimeParams, n: float,
                               sv: SlowlyVarying | None = None
                               ) -> tuple[float, float]:
    """(gamma_n, delta_n): slowly varying corrections to the functional rate.

    gamma_n^2 is S(rho_n)^2, sum_{i<=rho_n} S(i)^2/i, or 1 according to
    beta + q <, =, > 1 + 2 alpha + 2 p; delta_n^2 follows the same trichotomy
    with q against p.
    """
    if rp.q is None:
        raise RegimeError("functional corrections need q")
    sv = sv or SlowlyVarying()
    big_n = rp._require_budget(n)
    u = rp.resolution_exponent
    rho = big_n ** (1.0 / u)

    def correction(key: float, threshold: float) -> float:
        if key < threshold:
            return float(sv(rho)) ** 2
        if key == threshold:
            return _log_power_partial_harmonic(int(math.floor(rho)), sv.log_power)
        return 1.0

    gamma_sq = correction(rp.beta + rp.q, u)
    delta_sq = correction(rp.q, rp.p)
    return math.sqrt(gamma_sq), math.sqrt(delta_sq)


def functional_rate_terms(rp: RegimeParams, n: float,
                          sv: SlowlyVarying | None = None) -> FunctionalRateTerms:
    if rp.q is None:
        raise RegimeError("functional rate needs q")
    big_n = rp._require_budget(n)
    u = rp.resolution_exponent
    gamma_n, delta_n = slowly_varying_corrections(rp, n, sv)
    e1 = min((rp.beta + rp.q) / u, 1.0)
    e2 = min((0.5 + rp.alpha + rp.q) / u, 0.5)
    term1 = big_n ** (-e1) * gamma_n
    term2 = rp.tau(n) * big_n ** (-e2) * delta_n
    return FunctionalRateTerms(term1, term2, gamma_n, delta_n)


def functional_rate(rp: RegimeParams, n: float,
                    sv: SlowlyVarying | None = None) -> float:
    t = functional_rate_terms(rp, n, sv)
    return t.term1 + t.term2


def optimal_tau_functional(rp: RegimeParams) -> float:
    """Scaling exponent balancing the functional rate's two terms.

    Defined for q < p (smoother-than-critical representers need no scaling
    and the balance degenerates). With beta~ = min(beta, 1+2 alpha+2p - q),
    the exponent is (1/2 + alpha - beta~)/(2 beta~ + 2 p).
    """
    if rp.q is None:
        raise RegimeError("functional scaling needs q")
    if not (rp.q < rp.p):
        raise RegimeError("tau scaling for functionals requires q < p")
    beta_eff = min(rp.beta, rp.resolution_exponent - rp.q)
    return (0.5 + rp.alpha - beta_eff) / (2.0 * beta_eff + 2.0 * rp.p)


def functional_tau_balance_factor(rp: RegimeParams, n: float,
                                  sv: SlowlyVarying | None = None) -> float:
    """Multiplier c on tau = c * n^optimal_tau_functional equating both terms.

    The slowly varying pieces make the balancing constant implicit; this
    solves it numerically at the given n. Raises RegimeError when the two
    terms never cross over a wide bracket.
    """
    e_star = optimal_tau_functional(rp)
    sv = sv or SlowlyVarying()
    u = 1.0 + 2.0 * rp.alpha + 2.0 * rp.p

    def gap(log_c: float) -> float:
        tau = math.exp(log_c) * float(n) ** e_star
        big_n = n * tau * tau
        if big_n <= 1.0:
            return math.inf
        rho = big_n ** (1.0 / u)
        e1 = min((rp.beta + rp.q) / u, 1.0)
        e2 = min((0.5 + rp.alpha + rp.q) / u, 0.5)
        if rp.beta + rp.q < u:
            gamma_sq = float(sv(rho)) ** 2
        elif rp.beta + rp.q == u:
            gamma_sq = _log_power_partial_harmonic(int(rho), sv.log_power)
        else:
            gamma_sq = 1.0
        if rp.q < rp.p:
            delta_sq = float(sv(rho)) ** 2
        elif rp.q == rp.p:
            delta_sq = _log_power_partial_harmonic(int(rho), sv.log_power)
        else:
            delta_sq = 1.0
        t1 = big_n ** (-e1) * math.sqrt(gamma_sq)
        t2 = tau * big_n ** (-e2) * math.sqrt(delta_sq)
        return math.log(t1) - math.log(t2)

    lo, hi = -18.0, 18.0
    glo, ghi = gap(lo), gap(hi)
    if not (math.isfinite(ghi)) or glo == ghi or (glo > 0) == (ghi > 0):
        raise RegimeError("rate terms do not balance at this n")
    root = optimize.brentq(gap, lo, hi, xtol=1e-12)
    return math.exp(root)


# --- truncated series with tail guards -------------------------------------

def _resolve_tail(xi, tail_q, tail_log_power, tail_scale):
    if isinstance(xi, SequenceFamily):
        return xi.q, xi.log_power, xi.scale
    if tail_q is None:
        raise ValueError("tail_q is required unless xi is a SequenceFamily")
    return float(tail_q), float(tail_log_power or 0.0), float(tail_scale or 1.0)


def _xi_values(xi, i: np.ndarray) -> np.ndarray:
    if isinstance(xi, (SequenceFamily,)) or callable(xi):
        return np.asarray(xi(i), dtype=float)
    arr = np.asarray(xi, dtype=float)
    lo = int(i[0]) - 1
    hi = int(i[-1])
    if hi > arr.size:
        raise TruncationError("xi array shorter than requested truncation",
                              required_trunc=None)
    return arr[lo:hi]


def _tail_bound(q: float, lp: float, sc: float, t: float, trunc: int) -> float:
    """Integral bound on sum_{i>trunc} xi_i^2 i^(-t) (denominator dropped)."""
    s_exp = t + 2.0 * q
    log_t = math.log(trunc + 1.0)
    if lp > 0:
        # the x2 slack covers the growing log factor once log(T) >= 4 lp/s.
        if log_t < 4.0 * lp / s_exp:
            return math.inf
        slack = 2.0
    else:
        slack = 1.0
    return sc * sc * slack * log_t ** (2.0 * lp) * trunc ** (-s_exp) / s_exp


def _required_trunc(q: float, lp: float, sc: float, t: float,
                    budget: float) -> int:
    s_exp = t + 2.0 * q
    base = (sc * sc * 2.0 / (s_exp * budget)) ** (1.0 / s_exp)
    if lp > 0 and base > 1.0:
        base *= math.log(base + 1.0) ** (2.0 * lp / s_exp)
    return int(math.ceil(1.2 * max(base, 10.0)))


def series_lemma_sum(xi, t: float, u: float, v: float, N: float, trunc: int, *,
                     tail_q: float | None = None,
                     tail_log_power: float | None = None,
                     tail_scale: float | None = None,
                     rel_tail_tol: float = 1e-6) -> float:
    """sum_{i<=trunc} xi_i^2 i^(-t) / (1 + N i^(-u))^v, tail-checked.

    xi is a SequenceFamily (decay read off directly), a callable on index
    arrays, or a plain array; for the latter two the tail envelope
    |xi_i| <= tail_scale * i^(-tail_q-1/2) (log(i+1))^tail_log_power must be
    declared. Raises TruncationError when the analytic tail bound exceeds
    rel_tail_tol of the computed head, reporting a sufficient truncation.
    """
    if not (u > 0):
        raise ValueError("u must be positive")
    if v < 0:
        raise ValueError("v must be nonnegative")
    if N < 0:
        raise ValueError("N must be nonnegative")
    trunc = int(trunc)
    if trunc < 1:
        raise ValueError("trunc must be positive")
    q, lp, sc = _resolve_tail(xi, tail_q, tail_log_power, tail_scale)
    s_exp = t + 2.0 * q
    if s_exp <= 0:
        raise TruncationError(
            "series tail is not summable (t + 2q <= 0)", required_trunc=None)

    partials = []
    for start in range(1, trunc + 1, _EVAL_CHUNK):
        i = np.arange(start, min(start + _EVAL_CHUNK, trunc + 1), dtype=float)
        vals = _xi_values(xi, i)
        terms = vals * vals * i ** (-t)
        if v != 0.0 and N != 0.0:
            terms = terms / (1.0 + N * i ** (-u)) ** v
        partials.append(float(terms.sum()))
    head = math.fsum(partials)

    tail = _tail_bound(q, lp, sc, t, trunc)
    if head == 0.0:
        if tail > 0.0:
            raise TruncationError(
                "zero head with nonzero tail bound", required_trunc=None)
        return 0.0
    if tail > rel_tail_tol * abs(head):
        needed = _required_trunc(q, lp, sc, t, rel_tail_tol * abs(head))
        raise TruncationError(
            f"trunc={trunc} leaves tail bound {tail:.3e} > "
            f"{rel_tail_tol:.0e} of head {head:.6e}",
            required_trunc=needed)
    return head


def series_lemma_sum_auto(xi, t: float, u: float, v: float, N: float, *,
                          start_trunc: int | None = None,
                          max_trunc: int = 40_000_000,
                          rel_tail_tol: float = 1e-6, **tail_kw) -> float:
    """series_lemma_sum with automatic truncation growth."""
    if start_trunc is None:
        guess = 1000 if N <= 1.0 else 50.0 * N ** (1.0 / u)
        start_trunc = int(min(max_trunc, max(1000, math.ceil(guess))))
    trunc = start_trunc
    for _ in range(8):
        try:
            return series_lemma_sum(xi, t, u, v, N, trunc,
                                    rel_tail_tol=rel_tail_tol, **tail_kw)
        except TruncationError as err:
            if err.required_trunc is None:
                raise
            nxt = max(2 * trunc, err.required_trunc)
            if nxt > max_trunc:
                raise TruncationError(
                    f"required truncation {nxt} exceeds cap {max_trunc}",
                    required_trunc=nxt) from err
            trunc = nxt
    raise TruncationError("tail tolerance not reached", required_trunc=trunc)


def series_order_exponent(q: float, t: float, u: float, v: float) -> float:
    """min((t+2q)/u, v): the decay order of the series in N."""
    return min((t + 2.0 * q) / u, v)


def series_limit_value(xi, t: float, u: float, v: float, *,
                       max_trunc: int = 40_000_000,
                       rel_tail_tol: float = 1e-6, **tail_kw) -> float:
    """lim_N N^v * sum: equals sum_i xi_i^2 i^(u v - t) on the v-branch.

    Only meaningful when (t + 2q)/u > v; the reduced series must itself be
    summable (t + 2q > u v).
    """
    return series_lemma_sum_auto(xi, t - u * v, u, 0.0, 0.0,
                                 max_trunc=max_trunc,
                                 rel_tail_tol=rel_tail_tol, **tail_kw)


# --- fixed-truth bias diagnostics ------------------------------------------

@dataclass(frozen=True)
class FixedBiasReport:
    """Bias series vs its worst-case envelope along an n grid."""

    n_grid: tuple
    series: tuple
    envelope: tuple
    ratio: tuple
    decreasing: bool


def fixed_bias_smallness_check(mu0: Truth, l: Functional, rp: RegimeParams,
                               n_grid: Sequence[float]) -> FixedBiasReport:
    """Check that a fixed truth's bias beats the uniform-over-ball envelope.

    Computes sum_i |l_i mu_i| / (1 + N i^-u) with N = n tau^2 and
    u = 1 + 2 alpha + 2p, divides by the ball-wide envelope
    N^(-(2 beta+2q)/(2u)) S(N^(1/u)), and reports whether the ratio decreases
    along the grid (the dominated-convergence gain of fixing the truth).
    """
    q = l.q
    if l.trunc != mu0.trunc:
        raise DimensionMismatchError("functional and truth lengths differ")
    t = 2.0 * mu0.beta
    u = rp.resolution_exponent
    if not (t + 2.0 * q < 2.0 * u):
        raise RegimeError("bias envelope needs 2 beta + 2q < 2(1+2 alpha+2p)")
    grid = [float(v) for v in n_grid]
    if len(grid) < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("n_grid must be strictly increasing, length >= 2")

    sv = l.sv_note if isinstance(l.sv_note, SlowlyVarying) else SlowlyVarying()
    i = np.arange(1, l.trunc + 1, dtype=float)
    absprod = np.abs(l.coeffs * mu0.coeffs)
    if not np.any(absprod > 0):
        raise DegenerateInputError("functional-truth product is identically zero")
    amp = float(np.max(np.abs(l.coeffs) * i ** (q + 0.5) / sv(i)))

    series, envelope, ratio = [], [], []
    for n in grid:
        big_n = rp._require_budget(n)
        series_val = stable_sum(absprod / (1.0 + big_n * i ** (-u)))
        env_val = amp * big_n ** (-(t + 2.0 * q) / (2.0 * u)) \
            * float(sv(big_n ** (1.0 / u)))
        series.append(series_val)
        envelope.append(env_val)
        ratio.append(series_val / env_val)
    decreasing = all(b < a for a, b in zip(ratio, ratio[1:]))
    return FixedBiasReport(n_grid=tuple(grid), series=tuple(series),
                           envelope=tuple(envelope), ratio=tuple(ratio),
                           decreasing=decreasing)
