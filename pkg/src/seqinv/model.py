"""Problem definitions in sequence space.

A mildly ill-posed linear inverse problem is diagonalized by the SVD of the
forward operator: the unknown function is the coefficient sequence mu, the
operator acts by multiplication with singular values kappa_i ~ i^{-p}, and
the data are the noisy coefficients

    Y_i = kappa_i mu_i + Z_i / sqrt(n),   Z_i iid standard normal.

The prior puts independent N(0, lambda_i) mass on each coordinate with
lambda_i = tau^2 i^{-(1+2*alpha)}: alpha is the prior regularity, tau an
overall scale. Everything downstream (posterior, credible sets, rates)
consumes the two spec objects defined here plus a Truth and an Observation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .util import (
    DegenerateInputError,
    DimensionMismatchError,
    TruncationError,
    read_csv,
    rng_for,
    stable_sum,
    write_csv,
)


class KappaKind(str, Enum):
    EXACT_POLYNOMIAL = "poly"
    VOLTERRA = "volterra"
    CUSTOM = "custom"


def _frozen_array(obj, name: str, values) -> None:
    a = np.ascontiguousarray(values, dtype=float)
    if a.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    a.flags.writeable = False
    object.__setattr__(obj, name, a)


@dataclass(frozen=True)
class PriorSpec:
    """Gaussian prior with polynomially decaying eigenvalues.

    Attributes:
        alpha: regularity exponent, > 0.
        tau: scale multiplier, > 0.
        trunc: number of retained coordinates, >= 1.
    """

    alpha: float
    tau: float
    trunc: int

    def __post_init__(self):
        if not (self.alpha > 0):
            raise ValueError("alpha must be positive")
        if not (self.tau > 0):
            raise ValueError("tau must be positive")
        if int(self.trunc) < 1:
            raise ValueError("trunc must be a positive integer")
        object.__setattr__(self, "trunc", int(self.trunc))

    def indices(self) -> np.ndarray:
        return np.arange(1, self.trunc + 1, dtype=float)

    def eigenvalues(self) -> np.ndarray:
        """lambda_i = tau^2 * i^(-1-2*alpha), i = 1..trunc."""
        return self.tau ** 2 * self.indices() ** (-1.0 - 2.0 * self.alpha)


@dataclass(frozen=True)
class ForwardSpec:
    """Singular values of the forward map, decaying like i^(-p).

    The declared band constant C >= 1 satisfies
    C^-1 i^-p <= kappa_i <= C i^-p over the stored range.
    """

    p: float
    kind: KappaKind
    trunc: int
    custom_values: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.p < 0:
            raise ValueError("p must be nonnegative")
        if int(self.trunc) < 1:
            raise ValueError("trunc must be a positive integer")
        object.__setattr__(self, "trunc", int(self.trunc))
        object.__setattr__(self, "kind", KappaKind(self.kind))
        if self.kind is KappaKind.CUSTOM:
            vals = np.ascontiguousarray(self.custom_values, dtype=float)
            if vals.size != self.trunc:
                raise DimensionMismatchError("custom kappa length != trunc")
            if not np.all(vals > 0):
                raise ValueError("custom kappa values must be positive")
            object.__setattr__(self, "custom_values", tuple(float(v) for v in vals))
        elif self.custom_values:
            raise ValueError("custom_values only allowed for kind='custom'")

    @classmethod
    def polynomial(cls, p: float, trunc: int) -> "ForwardSpec":
        return cls(p=p, kind=KappaKind.EXACT_POLYNOMIAL, trunc=trunc)

    @classmethod
    def volterra(cls, trunc: int) -> "ForwardSpec":
        # kappa_i = 1/((i - 1/2) pi), the classical integration operator; p = 1.
        return cls(p=1.0, kind=KappaKind.VOLTERRA, trunc=trunc)

    @classmethod
    def custom(cls, values, p: float) -> "ForwardSpec":
        vals = tuple(float(v) for v in np.asarray(values, dtype=float))
        return cls(p=p, kind=KappaKind.CUSTOM, trunc=len(vals), custom_values=vals)

    def indices(self) -> np.ndarray:
        return np.arange(1, self.trunc + 1, dtype=float)

    def singular_values(self) -> np.ndarray:
        i = self.indices()
        if self.kind is KappaKind.EXACT_POLYNOMIAL:
            return i ** (-self.p)
        if self.kind is KappaKind.VOLTERRA:
            return 1.0 / ((i - 0.5) * math.pi)
        return np.asarray(self.custom_values, dtype=float)

    def band_constant(self) -> float:
        if self.kind is KappaKind.EXACT_POLYNOMIAL:
            return 1.0
        if self.kind is KappaKind.VOLTERRA:
            # i * kappa_i ranges over (1/pi, 2/pi]; pi covers both sides.
            return math.pi
        ratio = self.singular_values() * self.indices() ** self.p
        return float(max(ratio.max(), 1.0 / ratio.min(), 1.0))


@dataclass(frozen=True)
class Truth:
    """A fixed coefficient sequence with its declared smoothness level."""

    coeffs: np.ndarray
    beta: float

    def __post_init__(self):
        if not (self.beta > 0):
            raise ValueError("beta must be positive")
        _frozen_array(self, "coeffs", self.coeffs)

    @property
    def trunc(self) -> int:
        return int(self.coeffs.size)


@dataclass(frozen=True)
class Observation:
    """Observed sequence at noise level 1/sqrt(n). n is real-valued."""

    n: float
    y: np.ndarray

    def __post_init__(self):
        if not (self.n > 0):
            raise ValueError("n must be positive")
        _frozen_array(self, "y", self.y)

    @property
    def trunc(self) -> int:
        return int(self.y.size)


def sobolev_norm(coeffs, s: float) -> float:
    """sqrt(sum_i coeffs_i^2 i^(2s)) over the stored range."""
    a = np.asarray(coeffs, dtype=float).ravel()
    if a.size == 0:
        return 0.0
    i = np.arange(1, a.size + 1, dtype=float)
    return math.sqrt(stable_sum(a * a * i ** (2.0 * s)))


def gain(prior: PriorSpec, fwd: ForwardSpec, n: float) -> np.ndarray:
    """Per-coordinate signal-to-noise gain n * lambda_i * kappa_i^2.

    This single factor drives every posterior series downstream; computing it
    once keeps the per-term orderings between those series exact in floating
    point.
    """
    if prior.trunc != fwd.trunc:
        raise DimensionMismatchError("prior and forward truncation differ")
    if n < 0:
        raise ValueError("n must be nonnegative")
    return n * prior.eigenvalues() * fwd.singular_values() ** 2


def generate_observation(seed, truth: Truth, fwd: ForwardSpec, n: float) -> Observation:
    """Draw Y = kappa * mu + Z/sqrt(n) reproducibly.

    Args:
        seed: integer master seed or a derived SeedSequence; the output is a
            pure function of (seed, truth, fwd, n).
        truth: coefficient sequence, length must match fwd.trunc.
        fwd: forward spec.
        n: inverse noise variance, > 0 (real-valued).
    """
    if truth.trunc != fwd.trunc:
        raise DimensionMismatchError("truth and forward truncation differ")
    if not (n > 0):
        raise ValueError("n must be positive")
    rng = rng_for(seed)
    z = rng.standard_normal(fwd.trunc)
    y = fwd.singular_values() * truth.coeffs + z / math.sqrt(n)
    return Observation(n=float(n), y=y)


def make_truth(kind: str, trunc: int, *, beta: float | None = None,
               eps: float | None = None, coeffs=None) -> Truth:
    """Construct one of the stock truth sequences.

    kind "demo":   mu_i = i^(-3/2) sin(i), declared beta = 1. The membership
        at level 1 is marginal (sum mu_i^2 i^2 grows like (log trunc)/2); the
        declared label follows the source construction and the marginality is
        deliberate.
    kind "smooth": mu_i = i^(-1/2-beta-eps), a clean member of the beta-ball.
    kind "custom": caller-supplied coefficients with a declared beta.
    """
    trunc = int(trunc)
    if trunc < 1:
        raise ValueError("trunc must be positive")
    i = np.arange(1, trunc + 1, dtype=float)
    if kind == "demo":
        if beta is not None and beta != 1.0:
            raise ValueError("demo truth has fixed beta = 1")
        return Truth(coeffs=i ** -1.5 * np.sin(i), beta=1.0)
    if kind == "smooth":
        if beta is None or eps is None:
            raise ValueError("smooth truth needs beta and eps")
        if not (eps > 0):
            raise ValueError("eps must be positive")
        return Truth(coeffs=i ** (-0.5 - beta - eps), beta=float(beta))
    if kind == "custom":
        if coeffs is None or beta is None:
            raise ValueError("custom truth needs coeffs and beta")
        a = np.asarray(coeffs, dtype=float)
        if a.size != trunc:
            raise DimensionMismatchError("coeffs length != trunc")
        return Truth(coeffs=a, beta=float(beta))
    raise ValueError(f"unknown truth kind {kind!r}")


def extremal_truth_functional(l, beta: float, prior: PriorSpec,
                              fwd: ForwardSpec, n: float) -> Truth:
    """Unit-ball truth maximizing the posterior-mean bias of the functional l.

    The maximizer of |sum_i l_i mu_i / (1 + g_i)| over the beta-ball has
    coordinates proportional to i^(-2 beta) l_i / (1 + g_i); the result is
    normalized to unit Sobolev-beta norm.
    """
    lcoef = np.asarray(l, dtype=float).ravel()
    if lcoef.size != prior.trunc:
        raise DimensionMismatchError("functional length != trunc")
    if not np.any(lcoef != 0.0):
        raise DegenerateInputError("functional is identically zero")
    g = gain(prior, fwd, n)
    i = prior.indices()
    w = i ** (-2.0 * beta) * lcoef / (1.0 + g)
    norm = sobolev_norm(w, beta)
    if norm == 0.0:
        raise DegenerateInputError("extremal direction vanished")
    return Truth(coeffs=w / norm, beta=float(beta))


def spike_truth_ball(prior: PriorSpec, fwd: ForwardSpec, n: float, beta: float,
                     target_bias_sq: float) -> Truth:
    """Single-coordinate truth whose squared posterior-mean bias hits a target.

    The spike sits at the critical index i_n = round((n tau^2)^(1/(1+2 alpha+2p)))
    (at 1 when beta >= 1 + 2 alpha + 2 p, where the first coordinate already
    is the hardest one), with magnitude solving mu^2/(1+g)^2 = target_bias_sq.
    """
    if not (target_bias_sq > 0):
        raise ValueError("target_bias_sq must be positive")
    if not (n > 0):
        raise ValueError("n must be positive")
    expo = 1.0 + 2.0 * prior.alpha + 2.0 * fwd.p
    if beta >= expo:
        idx = 1
    else:
        idx = max(1, int(round((n * prior.tau ** 2) ** (1.0 / expo))))
    if idx > prior.trunc:
        raise TruncationError(
            f"spike index {idx} beyond truncation {prior.trunc}",
            required_trunc=idx)
    g = gain(prior, fwd, n)[idx - 1]
    coeffs = np.zeros(prior.trunc)
    coeffs[idx - 1] = math.sqrt(target_bias_sq) * (1.0 + g)
    return Truth(coeffs=coeffs, beta=float(beta))


def default_trunc(n: float, alpha: float, p: float, tau: float = 1.0,
                  floor: int = 1000, factor: float = 10.0) -> int:
    """max(floor, ceil(factor * (n tau^2)^(1/(1+2 alpha+2p)))).

    Ten times the effective frequency keeps the truncated series tails
    negligible for the regimes used here; the floor keeps small-n runs honest.
    """
    if not (n > 0):
        raise ValueError("n must be positive")
    rho = (n * tau ** 2) ** (1.0 / (1.0 + 2.0 * alpha + 2.0 * p))
    return max(int(floor), int(math.ceil(factor * rho)))


# --- serialization ---------------------------------------------------------

def write_indexed_series(path, values) -> None:
    """CSV with columns (index, value), index starting at 1."""
    a = np.asarray(values, dtype=float).ravel()
    write_csv(path, ("index", "value"),
              ((i + 1, a[i]) for i in range(a.size)))


def read_indexed_series(path) -> np.ndarray:
    header, rows = read_csv(path)
    if header != ["index", "value"]:
        raise ValueError(f"unexpected header {header!r}")
    out = np.empty(len(rows))
    for k, (idx, val) in enumerate(rows):
        if int(idx) != k + 1:
            raise ValueError("index column must run 1..len without gaps")
        out[k] = float(val)
    return out


def problem_descriptor(prior: PriorSpec, fwd: ForwardSpec, truth: Truth,
                       n: float, seed: int) -> dict:
    """JSON-ready summary of a fully specified synthetic problem."""
    return {
        "alpha": prior.alpha,
        "tau": prior.tau,
        "p": fwd.p,
        "kappa_kind": fwd.kind.value,
        "trunc": prior.trunc,
        "beta": truth.beta,
        "n": float(n),
        "seed": int(seed),
    }


def write_problem_descriptor(path, descriptor: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(descriptor, indent=2, sort_keys=True) + "\n")


def read_problem_descriptor(path) -> dict:
    return json.loads(Path(path).read_text())
