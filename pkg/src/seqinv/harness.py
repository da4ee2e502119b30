"""Experiment configs, runners, result tables, and the command line.

A single ExperimentConfig describes one experiment of any kind; runners
realize the problem per grid point (truncation policy, truth pattern,
functional), compute analytic quantities exactly and Monte-Carlo quantities
from seed streams derived per (grid point, replicate), and assemble rows in
a fixed order. Outputs are a pure function of (config, master_seed): worker
count only changes scheduling, never bytes.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import credible, model, posterior, rates, volterra
from .util import ConfigError, child_seed, seed_tag, stable_sum, write_csv

KINDS = ("contraction", "coverage-ball", "coverage-functional", "bvm",
         "volterra-demo", "lemma-order")

# branch-separated (q, t, u, v) grid for the series order check: six combos
# on each side of min((t+2q)/u, v), gaps >= 0.3, truncations tractable.
DEFAULT_LEMMA_COMBOS = (
    {"q": 1.0, "t": 1.0, "u": 2.5, "v": 2.0},
    {"q": 0.5, "t": 2.0, "u": 2.0, "v": 2.0},
    {"q": 1.5, "t": 0.0, "u": 2.0, "v": 2.0},
    {"q": 1.0, "t": 2.0, "u": 4.0, "v": 1.5},
    {"q": 2.0, "t": 1.0, "u": 5.0, "v": 1.5},
    {"q": 1.0, "t": 1.5, "u": 3.5, "v": 1.5},
    {"q": 1.0, "t": 2.0, "u": 2.0, "v": 1.0},
    {"q": 1.5, "t": 1.0, "u": 2.0, "v": 1.0},
    {"q": 2.0, "t": 0.5, "u": 3.0, "v": 1.0},
    {"q": 1.0, "t": 3.0, "u": 2.5, "v": 1.5},
    {"q": 2.5, "t": 1.0, "u": 4.0, "v": 1.0},
    {"q": 1.5, "t": 2.0, "u": 2.0, "v": 1.5},
)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    regime: rates.RegimeParams
    truth_spec: dict = field(default_factory=lambda: {"pattern": "demo"})
    functional_spec: dict | None = None
    n_grid: tuple = (1e3, 1e4, 1e5, 1e6, 1e7)
    gamma: float = 0.05
    replicates: int = 200
    mc_samples: int = 200_000
    master_seed: int = 20260822
    trunc_policy: dict = field(
        default_factory=lambda: {"mode": "auto", "floor": 1000, "factor": 10.0})
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        grid = tuple(float(v) for v in self.n_grid)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("n_grid must be nonempty and strictly increasing")
        object.__setattr__(self, "n_grid", grid)
        if not (0.0 < self.gamma < 1.0):
            raise ConfigError("gamma must lie in (0, 1)")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.mc_samples < 1:
            raise ConfigError("mc_samples must be >= 1")
        mode = self.trunc_policy.get("mode")
        if mode == "auto":
            extra = set(self.trunc_policy) - {"mode", "floor", "factor"}
        elif mode == "fixed":
            extra = set(self.trunc_policy) - {"mode", "value"}
            if int(self.trunc_policy.get("value", 0)) < 1:
                raise ConfigError("fixed trunc_policy needs a positive value")
        else:
            raise ConfigError("trunc_policy mode must be 'auto' or 'fixed'")
        if extra:
            raise ConfigError(f"unknown trunc_policy keys: {sorted(extra)}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "regime": {
                "alpha": self.regime.alpha,
                "beta": self.regime.beta,
                "p": self.regime.p,
                "q": self.regime.q,
                "tau_exponent": self.regime.tau_exponent,
            },
            "truth_spec": dict(self.truth_spec),
            "functional_spec": None if self.functional_spec is None
            else dict(self.functional_spec),
            "n_grid": list(self.n_grid),
            "gamma": self.gamma,
            "replicates": self.replicates,
            "mc_samples": self.mc_samples,
            "master_seed": self.master_seed,
            "trunc_policy": dict(self.trunc_policy),
            "extras": dict(self.extras),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        allowed = set(cls.__dataclass_fields__)
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        payload = dict(data)
        regime = payload.pop("regime", None)
        if not isinstance(regime, dict):
            raise ConfigError("config needs a 'regime' object")
        try:
            rp = rates.RegimeParams(**regime)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"bad regime: {err}") from err
        if "n_grid" in payload:
            payload["n_grid"] = tuple(payload["n_grid"])
        try:
            return cls(regime=rp, **payload)
        except TypeError as err:
            raise ConfigError(str(err)) from err


@dataclass(frozen=True)
class ResultTable:
    """Rows of named columns plus run metadata.

    Rows are plain tuples in the column order; metadata echoes the exact
    config (round-trippable through from_dict) and any derived summaries.
    """

    kind: str
    columns: tuple
    rows: tuple
    metadata: dict

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError("row width does not match columns")

    def column(self, name: str) -> list:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]

    def to_csv(self, path) -> Path:
        path = Path(path)
        write_csv(path, self.columns,
                  (["" if v is None else v for v in row] for row in self.rows))
        return path

    def to_json(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {"kind": self.kind, "columns": list(self.columns),
                   "rows": [list(r) for r in self.rows],
                   "metadata": self.metadata}
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return path


# --- realization helpers ---------------------------------------------------

def _trunc_for(cfg: ExperimentConfig, n: float) -> int:
    policy = cfg.trunc_policy
    if policy["mode"] == "fixed":
        return int(policy["value"])
    return model.default_trunc(n, cfg.regime.alpha, cfg.regime.p,
                               cfg.regime.tau(n),
                               floor=int(policy.get("floor", 1000)),
                               factor=float(policy.get("factor", 10.0)))


def _forward_for(cfg: ExperimentConfig, trunc: int) -> model.ForwardSpec:
    kind = cfg.extras.get("kappa_kind", "poly")
    if kind == "poly":
        return model.ForwardSpec.polynomial(cfg.regime.p, trunc)
    if kind == "volterra":
        if cfg.regime.p != 1.0:
            raise ConfigError("volterra forward requires p = 1")
        return model.ForwardSpec.volterra(trunc)
    raise ConfigError(f"unknown kappa_kind {kind!r}")


def _functional_for(cfg: ExperimentConfig, trunc: int) -> posterior.Functional:
    spec = cfg.functional_spec
    if spec is None:
        raise ConfigError(f"experiment kind {cfg.kind!r} needs functional_spec")
    kind = spec.get("kind")
    i = np.arange(1, trunc + 1, dtype=float)
    if kind == "power":
        q = float(spec["q"])
        scale = float(spec.get("scale", 1.0))
        return posterior.Functional(coeffs=scale * i ** (-q - 0.5), q=q)
    if kind == "exp":
        rate = float(spec.get("rate", 1.0))
        return posterior.Functional(coeffs=np.exp(-rate * i),
                                    q=float(spec.get("q", math.inf)))
    if kind == "point":
        return volterra.point_functional(float(spec["x"]), trunc)
    if kind == "coordinate":
        idx = int(spec["index"])
        if not (1 <= idx <= trunc):
            raise ConfigError("coordinate index outside truncation")
        coeffs = np.zeros(trunc)
        coeffs[idx - 1] = 1.0
        return posterior.Functional(coeffs=coeffs, q=float(spec.get("q", -0.5)))
    if kind == "custom":
        coeffs = np.asarray(spec["coeffs"], dtype=float)
        if coeffs.size > trunc:
            raise ConfigError("custom functional longer than truncation")
        full = np.zeros(trunc)
        full[:coeffs.size] = coeffs
        return posterior.Functional(coeffs=full, q=float(spec.get("q", 0.0)))
    raise ConfigError(f"unknown functional kind {kind!r}")


def _truth_for(cfg: ExperimentConfig, n: float, trunc: int,
               prior: model.PriorSpec, fwd: model.ForwardSpec,
               l: posterior.Functional | None = None) -> model.Truth:
    spec = cfg.truth_spec
    pattern = spec.get("pattern")
    if pattern == "demo":
        return model.make_truth("demo", trunc)
    if pattern == "smooth":
        return model.make_truth("smooth", trunc, beta=float(spec["beta"]),
                                eps=float(spec["eps"]))
    if pattern == "zero":
        return model.make_truth("custom", trunc, beta=cfg.regime.beta,
                                coeffs=np.zeros(trunc))
    if pattern == "custom":
        coeffs = np.asarray(spec["coeffs"], dtype=float)
        if coeffs.size > trunc:
            raise ConfigError("custom truth longer than truncation")
        full = np.zeros(trunc)
        full[:coeffs.size] = coeffs
        return model.make_truth("custom", trunc, beta=float(spec["beta"]),
                                coeffs=full)
    if pattern == "spike":
        beta = float(spec.get("beta", cfg.regime.beta))
        return model.spike_truth_ball(prior, fwd, n, beta,
                                      float(spec["target_bias_sq"]))
    if pattern == "extremal":
        if l is None:
            raise ConfigError("extremal truth needs a functional")
        return model.extremal_truth_functional(l.coeffs, cfg.regime.beta,
                                               prior, fwd, n)
    raise ConfigError(f"unknown truth pattern {pattern!r}")


def _map_cells(fn, cells, workers: int):
    if workers <= 1:
        return [fn(c) for c in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, cells))


def _base_metadata(cfg: ExperimentConfig) -> dict:
    from . import __version__
    return {"config": cfg.to_dict(), "code_version": __version__}


# --- runners ----------------------------------------------------------------

def _mc_estimator_risk(prior, fwd, truth, n, replicates, master_seed, cell):
    """Mean and stderr of ||posterior mean - truth||^2 over replicate draws.

    Replicate r uses the stream (master_seed, cell, r), so any single
    replicate can be regenerated alone.
    """
    g = model.gain(prior, fwd, n)
    denom = 1.0 + g
    bias = -truth.coeffs / denom
    noise_sd = math.sqrt(n) * prior.eigenvalues() * fwd.singular_values() / denom
    vals = np.empty(replicates)
    for r in range(replicates):
        rng = np.random.default_rng(child_seed(master_seed, cell, r))
        err = bias + noise_sd * rng.standard_normal(truth.trunc)
        vals[r] = err @ err
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(replicates)) if replicates > 1 \
        else 0.0
    return mean, stderr


def run_contraction(cfg: ExperimentConfig, workers: int = 1) -> ResultTable:
    """Analytic risk decomposition, MC check, and theoretical rate per n."""
    rp = cfg.regime

    def cell(args):
        j, n = args
        trunc = _trunc_for(cfg, n)
        prior = model.PriorSpec(alpha=rp.alpha, tau=rp.tau(n), trunc=trunc)
        fwd = _forward_for(cfg, trunc)
        truth = _truth_for(cfg, n, trunc, prior, fwd)
        rd = posterior.risk_decomposition(prior, fwd, truth, n)
        mc_risk, mc_stderr = _mc_estimator_risk(
            prior, fwd, truth, n, cfg.replicates, cfg.master_seed, j)
        eps = rates.contraction_rate(rp, n)
        return (n, trunc, rd.sq_bias, rd.variance, rd.spread,
                rd.estimator_risk, rd.posterior_risk, mc_risk, mc_stderr,
                eps, seed_tag(cfg.master_seed, j))

    rows = _map_cells(cell, list(enumerate(cfg.n_grid)), workers)
    columns = ("n", "trunc", "sq_bias", "variance", "spread",
               "estimator_risk", "posterior_risk", "mc_risk", "mc_stderr",
               "epsilon_n", "seed_key")
    meta = _base_metadata(cfg)
    log_n = np.log([r[0] for r in rows])
    if len(rows) >= 2:
        meta["slope_estimator_risk"] = float(
            np.polyfit(log_n, np.log([r[5] for r in rows]), 1)[0])
        meta["slope_posterior_risk"] = float(
            np.polyfit(log_n, np.log([r[6] for r in rows]), 1)[0])
        meta["slope_mc_risk"] = float(
            np.polyfit(log_n, np.log([r[7] for r in rows]), 1)[0])
    return ResultTable(kind=cfg.kind, columns=columns, rows=tuple(rows),
                       metadata=meta)


def rate_table(cfg: ExperimentConfig) -> ResultTable:
    """Theoretical-rate companion table (no randomness)."""
    rp = cfg.regime
    rows = []
    use_functional = rp.q is not None
    sv_power = float(cfg.extras.get("sv_log_power", 0.0))
    sv = rates.SlowlyVarying(sv_power)
    for n in cfg.n_grid:
        if use_functional:
            t1, t2, gam, dlt = rates.functional_rate_terms(rp, n, sv)
        else:
            t1, t2 = rates.contraction_terms(rp, n)
            gam = dlt = 1.0
        rows.append((n, t1 + t2, t1, t2, gam, dlt))
    return ResultTable(kind=cfg.kind,
                       columns=("n", "epsilon", "term1", "term2",
                                "gamma_n", "delta_n"),
                       rows=tuple(rows), metadata=_base_metadata(cfg))


def run_ball_coverage(cfg: ExperimentConfig, workers: int = 1) -> ResultTable:
    """Credible-ball radius and frequentist coverage per n.

    replicates = coverage draws; mc_samples = radius-quantile draws. The
    metadata carries the noise-quantile ratio diagnostics per n.
    """
    rp = cfg.regime
    diagnostics = []

    def cell(args):
        j, n = args
        trunc = _trunc_for(cfg, n)
        prior = model.PriorSpec(alpha=rp.alpha, tau=rp.tau(n), trunc=trunc)
        fwd = _forward_for(cfg, trunc)
        w = credible.credible_weights(prior, fwd, n)
        r = credible.ball_radius(w, cfg.gamma, mc_samples=cfg.mc_samples,
                                 seed=child_seed(cfg.master_seed, j, 0))
        r_noise = credible.ball_radius(w.noise_only(), cfg.gamma,
                                       mc_samples=cfg.mc_samples,
                                       seed=child_seed(cfg.master_seed, j, 1))
        truth = _truth_for(cfg, n, trunc, prior, fwd)
        bias = posterior.bias_coordinates(prior, fwd, truth, n)
        report = credible.ball_coverage(w, bias, r,
                                        mc_samples=cfg.replicates,
                                        seed=child_seed(cfg.master_seed, j, 2))
        diag = {"n": n, "noise_radius": r_noise,
                "noise_radius_ratio": r_noise / r if r > 0 else math.inf,
                "bias_norm_sq": float(stable_sum(bias * bias))}
        row = (n, rp.alpha, rp.beta, rp.p, rp.tau(n), cfg.gamma, "ball",
               r, report.coverage, report.mc_stderr, report.method,
               seed_tag(cfg.master_seed, j))
        return row, diag

    results = _map_cells(cell, list(enumerate(cfg.n_grid)), workers)
    rows = tuple(row for row, _ in results)
    meta = _base_metadata(cfg)
    meta["radius_diagnostics"] = [diag for _, diag in results]
    columns = ("n", "alpha", "beta", "p", "tau", "gamma", "kind", "radius",
               "coverage", "stderr", "method", "seed_key")
    return ResultTable(kind=cfg.kind, columns=columns, rows=rows, metadata=meta)


def run_functional_coverage(cfg: ExperimentConfig, workers: int = 1) -> ResultTable:
    """Exact interval coverage of the functional's credible interval per n."""
    rp = cfg.regime
    from scipy import stats as _stats
    z = float(_stats.norm.ppf(cfg.gamma / 2.0))

    def cell(args):
        j, n = args
        trunc = _trunc_for(cfg, n)
        prior = model.PriorSpec(alpha=rp.alpha, tau=rp.tau(n), trunc=trunc)
        fwd = _forward_for(cfg, trunc)
        l = _functional_for(cfg, trunc)
        truth = _truth_for(cfg, n, trunc, prior, fwd, l)
        w = credible.credible_weights(prior, fwd, n)
        l_sq = l.coeffs ** 2
        s_n = math.sqrt(stable_sum(l_sq * w.s_w))
        t_n = math.sqrt(stable_sum(l_sq * w.t_w))
        bias = posterior.functional_bias_var(prior, fwd, truth, l, n).bias
        cov = credible.interval_coverage(bias, s_n, t_n, cfg.gamma)
        halfwidth = -z * s_n
        return (n, rp.alpha, rp.beta, rp.p, rp.tau(n), cfg.gamma, "interval",
                halfwidth, cov, None, "exact-normal",
                seed_tag(cfg.master_seed, j))

    rows = tuple(_map_cells(cell, list(enumerate(cfg.n_grid)), workers))
    columns = ("n", "alpha", "beta", "p", "tau", "gamma", "kind", "radius",
               "coverage", "stderr", "method", "seed_key")
    return ResultTable(kind=cfg.kind, columns=columns, rows=rows,
                       metadata=_base_metadata(cfg))


def run_bvm(cfg: ExperimentConfig, workers: int = 1) -> ResultTable:
    """Spread-vs-sampling diagnostics for a functional along the n grid."""
    rp = cfg.regime

    def cell(args):
        j, n = args
        trunc = _trunc_for(cfg, n)
        prior = model.PriorSpec(alpha=rp.alpha, tau=rp.tau(n), trunc=trunc)
        fwd = _forward_for(cfg, trunc)
        l = _functional_for(cfg, trunc)
        truth = _truth_for(cfg, n, trunc, prior, fwd, l)
        diag = credible.bvm_diagnostics(prior, fwd, l, n, rp.beta)
        w = credible.credible_weights(prior, fwd, n)
        l_sq = l.coeffs ** 2
        s_n = math.sqrt(stable_sum(l_sq * w.s_w))
        t_n = math.sqrt(stable_sum(l_sq * w.t_w))
        bias = posterior.functional_bias_var(prior, fwd, truth, l, n).bias
        cov = credible.interval_coverage(bias, s_n, t_n, cfg.gamma)
        plugin_limit = stable_sum(l_sq / fwd.singular_values() ** 2)
        return (n, trunc, s_n, t_n, diag.ratio, diag.sup_bias,
                diag.sup_bias / t_n if t_n > 0 else math.inf, diag.tv,
                bias, cov, n * t_n * t_n, plugin_limit,
                seed_tag(cfg.master_seed, j))

    rows = tuple(_map_cells(cell, list(enumerate(cfg.n_grid)), workers))
    columns = ("n", "trunc", "s_n", "t_n", "ratio", "sup_bias",
               "sup_bias_over_t", "tv", "bias", "coverage", "n_t_sq",
               "plugin_limit", "seed_key")
    return ResultTable(kind=cfg.kind, columns=columns, rows=rows,
                       metadata=_base_metadata(cfg))


def run_lemma_order(cfg: ExperimentConfig, workers: int = 1) -> ResultTable:
    """Normalized series values across the N grid for each (q,t,u,v) combo."""
    combos = cfg.extras.get("combos", list(DEFAULT_LEMMA_COMBOS))
    cells = []
    for combo in combos:
        for n_val in cfg.n_grid:
            cells.append((dict(combo), float(n_val)))

    def cell(args):
        combo, big_n = args
        q, t, u, v = (float(combo[k]) for k in ("q", "t", "u", "v"))
        fam = rates.SequenceFamily(q=q)
        value = rates.series_lemma_sum_auto(fam, t, u, v, big_n)
        order = rates.series_order_exponent(q, t, u, v)
        ratio = value / big_n ** (-order)
        on_sup = (t + 2.0 * q) / u < v
        branch = "sup" if on_sup else "limit"
        limit_value = None if on_sup else rates.series_limit_value(fam, t, u, v)
        return (q, t, u, v, big_n, value, order, ratio, branch, limit_value,
                seed_tag(cfg.master_seed))

    rows = tuple(_map_cells(cell, cells, workers))
    columns = ("q", "t", "u", "v", "N", "value", "order_exponent", "ratio",
               "branch", "limit_value", "seed_key")
    return ResultTable(kind=cfg.kind, columns=columns, rows=rows,
                       metadata=_base_metadata(cfg))


def demo_config_from(cfg: ExperimentConfig, out_dir) -> volterra.DemoConfig:
    extras = dict(cfg.extras)
    extras.pop("kappa_kind", None)
    if len(cfg.n_grid) != 1:
        raise ConfigError("volterra-demo uses a single n (n_grid of length 1)")
    payload = {
        "n": cfg.n_grid[0],
        "replicates": cfg.replicates,
        "gamma": cfg.gamma,
        "master_seed": cfg.master_seed,
        "out_dir": str(out_dir),
    }
    payload.update(extras)
    return volterra.DemoConfig.from_dict(payload)


def run_volterra_demo(cfg: ExperimentConfig, out_dir) -> list[Path]:
    return volterra.figure_demo(demo_config_from(cfg, out_dir))


# --- defaults and CLI -------------------------------------------------------

def default_config(kind: str) -> ExperimentConfig:
    if kind == "contraction":
        return ExperimentConfig(
            kind=kind,
            regime=rates.RegimeParams(alpha=1.0, beta=1.0, p=1.0),
            truth_spec={"pattern": "smooth", "beta": 1.0, "eps": 0.01},
            n_grid=(1e3, 1e4, 1e5, 1e6, 1e7),
            replicates=200)
    if kind == "coverage-ball":
        return ExperimentConfig(
            kind=kind,
            regime=rates.RegimeParams(alpha=1.0, beta=1.0, p=1.0),
            truth_spec={"pattern": "smooth", "beta": 1.0, "eps": 0.01},
            n_grid=(1e4, 1e6),
            replicates=500)
    if kind == "coverage-functional":
        return ExperimentConfig(
            kind=kind,
            regime=rates.RegimeParams(alpha=1.0, beta=1.0, p=1.0, q=1.0),
            truth_spec={"pattern": "demo"},
            functional_spec={"kind": "power", "q": 1.0},
            n_grid=(1e4, 1e6, 1e8),
            replicates=1)
    if kind == "bvm":
        return ExperimentConfig(
            kind=kind,
            regime=rates.RegimeParams(alpha=1.0, beta=1.0, p=1.0, q=2.0),
            truth_spec={"pattern": "demo"},
            functional_spec={"kind": "power", "q": 2.0},
            n_grid=(1e4, 1e6, 1e8),
            replicates=1)
    if kind == "volterra-demo":
        return ExperimentConfig(
            kind=kind,
            regime=rates.RegimeParams(alpha=1.0, beta=1.0, p=1.0),
            truth_spec={"pattern": "demo"},
            n_grid=(1000.0,),
            replicates=5)
    if kind == "lemma-order":
        return ExperimentConfig(
            kind=kind,
            regime=rates.RegimeParams(alpha=1.0, beta=1.0, p=1.0),
            truth_spec={"pattern": "demo"},
            n_grid=(1e2, 1e4, 1e6, 1e8, 1e10),
            replicates=1)
    raise ConfigError(f"unknown experiment kind {kind!r}")


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON experiment config file")
    sub.add_argument("--n", help="comma-separated n grid override")
    sub.add_argument("--alpha", type=float)
    sub.add_argument("--beta", type=float)
    sub.add_argument("--p", type=float)
    sub.add_argument("--tau-exp", type=float, dest="tau_exp")
    sub.add_argument("--gamma", type=float)
    sub.add_argument("--replicates", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--workers", type=int, default=1)
    sub.add_argument("--out", default="results")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")


def _load_config(args, kind: str) -> ExperimentConfig:
    if args.config is not None:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as err:
            raise ConfigError(f"config is not valid JSON: {err}") from err
        cfg = ExperimentConfig.from_dict(data)
        if cfg.kind != kind:
            raise ConfigError(
                f"config kind {cfg.kind!r} does not match subcommand {kind!r}")
    else:
        cfg = default_config(kind)

    regime_updates = {}
    for name, value in (("alpha", args.alpha), ("beta", args.beta),
                        ("p", args.p), ("tau_exponent", args.tau_exp)):
        if value is not None:
            regime_updates[name] = value
    updates = {}
    if regime_updates:
        try:
            updates["regime"] = dataclasses.replace(cfg.regime, **regime_updates)
        except ValueError as err:
            raise ConfigError(f"bad regime override: {err}") from err
    if args.n is not None:
        try:
            updates["n_grid"] = tuple(float(tok) for tok in args.n.split(","))
        except ValueError as err:
            raise ConfigError(f"bad --n list: {err}") from err
    if args.gamma is not None:
        updates["gamma"] = args.gamma
    if args.replicates is not None:
        updates["replicates"] = args.replicates
    if args.seed is not None:
        updates["master_seed"] = args.seed
    if updates:
        try:
            cfg = dataclasses.replace(cfg, **updates)
        except ConfigError:
            raise
    return cfg


def _write_manifest(out_dir: Path, cfg: ExperimentConfig, started_at: str,
                    wall: float) -> Path:
    from . import __version__
    manifest = {
        "config": cfg.to_dict(),
        "master_seed": cfg.master_seed,
        "code_version": __version__,
        "started_at": started_at,
        "wall_seconds": wall,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def cli_main(argv=None) -> int:
    """Entry point; returns 0 on success, 2 on config errors, 1 otherwise."""
    parser = argparse.ArgumentParser(
        prog="seqinv",
        description="Sequence-space Gaussian inverse-problem experiments")
    subs = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        _add_common_flags(subs.add_parser(kind))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    started_at = datetime.now(timezone.utc).isoformat()
    started = time.monotonic()
    try:
        cfg = _load_config(args, args.command)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "volterra-demo":
            # figure_demo writes its own manifest.json into out_dir
            paths = run_volterra_demo(cfg, out_dir)
        else:
            runner = {
                "contraction": run_contraction,
                "coverage-ball": run_ball_coverage,
                "coverage-functional": run_functional_coverage,
                "bvm": run_bvm,
                "lemma-order": run_lemma_order,
            }[args.command]
            table = runner(cfg, workers=max(1, args.workers))
            stem = out_dir / args.command
            if args.format == "json":
                paths = [table.to_json(stem.with_suffix(".json"))]
            else:
                paths = [table.to_csv(stem.with_suffix(".csv"))]
            if args.command == "contraction":
                rt = rate_table(cfg)
                suffix = ".json" if args.format == "json" else ".csv"
                target = out_dir / f"{args.command}_rates{suffix}"
                paths.append(rt.to_json(target) if args.format == "json"
                             else rt.to_csv(target))
            paths.append(_write_manifest(out_dir, cfg, started_at,
                                         time.monotonic() - started))
        for path in paths:
            print(path)
        return 0
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # noqa: BLE001 - CLI boundary
        print(f"error: {err}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))
