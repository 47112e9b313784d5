"""Seeded Monte Carlo checks of the LLN and CLTs against the exact formulas.

Replicate ``r`` always draws from the streams of ``(root_seed, r)``, so
growing ``R`` never changes earlier replicates.  Replicates are processed
in fixed-size chunks; each chunk gets its own moment accumulator and the
chunks are merged in index order, which makes every report independent
of the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.special import ndtr

from . import asymptotics
from .combinatorics import coefficient_set, rising_factorial
from .sampling import (
    DEFAULT_EPS,
    MAX_GROUPS,
    RngStream,
    gamma_variates,
    sample_fdhdp,
    sample_hdp,
    sample_hdp_groups,
)
from .statistics import MODELS, group_homozygosity, model_scale, power_sum, standardizer

__all__ = [
    "ExperimentConfig",
    "MomentAccumulator",
    "moment_accumulator_merge",
    "ks_distance",
    "CltReport",
    "LlnReport",
    "MonteCarloError",
    "run_clt",
    "run_lln",
    "run_lln_sweep",
    "sd_decreasing",
    "simulate_raw",
    "SigmaStarOracle",
    "sigma_star_monte_carlo",
]

CHUNK = 250
LLN_MIN_CONCENTRATION = 100.0


class MonteCarloError(RuntimeError):
    """A replicate failed; carries how far the run got."""

    def __init__(self, msg, completed: int, failed_replicate: int):
        super().__init__(msg)
        self.completed = completed
        self.failed_replicate = failed_replicate


def _parse_bool(s):
    return str(s).strip().lower() in ("1", "true", "yes", "on")


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo experiment.  ``c`` and ``d`` are derived, not stored."""

    model: str = "hdp"
    m: int = 2
    alpha: float = 500.0
    beta: float = 500.0
    n: Optional[int] = None
    L: int = 1
    replicates: int = 2000
    root_seed: int = 0
    eps: float = DEFAULT_EPS
    centering: str = "theorem"
    # verdict thresholds, pre-registered with the experiment
    mean_se: float = 4.0
    var_rel_tol: float = 0.10
    var_se: float = 4.0
    ks_threshold: Optional[float] = None
    lln_delta: float = 0.2

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        if self.m < 2:
            raise ValueError("m must be at least 2")
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")
        if self.model == "fdhdp":
            if self.n is None or self.n < 1:
                raise ValueError("fdhdp needs a positive n")
        elif self.n is not None:
            raise ValueError("n only applies to fdhdp")
        if self.model == "groups":
            if not 1 <= self.L <= MAX_GROUPS:
                raise ValueError(f"L must be in [1, {MAX_GROUPS}]")
        elif self.L != 1:
            raise ValueError("L only applies to groups")
        if self.replicates < 100:
            raise ValueError("at least 100 replicates are required")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if self.centering not in ("theorem", "exact-mean"):
            raise ValueError("centering must be 'theorem' or 'exact-mean'")
        if self.ks_threshold is not None and not self.ks_threshold > 0:
            raise ValueError("ks_threshold must be positive")

    @property
    def c(self) -> float:
        return self.alpha / self.beta

    @property
    def d(self) -> Optional[float]:
        return None if self.n is None else self.alpha / self.n

    @property
    def ks_limit(self) -> float:
        return 1.95 / math.sqrt(self.replicates) if self.ks_threshold is None else self.ks_threshold

    def items(self):
        return [(f.name, getattr(self, f.name)) for f in fields(self)]

    @classmethod
    def from_mapping(cls, mapping: Dict[str, str]) -> "ExperimentConfig":
        """Build from string values (config file or report header); unknown keys are an error."""
        conv = {"model": str, "m": int, "alpha": float, "beta": float, "n": int, "L": int,
                "replicates": int, "root_seed": int, "eps": float, "centering": str,
                "mean_se": float, "var_rel_tol": float, "var_se": float,
                "ks_threshold": float, "lln_delta": float}
        kw = {}
        for k, v in mapping.items():
            if k not in conv:
                raise KeyError(f"unknown config key {k!r}")
            v = str(v).strip()
            kw[k] = None if v in ("", "None", "none") else conv[k](v)
        return cls(**kw)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


# moments -------------------------------------------------------------------

@dataclass
class MomentAccumulator:
    """Count, mean and central sums M2..M4; mergeable (Pebay's pairwise formulas)."""

    count: int = 0
    mean: float = 0.0
    M2: float = 0.0
    M3: float = 0.0
    M4: float = 0.0

    @classmethod
    def from_values(cls, x) -> "MomentAccumulator":
        x = np.asarray(x, dtype=np.float64)
        if x.size == 0:
            return cls()
        mu = math.fsum(x.tolist()) / x.size
        dev = x - mu
        return cls(int(x.size), mu, math.fsum((dev**2).tolist()),
                   math.fsum((dev**3).tolist()), math.fsum((dev**4).tolist()))

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        return moment_accumulator_merge(self, other)

    @property
    def variance(self) -> float:
        return self.M2 / (self.count - 1) if self.count > 1 else math.nan

    @property
    def skewness(self) -> float:
        if self.count < 2 or self.M2 == 0:
            return math.nan
        return math.sqrt(self.count) * self.M3 / self.M2**1.5

    @property
    def excess_kurtosis(self) -> float:
        if self.count < 2 or self.M2 == 0:
            return math.nan
        return self.count * self.M4 / self.M2**2 - 3.0

    @property
    def se_mean(self) -> float:
        return math.sqrt(self.variance / self.count)

    @property
    def se_variance(self) -> float:
        # large-sample sd of the sample variance: sqrt((mu4 - s^4 (n-3)/(n-1)) / n)
        n = self.count
        s2 = self.variance
        mu4 = self.M4 / n
        return math.sqrt(max(mu4 - s2 * s2 * (n - 3) / (n - 1), 0.0) / n)


def moment_accumulator_merge(a: MomentAccumulator, b: MomentAccumulator) -> MomentAccumulator:
    """Combine accumulators of disjoint samples."""
    if a.count == 0:
        return replace(b)
    if b.count == 0:
        return replace(a)
    na, nb = a.count, b.count
    n = na + nb
    delta = b.mean - a.mean
    d_n = delta / n
    mean = a.mean + nb * d_n
    M2 = a.M2 + b.M2 + delta * d_n * na * nb
    M3 = (a.M3 + b.M3 + delta * d_n * d_n * na * nb * (na - nb)
          + 3.0 * d_n * (na * b.M2 - nb * a.M2))
    M4 = (a.M4 + b.M4
          + delta * d_n**3 * na * nb * (na * na - na * nb + nb * nb)
          + 6.0 * d_n * d_n * (na * na * b.M2 + nb * nb * a.M2)
          + 4.0 * d_n * (na * b.M3 - nb * a.M3))
    return MomentAccumulator(n, mean, M2, M3, M4)


def ks_distance(samples: Sequence[float], variance: float) -> float:
    """Kolmogorov distance between the empirical CDF and N(0, variance)."""
    if not variance > 0:
        raise ValueError("variance must be positive")
    x = np.sort(np.asarray(samples, dtype=np.float64))
    k = x.size
    if k < 100:
        raise ValueError("ks_distance needs at least 100 samples")
    F = ndtr(x / math.sqrt(variance))
    i = np.arange(1, k + 1)
    return float(max(np.max(i / k - F), np.max(F - (i - 1) / k)))


# simulation ----------------------------------------------------------------

def _raw_one(cfg: ExperimentConfig, r: int) -> float:
    stream = RngStream.for_replicate(cfg.root_seed, r)
    if cfg.model == "hdp":
        return power_sum(sample_hdp(cfg.alpha, cfg.beta, cfg.eps, stream), cfg.m).value
    if cfg.model == "fdhdp":
        return power_sum(sample_fdhdp(cfg.alpha, cfg.beta, cfg.n, stream), cfg.m).value
    fam = sample_hdp_groups(cfg.alpha, cfg.beta, cfg.L, cfg.eps, stream)
    return group_homozygosity(fam, cfg.m).value


def _chunks(R):
    return [(lo, min(lo + CHUNK, R)) for lo in range(0, R, CHUNK)]


def simulate_raw(cfg: ExperimentConfig, workers: int = 1) -> np.ndarray:
    """Raw homozygosities of replicates ``0..R-1`` in replicate order."""
    def job(bounds):
        lo, hi = bounds
        out = np.empty(hi - lo)
        for r in range(lo, hi):
            try:
                out[r - lo] = _raw_one(cfg, r)
            except Exception as exc:  # noqa: BLE001 - rethrown with context
                raise MonteCarloError(f"replicate {r} failed: {exc}", r - lo, r) from exc
        return out

    chunks = _chunks(cfg.replicates)
    results: List[np.ndarray] = []
    try:
        if workers <= 1:
            for b in chunks:
                results.append(job(b))
        else:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                for arr in ex.map(job, chunks):
                    results.append(arr)
    except MonteCarloError as exc:
        done = sum(a.size for a in results)
        raise MonteCarloError(f"{exc} ({done} of {cfg.replicates} replicates completed)",
                              done, exc.failed_replicate) from exc.__cause__
    return np.concatenate(results)


def _predicted_variance(cfg: ExperimentConfig) -> float:
    if cfg.model == "hdp":
        return asymptotics.variance_hdp(cfg.m, cfg.c).total
    if cfg.model == "fdhdp":
        return asymptotics.variance_fdhdp(cfg.m, cfg.c, cfg.d).total
    return asymptotics.variance_groups(cfg.m, cfg.L, cfg.c).total


_STAT_KEYS = ("count", "mean", "variance", "skewness", "excess_kurtosis", "se_mean",
              "se_variance", "predicted_variance", "ks", "center", "scale")


@dataclass
class CltReport:
    config: ExperimentConfig
    count: int
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float
    se_mean: float
    se_variance: float
    predicted_variance: float
    ks: float
    center: float
    scale: float
    raw: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    scaled: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @property
    def mean_ok(self) -> bool:
        return abs(self.mean) <= self.config.mean_se * self.se_mean

    @property
    def variance_tolerance(self) -> float:
        return max(self.config.var_rel_tol * self.predicted_variance,
                   self.config.var_se * self.se_variance)

    @property
    def variance_ok(self) -> bool:
        return abs(self.variance - self.predicted_variance) <= self.variance_tolerance

    @property
    def ks_ok(self) -> bool:
        return self.ks < self.config.ks_limit

    @property
    def passed(self) -> bool:
        return self.mean_ok and self.variance_ok and self.ks_ok

    def to_text(self) -> str:
        lines = [f"{k}={_fmt(v)}" for k, v in self.config.items()]
        lines += [f"{k}={_fmt(getattr(self, k))}" for k in _STAT_KEYS]
        lines += [
            f"mean_threshold={_fmt(self.config.mean_se * self.se_mean)}",
            f"variance_threshold={_fmt(self.variance_tolerance)}",
            f"ks_limit={_fmt(self.config.ks_limit)}",
            f"mean_ok={self.mean_ok}",
            f"variance_ok={self.variance_ok}",
            f"ks_ok={self.ks_ok}",
            f"passed={self.passed}",
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CltReport":
        kv = _parse_kv(text)
        cfg_keys = {f.name for f in fields(ExperimentConfig)}
        cfg = ExperimentConfig.from_mapping({k: v for k, v in kv.items() if k in cfg_keys})
        stats = {k: (int(kv[k]) if k == "count" else float(kv[k])) for k in _STAT_KEYS}
        rep = cls(cfg, **stats)
        for flag in ("mean_ok", "variance_ok", "ks_ok", "passed"):
            if flag in kv and _parse_bool(kv[flag]) != getattr(rep, flag):
                raise ValueError(f"stored verdict {flag} does not follow from the statistics")
        return rep

    def raw_csv(self) -> str:
        if self.raw is None:
            raise ValueError("report carries no raw values")
        rows = ["replicate,h_raw,h_scaled"]
        rows += [f"{i},{_fmt(float(h))},{_fmt(float(s))}"
                 for i, (h, s) in enumerate(zip(self.raw, self.scaled))]
        return "\n".join(rows) + "\n"


def _parse_kv(text: str) -> Dict[str, str]:
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"malformed line {line!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def run_clt(config: ExperimentConfig, workers: int = 1) -> CltReport:
    """Simulate ``R`` replicates, standardize, and compare with the predicted normal limit."""
    coeffs = coefficient_set(config.m, config.L, config.c) if config.model == "groups" else None
    center, scale = standardizer(config.model, config.m, config.alpha, config.beta, config.n,
                                 config.L, coeffs=coeffs, centering=config.centering)
    raw = simulate_raw(config, workers)
    scaled = math.sqrt(config.beta) * (raw - center) / scale
    acc = MomentAccumulator()
    for lo, hi in _chunks(config.replicates):
        acc = acc.merge(MomentAccumulator.from_values(scaled[lo:hi]))
    pred = _predicted_variance(config)
    return CltReport(config, acc.count, acc.mean, acc.variance, acc.skewness,
                     acc.excess_kurtosis, acc.se_mean, acc.se_variance, pred,
                     ks_distance(scaled, pred), center, scale, raw, scaled)


@dataclass
class LlnReport:
    config: ExperimentConfig
    mean_ratio: float
    sd_ratio: float
    fraction_within: float
    scale: float

    @property
    def in_grid(self) -> bool:
        return min(self.config.alpha, self.config.beta) >= LLN_MIN_CONCENTRATION

    @property
    def verdict(self) -> Optional[bool]:
        """None outside the asymptotic regime: the ratio is reported, not judged."""
        if not self.in_grid:
            return None
        return 0.95 <= self.mean_ratio <= 1.05 and self.fraction_within >= 0.95

    def to_text(self) -> str:
        lines = [f"{k}={_fmt(v)}" for k, v in self.config.items()]
        lines += [f"mean_ratio={_fmt(self.mean_ratio)}", f"sd_ratio={_fmt(self.sd_ratio)}",
                  f"fraction_within={_fmt(self.fraction_within)}", f"scale={_fmt(self.scale)}",
                  f"verdict={'none' if self.verdict is None else self.verdict}"]
        return "\n".join(lines) + "\n"


def run_lln(config: ExperimentConfig, workers: int = 1) -> LlnReport:
    """Ratio ``H / f`` per replicate and its concentration around 1."""
    coeffs = coefficient_set(config.m, config.L, config.c) if config.model == "groups" else None
    f = model_scale(config.model, config.m, config.beta, config.c, config.d, config.L, coeffs)
    ratio = simulate_raw(config, workers) / f
    acc = MomentAccumulator()
    for lo, hi in _chunks(config.replicates):
        acc = acc.merge(MomentAccumulator.from_values(ratio[lo:hi]))
    within = float(np.mean(np.abs(ratio - 1.0) <= config.lln_delta))
    return LlnReport(config, acc.mean, math.sqrt(acc.variance), within, f)


def run_lln_sweep(config: ExperimentConfig, betas: Sequence[float] = (250, 500, 1000, 2000),
                  workers: int = 1) -> List[LlnReport]:
    """``run_lln`` along a beta grid with ``alpha/beta`` (and ``alpha/n``) held fixed."""
    out = []
    for b in betas:
        a = config.c * b
        n = None if config.n is None else max(1, round(a / config.d))
        out.append(run_lln(replace(config, alpha=a, beta=float(b), n=n), workers))
    return out


def sd_decreasing(values: Sequence[float], allowed_inversions: int = 1) -> bool:
    inversions = sum(1 for x, y in zip(values, values[1:]) if y >= x)
    return inversions <= allowed_inversions


# Dirichlet moment covariance oracle -----------------------------------------

@dataclass
class SigmaStarOracle:
    m: int
    d: float
    n: int
    replicates: int
    sample: np.ndarray
    se: np.ndarray
    max_z: Dict[str, float]
    threshold: float = 4.0

    @property
    def accepted(self) -> List[str]:
        return [k for k, z in self.max_z.items() if z <= self.threshold]

    @property
    def selected(self) -> Optional[str]:
        """The single convention consistent with the simulation, else None."""
        acc = self.accepted
        return acc[0] if len(acc) == 1 else None


def sigma_star_monte_carlo(m: int = 3, d: float = 1.0, n: int = 2000, replicates: int = 10_000,
                           root_seed: int = 20240229, threshold: float = 4.0) -> SigmaStarOracle:
    """Sample covariance of ``n**(p-1/2) sum_k (W_k**p - E W_k**p)``, ``W ~ Dir(d, ..., d)``.

    Each convention's matrix is scored by the largest entrywise
    ``|sample - predicted| / SE``.
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    a = Fraction(d) * n
    orders = range(2, m + 1)
    expect = [float(n * rising_factorial(Fraction(d), p) / rising_factorial(a, p)) for p in orders]
    T = np.empty((replicates, m - 1))
    shapes = np.full(n, float(d))
    for r in range(replicates):
        y = gamma_variates(shapes, RngStream.for_replicate(root_seed, r))
        w = y / math.fsum(y.tolist())
        for col, p in enumerate(orders):
            T[r, col] = n ** (p - 0.5) * (math.fsum((w**p).tolist()) - expect[col])
    dev = T - T.mean(axis=0)
    S = dev.T @ dev / (replicates - 1)
    se = np.empty_like(S)
    for i in range(m - 1):
        for j in range(m - 1):
            se[i, j] = np.std(dev[:, i] * dev[:, j], ddof=1) / math.sqrt(replicates)
    max_z = {}
    for conv in ("plus", "minus"):
        pred = asymptotics.covariance_sigma_star(m, d, conv).entries
        max_z[conv] = float(np.max(np.abs(S - pred) / se))
    return SigmaStarOracle(m, float(d), n, replicates, S, se, max_z, threshold)
