"""Homozygosity statistics, exact finite-parameter means and CLT scalings."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import factorial, prod
from typing import Optional

import numpy as np

from .combinatorics import (
    CoefficientSet,
    StirlingTable,
    coefficient_set,
    compositions,
    default_table,
    rising_factorial,
)
from .sampling import GroupFamily, WeightVector

__all__ = [
    "MODELS",
    "HomozygosityValue",
    "ScaledStatistic",
    "power_sum",
    "group_homozygosity",
    "exact_mean_z_power",
    "exact_mean_hdp",
    "exact_mean_hdp_fraction",
    "exact_mean_fdhdp_fraction",
    "exact_mean_fdhdp",
    "exact_mean_groups",
    "exact_mean_groups_fraction",
    "scale_hdp",
    "scale_fdhdp",
    "scale_groups",
    "theorem_centering",
    "exact_mean",
    "model_scale",
    "standardizer",
    "scaled_statistic",
]

MODELS = ("hdp", "fdhdp", "groups")


@dataclass(frozen=True)
class HomozygosityValue:
    m: int
    value: float
    tail_bound: float = 0.0


@dataclass(frozen=True)
class ScaledStatistic:
    """``value = sqrt(beta) * (raw - centering) / scale``."""

    value: float
    raw: float
    centering: float
    scale: float
    model: str


def _check_order(m):
    if m < 2:
        raise ValueError("order m must be at least 2")


def _int_power(x: np.ndarray, m: int) -> np.ndarray:
    # repeated squaring with plain multiplies: every step is correctly rounded,
    # so the result does not depend on layout or on the SIMD pow kernel
    out, base = None, x
    while m:
        if m & 1:
            out = base.copy() if out is None else out * base
        m >>= 1
        if m:
            base = base * base
    return out


def power_sum(w, m: int) -> HomozygosityValue:
    """``sum_i w_i**m`` over the stored weights, correctly rounded.

    ``w`` may be a :class:`WeightVector` or any array of weights; the tail
    mass of a weight vector is reported as the truncation bound.
    """
    _check_order(m)
    if isinstance(w, WeightVector):
        weights, tail = w.weights, w.tail_mass
    else:
        weights, tail = np.asarray(w, dtype=np.float64), 0.0
    return HomozygosityValue(m, math.fsum(_int_power(weights, m).tolist()), float(tail))


def group_homozygosity(g: GroupFamily, m: int, multinomial: bool = False) -> HomozygosityValue:
    """``sum_i sum_{m_vec} L**-m prod_k Z_{k,i}**m_k`` for a group family.

    Per atom this is the complete homogeneous symmetric polynomial of
    degree ``m`` in the group weights, divided by ``L**m``.  With
    ``multinomial=True`` each composition is weighted by its multinomial
    coefficient instead, which gives the probability that ``m`` draws,
    each from a uniformly chosen group, all share one atom.
    """
    _check_order(m)
    Z = g.matrix()
    L = Z.shape[0]
    per_atom = np.zeros(Z.shape[1])
    for mv in compositions(m, L):
        term = np.ones(Z.shape[1])
        for k, mk in enumerate(mv):
            if mk:
                term = term * _int_power(Z[k], mk)
        if multinomial:
            term = term * (factorial(m) // prod(factorial(v) for v in mv))
        per_atom += term
    tail = max(gr.tail_mass for gr in g.groups)
    return HomozygosityValue(m, math.fsum(per_atom.tolist()) / L**m, float(tail))


def _stirling(table):
    return default_table() if table is None else table


def exact_mean_z_power(alpha: float, beta: float, k: int, m: int,
                       table: Optional[StirlingTable] = None) -> float:
    """``E[Z_k**m]`` for the ``k``-th level-two HDP weight (``k >= 1``, ``m >= 1``)."""
    if k < 1 or m < 1:
        raise ValueError("k and m must be at least 1")
    t = _stirling(table)
    terms = [t[m, j] * beta**j * factorial(j) / rising_factorial(alpha + 1.0, j)
             * (alpha / (alpha + j)) ** (k - 1) for j in range(1, m + 1)]
    return math.fsum(terms) / rising_factorial(beta, m)


def exact_mean_hdp_fraction(alpha, beta, m: int,
                            table: Optional[StirlingTable] = None) -> Fraction:
    _check_order(m)
    table = _stirling(table)
    a, b = Fraction(alpha), Fraction(beta)
    total = sum(table[m, j] * b**j * factorial(j - 1) / rising_factorial(a + 1, j - 1)
                for j in range(1, m + 1))
    return total / rising_factorial(b, m)


def exact_mean_hdp(alpha: float, beta: float, m: int,
                   table: Optional[StirlingTable] = None) -> float:
    """``E[H_m(alpha, beta)]`` for the single-group HDP, evaluated exactly then rounded.

    For ``m = 2`` this is ``(alpha + beta + 1) / ((alpha + 1)(beta + 1))``.
    """
    _check_order(m)
    return float(exact_mean_hdp_fraction(alpha, beta, m, table))


def exact_mean_fdhdp_fraction(alpha, beta, n: int, m: int,
                              table: Optional[StirlingTable] = None) -> Fraction:
    _check_order(m)
    if n < 1:
        raise ValueError("n must be at least 1")
    t = _stirling(table)
    a, b = Fraction(alpha), Fraction(beta)
    d = a / n
    total = sum(t[m, j] * b**j * rising_factorial(d + 1, j - 1) / rising_factorial(a + 1, j - 1)
                for j in range(1, m + 1))
    return total / rising_factorial(b, m)


def exact_mean_fdhdp(alpha: float, beta: float, n: int, m: int,
                     table: Optional[StirlingTable] = None) -> float:
    """``E[H_{m,n}(alpha, beta)]`` for the ``n``-dimensional FDHDP."""
    return float(exact_mean_fdhdp_fraction(alpha, beta, n, m, table))


def exact_mean_groups_fraction(alpha, beta, m: int, L: int,
                               coeffs: Optional[CoefficientSet] = None,
                               multinomial: bool = False) -> Fraction:
    _check_order(m)
    if coeffs is None:
        coeffs = coefficient_set(m, L)
    if (coeffs.m, coeffs.L) != (m, L):
        raise ValueError("coefficient set does not match (m, L)")
    a, b = Fraction(alpha), Fraction(beta)
    out = Fraction(0)
    for mv, av in coeffs.a.items():
        inner = sum(v * b**j * factorial(j - 1) / rising_factorial(a + 1, j - 1)
                    for j, v in enumerate(av, start=1))
        weight = factorial(m) // prod(factorial(v) for v in mv) if multinomial else 1
        out += weight * inner / prod(rising_factorial(b, mk) for mk in mv)
    return out / L**m


def exact_mean_groups(alpha: float, beta: float, m: int, L: int,
                      coeffs: Optional[CoefficientSet] = None,
                      multinomial: bool = False) -> float:
    """``E[H^L_m(alpha, beta)]`` for ``L`` groups.

    With ``L = 2, m = 2`` the displayed definition gives
    ``(2 * within + across) / 4`` where ``within`` is the one-group mean
    and ``across = 1 / (alpha + 1)``; the multinomial variant gives
    ``(within + across) / 2``.
    """
    return float(exact_mean_groups_fraction(alpha, beta, m, L, coeffs, multinomial))


# scale functions f(beta; ...) and theorem centerings.  The centering has the
# same form as the scale with the limit ratio c replaced by alpha/beta.

def _hdp_series(m, ratio, table) -> Fraction:
    r = Fraction(ratio)
    return sum(Fraction(table[m, j] * factorial(j - 1)) / r ** (j - 1) for j in range(1, m + 1))


def scale_hdp(beta: float, m: int, c: float, table: Optional[StirlingTable] = None) -> float:
    """``f(beta; m, c) = beta**(1-m) sum_j [m j] Gamma(j) / c**(j-1)``."""
    _check_order(m)
    return float(_hdp_series(m, c, _stirling(table)) / Fraction(beta) ** (m - 1))


def scale_fdhdp(beta: float, m: int, c: float, d: float,
                table: Optional[StirlingTable] = None) -> float:
    """``f(beta; m, c, d) = beta**(1-m) sum_j [m j] (d+1)_(j-1) / c**(j-1)``."""
    _check_order(m)
    t = _stirling(table)
    cf, df = Fraction(c), Fraction(d)
    s = sum(t[m, j] * rising_factorial(df + 1, j - 1) / cf ** (j - 1) for j in range(1, m + 1))
    return float(s / Fraction(beta) ** (m - 1))


def _groups_series(A, ratio) -> Fraction:
    r = Fraction(ratio)
    return sum(Fraction(v * factorial(j - 1)) / r ** (j - 1) for j, v in enumerate(A, start=1))


def scale_groups(beta: float, m: int, L: int, c: float,
                 coeffs: Optional[CoefficientSet] = None) -> float:
    """``f(beta; m, L, c) = (L**m beta**(m-1))**-1 sum_j A_j Gamma(j) / c**(j-1)``."""
    _check_order(m)
    A = coefficient_set(m, L).A if coeffs is None else coeffs.A
    return float(_groups_series(A, c) / (L**m * Fraction(beta) ** (m - 1)))


def theorem_centering(model: str, m: int, alpha: float, beta: float, n: Optional[int] = None,
                      L: int = 1, coeffs: Optional[CoefficientSet] = None,
                      table: Optional[StirlingTable] = None) -> float:
    """Centering used by the CLT statements (asymptotic form of the mean)."""
    _check_order(m)
    t = _stirling(table)
    b = Fraction(beta)
    if model == "hdp":
        return float(_hdp_series(m, Fraction(alpha) / b, t) / b ** (m - 1))
    if model == "fdhdp":
        if n is None:
            raise ValueError("fdhdp centering needs n")
        a = Fraction(alpha)
        s = sum(t[m, j] * b ** (j - 1) * rising_factorial(a / n + 1, j - 1)
                / rising_factorial(a + 1, j - 1) for j in range(1, m + 1))
        return float(s / b ** (m - 1))
    if model == "groups":
        A = coefficient_set(m, L).A if coeffs is None else coeffs.A
        return float(_groups_series(A, Fraction(alpha) / b) / (L**m * b ** (m - 1)))
    raise ValueError(f"unknown model {model!r}")


def exact_mean(model: str, m: int, alpha: float, beta: float, n: Optional[int] = None,
               L: int = 1, coeffs: Optional[CoefficientSet] = None) -> float:
    if model == "hdp":
        return exact_mean_hdp(alpha, beta, m)
    if model == "fdhdp":
        if n is None:
            raise ValueError("fdhdp mean needs n")
        return exact_mean_fdhdp(alpha, beta, n, m)
    if model == "groups":
        return exact_mean_groups(alpha, beta, m, L, coeffs)
    raise ValueError(f"unknown model {model!r}")


def model_scale(model: str, m: int, beta: float, c: float, d: Optional[float] = None,
                L: int = 1, coeffs: Optional[CoefficientSet] = None) -> float:
    if model == "hdp":
        return scale_hdp(beta, m, c)
    if model == "fdhdp":
        if d is None:
            raise ValueError("fdhdp scale needs d")
        return scale_fdhdp(beta, m, c, d)
    if model == "groups":
        return scale_groups(beta, m, L, c, coeffs)
    raise ValueError(f"unknown model {model!r}")


def standardizer(model: str, m: int, alpha: float, beta: float, n: Optional[int] = None,
                 L: int = 1, c: Optional[float] = None, d: Optional[float] = None,
                 coeffs: Optional[CoefficientSet] = None, centering: str = "theorem"):
    """``(center, scale)`` used by :func:`scaled_statistic`; compute once, apply many times."""
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    if model == "fdhdp" and n is None:
        raise ValueError("fdhdp needs n")
    if model != "groups" and L != 1:
        raise ValueError(f"model {model!r} takes L = 1")
    c = alpha / beta if c is None else c
    if model == "fdhdp" and d is None:
        d = alpha / n
    if model == "groups" and coeffs is None:
        coeffs = coefficient_set(m, L, c)
    scale = model_scale(model, m, beta, c, d, L, coeffs)
    if centering == "theorem":
        center = theorem_centering(model, m, alpha, beta, n, L, coeffs)
    elif centering == "exact-mean":
        center = exact_mean(model, m, alpha, beta, n, L, coeffs)
    else:
        raise ValueError(f"unknown centering {centering!r}")
    return center, scale


def scaled_statistic(raw, model: str, m: int, alpha: float, beta: float,
                     n: Optional[int] = None, L: int = 1, c: Optional[float] = None,
                     d: Optional[float] = None, coeffs: Optional[CoefficientSet] = None,
                     centering: str = "theorem") -> ScaledStatistic:
    """Standardize a raw homozygosity the way the matching CLT does.

    ``c`` and ``d`` default to ``alpha/beta`` and ``alpha/n``.  With
    ``centering="exact-mean"`` the exact finite-parameter mean replaces the
    asymptotic centering; the scale is unchanged.
    """
    value = raw.value if isinstance(raw, HomozygosityValue) else float(raw)
    center, scale = standardizer(model, m, alpha, beta, n, L, c, d, coeffs, centering)
    return ScaledStatistic(math.sqrt(beta) * (value - center) / scale, value, center, scale, model)
