"""Limiting variances and covariances of the scaled homozygosities.

All sums are evaluated in exact rational arithmetic: the Stirling and
factorial coefficients are integers and a float ``c`` or ``d`` is an exact
binary fraction, so nothing is lost until the final conversion.  This
sidesteps the cancellation between terms of very different magnitude that
plague these sums for small ``c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from .combinatorics import (
    CoefficientSet,
    StirlingTable,
    coefficient_set,
    default_table,
    rising_factorial,
)

__all__ = [
    "AsymptoticVariances",
    "CovarianceMatrix",
    "variance_hdp",
    "variance_hdp_m2_closed",
    "variance_fdhdp",
    "variance_groups",
    "jkk_covariance",
    "covariance_sigma_gamma",
    "covariance_sigma_star",
    "sigma_star_delta_method",
    "level1_from_sigma_star",
    "sigma_star_sign_residuals",
    "covariance_joint_hdp",
    "covariance_joint_groups",
    "one_level_limit",
    "golden_ratio_root",
]


@dataclass(frozen=True)
class AsymptoticVariances:
    """Level-one, level-two and total limiting variances of one model.

    ``total == level1 + level2 - correction``; ``correction`` is ``m**2``
    for one group and ``sum_k (sum_m C_m m_k)**2`` for ``L`` groups.
    """

    model: str
    level1: float
    level2: float
    total: float
    correction: float
    params: dict = field(default_factory=dict, compare=False)

    def as_dict(self):
        return {"model": self.model, "level1": self.level1, "level2": self.level2,
                "correction": self.correction, "total": self.total, **self.params}


@dataclass(frozen=True)
class CovarianceMatrix:
    kind: str
    labels: Tuple
    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.float64)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError("covariance matrix must be square")
        object.__setattr__(self, "entries", e)

    @property
    def shape(self):
        return self.entries.shape


def _positive(name, x):
    if not (x > 0 and math.isfinite(x)):
        raise ValueError(f"{name} must be a finite positive number, got {x!r}")
    return Fraction(x)


def _check_m(m):
    if m < 2:
        raise ValueError("order m must be at least 2")
    if 2 * m > default_table().max_n:
        raise ValueError(f"order m={m} exceeds the exact Stirling range (m <= 16)")


def _weights(d: Fraction, upto: int):
    # w[k] = (d+1)_(k-1); with d = 0 this is Gamma(k)
    return [None] + [rising_factorial(d + 1, k - 1) for k in range(1, upto + 1)]


def _core(A: Sequence[int], At: Sequence[int], c: Fraction, d: Fraction):
    """Exact (D, level1 numerator, level2 numerator, display numerator).

    ``A`` holds the order-``m`` coefficients, ``At`` the order-``2m`` ones.
    The level-one kernel is ``(d+1)_(i+j-1) - (d+1)_(i-1)(d+1)_(j-1)(ij+d)``,
    which at ``d = 0`` reduces to ``Gamma(i+j) - Gamma(i+1)Gamma(j+1)``.
    """
    m = len(A)
    w = _weights(d, 2 * m)
    D = sum(A[j - 1] * w[j] / c ** (j - 1) for j in range(1, m + 1))
    lvl1 = Fraction(0)
    cross = Fraction(0)       # sum A_i A_j (d+1)_(i+j-1) / c^(i+j-1)
    prod_term = Fraction(0)   # sum A_i A_j (d+1)_(i-1)(d+1)_(j-1)(ij+d) / c^(i+j-1)
    for i in range(1, m + 1):
        for j in range(1, m + 1):
            coef = A[i - 1] * A[j - 1]
            if not coef:
                continue
            p = c ** (i + j - 1)
            a = coef * w[i + j] / p
            b = coef * w[i] * w[j] * (i * j + d) / p
            cross += a
            prod_term += b
    lvl1 = cross - prod_term
    top = sum(At[j - 1] * w[j] / c ** (j - 1) for j in range(1, 2 * m + 1))
    lvl2 = top - cross
    display = top - prod_term
    return D, lvl1, lvl2, display


def _assemble(model, D, n1, n2, disp, correction, params):
    D2 = D * D
    level1, level2 = n1 / D2, n2 / D2
    total = disp / D2 - correction
    # permanent self-test: the displayed total and the component assembly agree
    if total != level1 + level2 - correction:
        raise ArithmeticError(f"{model}: total variance disagrees with its decomposition")
    return AsymptoticVariances(model, float(level1), float(level2), float(total),
                               float(correction), params)


def variance_hdp(m: int, c: float, table: Optional[StirlingTable] = None) -> AsymptoticVariances:
    """Limiting variance of the scaled one-group HDP homozygosity at ratio ``c``."""
    _check_m(m)
    cf = _positive("c", c)
    t = default_table() if table is None else table
    A = [t[m, j] for j in range(1, m + 1)]
    At = [t[2 * m, j] for j in range(1, 2 * m + 1)]
    D, n1, n2, disp = _core(A, At, cf, Fraction(0))
    return _assemble("hdp", D, n1, n2, disp, Fraction(m * m), {"m": m, "c": float(c)})


def variance_hdp_m2_closed(c: float) -> float:
    """Closed form of the one-group total variance at ``m = 2``."""
    if not c > 0:
        raise ValueError("c must be positive")
    return 2.0 - 2.0 * (c * c - c - 1.0) / (c * (c + 1.0) ** 2)


def variance_fdhdp(m: int, c: float, d: float,
                   table: Optional[StirlingTable] = None) -> AsymptoticVariances:
    """Limiting variances for the FDHDP with ``alpha/beta -> c`` and ``alpha/n -> d``."""
    _check_m(m)
    cf, df = _positive("c", c), _positive("d", d)
    t = default_table() if table is None else table
    A = [t[m, j] for j in range(1, m + 1)]
    At = [t[2 * m, j] for j in range(1, 2 * m + 1)]
    D, n1, n2, disp = _core(A, At, cf, df)
    return _assemble("fdhdp", D, n1, n2, disp, Fraction(m * m),
                     {"m": m, "c": float(c), "d": float(d)})


def variance_groups(m: int, L: int, c: float, coeffs: Optional[CoefficientSet] = None,
                    table: Optional[StirlingTable] = None) -> AsymptoticVariances:
    """Limiting variances for the ``L``-group HDP homozygosity."""
    _check_m(m)
    cf = _positive("c", c)
    if coeffs is None:
        coeffs = coefficient_set(m, L, c, table)
    elif (coeffs.m, coeffs.L) != (m, L):
        raise ValueError("coefficient set does not match (m, L)")
    D, n1, n2, disp = _core(coeffs.A, coeffs.A_tilde, cf, Fraction(0))
    C = _C_exact(coeffs, cf)
    correction = sum((sum(C[mv] * mv[k] for mv in C)) ** 2 for k in range(L))
    return _assemble("groups", D, n1, n2, disp, correction,
                     {"m": m, "L": L, "c": float(c)})


def _C_exact(coeffs: CoefficientSet, c: Fraction):
    def series(av):
        return sum(Fraction(v * factorial(j - 1)) / c ** (j - 1) for j, v in enumerate(av, start=1))
    den = series(coeffs.A)
    return {mv: series(av) / den for mv, av in coeffs.a.items()}


def one_level_limit(m: int) -> float:
    """``Gamma(2m)/Gamma(m)**2 - m**2``, the ``c -> infinity`` limit of the HDP variance."""
    return float(Fraction(factorial(2 * m - 1), factorial(m - 1) ** 2) - m * m)


def golden_ratio_root(lo: float = 1.0, hi: float = 2.0, xtol: float = 1e-13) -> float:
    """Positive ``c`` at which the ``m = 2`` HDP variance equals the one-level value 2."""
    return optimize.bisect(lambda c: variance_hdp_m2_closed(c) - 2.0, lo, hi, xtol=xtol)


def jkk_covariance(i: int, j: int) -> float:
    """Limiting covariance of the scaled one-level homozygosities of orders ``i`` and ``j``."""
    if i < 2 or j < 2:
        raise ValueError("orders must be at least 2")
    num = factorial(i + j - 1) - factorial(i) * factorial(j)
    return float(Fraction(num, factorial(i - 1) * factorial(j - 1)))


def covariance_sigma_gamma(m: int, d: float) -> CovarianceMatrix:
    """Covariance of ``(Y, Y**2, ..., Y**m)`` for ``Y ~ Gamma(d, 1)``."""
    if m < 1:
        raise ValueError("m must be at least 1")
    df = _positive("d", d)
    E = np.empty((m, m))
    for i in range(1, m + 1):
        for j in range(1, m + 1):
            E[i - 1, j - 1] = float(rising_factorial(df, i + j)
                                    - rising_factorial(df, i) * rising_factorial(df, j))
    return CovarianceMatrix("sigma_gamma", tuple(range(1, m + 1)), E)


def _sigma_star_entry(i, j, d: Fraction, sign: int) -> Fraction:
    num = (rising_factorial(d + 1, i + j + 1)
           - rising_factorial(d + 1, i) * rising_factorial(d + 1, j) * ((i + 1) * (j + 1) + sign * d))
    return num / d ** (i + j + 1)


def covariance_sigma_star(m: int, d: float, sign_convention: str = "plus") -> CovarianceMatrix:
    """Limit covariance of ``n**(p-1/2) sum_k (W_k**p - E W_k**p)``, ``p = 2..m``.

    ``W ~ Dir(alpha/n, ...)`` with ``alpha/n -> d``.  Entry ``(i, j)``
    (orders ``i+1`` and ``j+1``) is
    ``((d+1)_(i+j+1) - (d+1)_(i)(d+1)_(j)[(i+1)(j+1) +/- d]) / d**(i+j+1)``.
    ``"plus"`` is what the delta method produces; ``"minus"`` is kept for
    comparison.
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    if sign_convention not in ("plus", "minus"):
        raise ValueError("sign_convention must be 'plus' or 'minus'")
    df = _positive("d", d)
    s = 1 if sign_convention == "plus" else -1
    E = np.empty((m - 1, m - 1))
    for i in range(1, m):
        for j in range(1, m):
            E[i - 1, j - 1] = float(_sigma_star_entry(i, j, df, s))
    return CovarianceMatrix(f"sigma_star_{sign_convention}", tuple(range(2, m + 1)), E)


def sigma_star_delta_method(m: int, d: float) -> CovarianceMatrix:
    """``J^T Sigma J`` evaluated numerically from the gamma covariance.

    ``J`` is the limiting Jacobian of ``x -> (x_p / x_1**p)_{p=2..m}`` at the
    gamma moments; independent of the closed-form entries.
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    S = covariance_sigma_gamma(m, d).entries
    J = np.zeros((m, m - 1))
    for col, p in enumerate(range(2, m + 1)):
        J[0, col] = -p * float(rising_factorial(Fraction(d) + 1, p - 1)) / d**p
        J[p - 1, col] = 1.0 / d**p
    return CovarianceMatrix("sigma_star_delta", tuple(range(2, m + 1)), J.T @ S @ J)


def level1_from_sigma_star(m: int, c: float, d: float, sign_convention: str = "plus",
                           table: Optional[StirlingTable] = None) -> float:
    """FDHDP level-one variance assembled from the Dirichlet moment covariance.

    The level-one term is ``D**-1 sum_{p>=2} [m p] (beta/n)**(p-1/2) T_p``
    with ``T_p`` the scaled centered Dirichlet power sums and
    ``beta/n -> d/c``.
    """
    _check_m(m)
    cf, df = _positive("c", c), _positive("d", d)
    s = 1 if sign_convention == "plus" else -1
    t = default_table() if table is None else table
    w = _weights(df, m)
    D = sum(t[m, j] * w[j] / cf ** (j - 1) for j in range(1, m + 1))
    acc = Fraction(0)
    for p in range(2, m + 1):
        for q in range(2, m + 1):
            acc += (t[m, p] * t[m, q] * (df / cf) ** (p + q - 1)
                    * _sigma_star_entry(p - 1, q - 1, df, s))
    return float(acc / (D * D))


def sigma_star_sign_residuals(m: int, c: float, d: float) -> dict:
    """Absolute gap between each convention's assembled level-one variance and ``variance_fdhdp``."""
    target = variance_fdhdp(m, c, d).level1
    return {conv: abs(level1_from_sigma_star(m, c, d, conv) - target)
            for conv in ("plus", "minus")}


def covariance_joint_hdp(m: int, c: float) -> CovarianceMatrix:
    """Joint limit covariance of (total-mass fluctuation, level-two contribution)."""
    s2 = variance_hdp(m, c).level2
    return CovarianceMatrix("joint_hdp", ("Z", "X"), np.array([[1.0, m], [m, s2]]))


def covariance_joint_groups(m: int, L: int, c: float, k: int = 1,
                            coeffs: Optional[CoefficientSet] = None) -> CovarianceMatrix:
    """Joint limit covariance of group ``k``'s mass fluctuation and the level-two term."""
    if not 1 <= k <= L:
        raise ValueError("k must be in [1, L]")
    if coeffs is None:
        coeffs = coefficient_set(m, L, c)
    C = _C_exact(coeffs, _positive("c", c))
    off = float(sum(C[mv] * mv[k - 1] for mv in C))
    s2 = variance_groups(m, L, c, coeffs).level2
    return CovarianceMatrix(f"joint_groups_k{k}", ("Z", "X"), np.array([[1.0, off], [off, s2]]))
