"""Exact Stirling and composition-indexed coefficient systems.

Everything here is integer arithmetic until the very last step.  The
coefficient families feed the mean and variance formulas for the
single-group, finite-dimensional and multi-group homozygosities:

* ``a_j(m_vec, L)`` -- coefficient of ``x**j`` in ``prod_k (x)_(m_k)``
* ``A_j(m, L)``     -- ``a_j`` summed over all compositions of ``m``
* ``A~_j(m, L)``    -- ``a_j(m1 + m2)`` summed over ordered composition pairs
* ``C_m``           -- ``a``-weighted share of the ``A`` normaliser at ratio ``c``
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Dict, List, Sequence, Tuple

__all__ = [
    "MAX_N",
    "DEFAULT_COMPOSITION_CAP",
    "RangeError",
    "ResourceError",
    "StirlingTable",
    "default_table",
    "stirling_first_unsigned",
    "rising_factorial",
    "compositions",
    "count_compositions",
    "coeff_a",
    "coeff_A",
    "coeff_A_tilde",
    "coeff_C",
    "CoefficientSet",
    "coefficient_set",
]

# [33 k] <= 32! < 2**128; every entry of row 33 fits in an unsigned 128-bit word.
MAX_N = 33
_U128 = 2**128 - 1
DEFAULT_COMPOSITION_CAP = 10**6

Composition = Tuple[int, ...]


class RangeError(ValueError):
    """Requested value lies outside the exact-arithmetic range."""


class ResourceError(RuntimeError):
    """An enumeration would exceed its configured size cap."""


class StirlingTable:
    """Immutable triangle of unsigned Stirling numbers of the first kind.

    ``table[n, k]`` is the number of permutations of ``n`` elements with
    ``k`` cycles.  Rows are built with the recurrence
    ``[n+1, k] = n [n, k] + [n, k-1]`` and every entry is checked against
    the 128-bit bound.
    """

    __slots__ = ("_max_n", "_rows")

    def __init__(self, max_n: int = MAX_N):
        if max_n < 0:
            raise ValueError("max_n must be nonnegative")
        if max_n > MAX_N:
            raise RangeError(f"Stirling table limited to n <= {MAX_N}, got {max_n}")
        rows = [(1,)]
        for n in range(max_n):
            prev = rows[-1]
            row = [0] * (n + 2)
            for k in range(1, n + 2):
                left = prev[k] if k <= n else 0
                row[k] = n * left + prev[k - 1]
                if row[k] > _U128:
                    raise RangeError(f"[{n + 1} {k}] overflows 128 bits")
            rows.append(tuple(row))
        self._max_n = max_n
        self._rows = tuple(rows)

    @classmethod
    def _from_rows(cls, rows: Sequence[Sequence[int]]) -> "StirlingTable":
        # Test hook: builds a table without the recurrence (e.g. a corrupted one).
        obj = cls.__new__(cls)
        obj._rows = tuple(tuple(int(v) for v in r) for r in rows)
        obj._max_n = len(obj._rows) - 1
        return obj

    def corrupted(self, n: int, k: int, delta: int = 1) -> "StirlingTable":
        """Copy of this table with entry ``(n, k)`` shifted by ``delta``."""
        rows = [list(r) for r in self._rows]
        rows[n][k] += delta
        return StirlingTable._from_rows(rows)

    @property
    def max_n(self) -> int:
        return self._max_n

    def row(self, n: int) -> Tuple[int, ...]:
        if n < 0:
            raise ValueError("n must be nonnegative")
        if n > self._max_n:
            raise RangeError(f"n={n} exceeds table size {self._max_n}")
        return self._rows[n]

    def __getitem__(self, nk: Tuple[int, int]) -> int:
        n, k = nk
        if k < 0:
            raise ValueError("k must be nonnegative")
        row = self.row(n)
        return row[k] if k <= n else 0

    def __eq__(self, other):
        return isinstance(other, StirlingTable) and self._rows == other._rows

    def __hash__(self):
        return hash(self._rows)

    def __repr__(self):
        return f"StirlingTable(max_n={self._max_n})"


@lru_cache(maxsize=1)
def default_table() -> StirlingTable:
    """Shared table covering ``n <= MAX_N`` (orders up to m = 16)."""
    return StirlingTable(MAX_N)


def _table(table):
    return default_table() if table is None else table


def stirling_first_unsigned(n: int, k: int, table: StirlingTable | None = None) -> int:
    """Unsigned Stirling number of the first kind ``[n k]``.

    >>> stirling_first_unsigned(4, 2)
    11
    """
    if n < 0 or k < 0:
        raise ValueError("n and k must be nonnegative")
    if n > MAX_N:
        raise RangeError(f"[n k] is only available exactly for n <= {MAX_N}")
    return _table(table)[n, k]


def rising_factorial(x, n: int):
    """Pochhammer symbol ``x (x+1) ... (x+n-1)``; 1 when ``n == 0``.

    Works for ints, floats and ``Fraction`` alike, returning the same kind.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = 1
    for i in range(n):
        out *= x + i
    return out


def count_compositions(total: int, L: int) -> int:
    return comb(total + L - 1, L - 1)


def compositions(total: int, L: int, cap: int = DEFAULT_COMPOSITION_CAP) -> List[Composition]:
    """All ``L``-tuples of nonnegative integers summing to ``total``.

    Lexicographic ascending order, e.g. ``compositions(2, 2)`` is
    ``[(0, 2), (1, 1), (2, 0)]``.
    """
    if L < 1:
        raise ValueError("L must be at least 1")
    if total < 0:
        raise ValueError("total must be nonnegative")
    count = count_compositions(total, L)
    if count > cap:
        raise ResourceError(f"|M_{{{total},{L}}}| = {count} exceeds cap {cap}")
    return list(_compositions(total, L))


@lru_cache(maxsize=256)
def _compositions(total: int, L: int) -> Tuple[Composition, ...]:
    if L == 1:
        return ((total,),)
    out = []
    for first in range(total + 1):
        for rest in _compositions(total - first, L - 1):
            out.append((first,) + rest)
    return tuple(out)


def _poly_mul(p: Sequence[int], q: Sequence[int]) -> List[int]:
    out = [0] * (len(p) + len(q) - 1)
    for i, pi in enumerate(p):
        if pi:
            for j, qj in enumerate(q):
                out[i + j] += pi * qj
    return out


def _product_poly(parts: Sequence[int], table: StirlingTable) -> List[int]:
    # coefficients of prod_k (x)_(parts[k]) in powers of x; row n of the table is (x)_(n)
    poly = [1]
    for p in parts:
        poly = _poly_mul(poly, table.row(p))
    return poly


def coeff_a(m_vec: Sequence[int], L: int | None = None,
            table: StirlingTable | None = None) -> List[int]:
    """``[a_1, ..., a_m]`` for the composition ``m_vec``.

    ``a_j = sum over j-compositions of prod_k [m_k j_k]``, which is the
    ``x**j`` coefficient of ``prod_k (x)_(m_k)``; the product form is what
    gets evaluated.
    """
    table = _table(table)
    m_vec = tuple(int(v) for v in m_vec)
    if L is not None and len(m_vec) != L:
        raise ValueError(f"composition {m_vec} does not have {L} parts")
    m = sum(m_vec)
    if m < 1:
        raise ValueError("composition total must be at least 1")
    poly = _product_poly(m_vec, table)
    return [poly[j] for j in range(1, m + 1)]


def coeff_A(m: int, L: int, table: StirlingTable | None = None,
            cap: int = DEFAULT_COMPOSITION_CAP) -> List[int]:
    """``[A_1, ..., A_m]``: ``a_j`` summed over every composition of ``m`` into ``L`` parts."""
    _check_order(m, L)
    table = _table(table)
    out = [0] * m
    for mv in compositions(m, L, cap):
        for j, v in enumerate(coeff_a(mv, L, table)):
            out[j] += v
    return out


def coeff_A_tilde(m: int, L: int, table: StirlingTable | None = None,
                  cap: int = DEFAULT_COMPOSITION_CAP) -> List[int]:
    """``[A~_1, ..., A~_2m]`` summed over ordered pairs of compositions of ``m``."""
    _check_order(m, L)
    table = _table(table)
    comps = compositions(m, L, cap)
    if len(comps) ** 2 > cap:
        raise ResourceError(f"{len(comps)}**2 composition pairs exceed cap {cap}")
    # pairs sharing the same componentwise sum contribute identically
    multiplicity: Dict[Composition, int] = {}
    for m1 in comps:
        for m2 in comps:
            s = tuple(x + y for x, y in zip(m1, m2))
            multiplicity[s] = multiplicity.get(s, 0) + 1
    out = [0] * (2 * m)
    for s, count in multiplicity.items():
        for j, v in enumerate(coeff_a(s, L, table)):
            out[j] += count * v
    return out


def _gamma_weighted(coeffs: Sequence[int], c) -> Fraction:
    # sum_j coeffs[j-1] * (j-1)! / c**(j-1), exactly
    c = Fraction(c)
    return sum((Fraction(v * factorial(j)) / c**j for j, v in enumerate(coeffs)), Fraction(0))


def coeff_C(m_vec: Sequence[int], L: int, c: float,
            table: StirlingTable | None = None) -> float:
    """Share ``C_m`` of composition ``m_vec`` at concentration ratio ``c``."""
    if not c > 0:
        raise ValueError("c must be positive")
    table = _table(table)
    m = sum(m_vec)
    num = _gamma_weighted(coeff_a(m_vec, L, table), c)
    den = _gamma_weighted(coeff_A(m, L, table), c)
    return float(num / den)


def _check_order(m: int, L: int) -> None:
    if m < 1:
        raise ValueError("order m must be at least 1")
    if L < 1:
        raise ValueError("L must be at least 1")


@dataclass(frozen=True)
class CoefficientSet:
    """All coefficient families for one ``(m, L, c)``.

    ``a`` and ``C`` are keyed by composition, in lexicographic order.
    """

    m: int
    L: int
    c: float
    a: Dict[Composition, Tuple[int, ...]] = field(repr=False)
    A: Tuple[int, ...]
    A_tilde: Tuple[int, ...]
    C: Dict[Composition, float] = field(repr=False)

    @property
    def compositions(self) -> List[Composition]:
        return list(self.a)

    def C_exact(self) -> Dict[Composition, Fraction]:
        den = _gamma_weighted(self.A, self.c)
        return {mv: _gamma_weighted(a, self.c) / den for mv, a in self.a.items()}


def coefficient_set(m: int, L: int, c: float = 1.0, table: StirlingTable | None = None,
                    cap: int = DEFAULT_COMPOSITION_CAP) -> CoefficientSet:
    if m < 2:
        raise ValueError("order m must be at least 2")
    if not c > 0:
        raise ValueError("c must be positive")
    table = _table(table)
    comps = compositions(m, L, cap)
    a = {mv: tuple(coeff_a(mv, L, table)) for mv in comps}
    A = tuple(coeff_A(m, L, table, cap))
    At = tuple(coeff_A_tilde(m, L, table, cap))
    den = _gamma_weighted(A, c)
    C = {mv: float(_gamma_weighted(av, c) / den) for mv, av in a.items()}
    return CoefficientSet(m=m, L=L, c=float(c), a=a, A=A, A_tilde=At, C=C)
