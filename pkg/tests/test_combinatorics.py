import itertools
import math
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from hdphom.combinatorics import (
    MAX_N,
    RangeError,
    ResourceError,
    StirlingTable,
    coeff_A,
    coeff_A_tilde,
    coeff_a,
    coeff_C,
    coefficient_set,
    compositions,
    count_compositions,
    default_table,
    rising_factorial,
    stirling_first_unsigned,
)


def cycle_count(perm):
    seen, cycles = set(), 0
    for start in range(len(perm)):
        if start in seen:
            continue
        cycles += 1
        j = start
        while j not in seen:
            seen.add(j)
            j = perm[j]
    return cycles


class TestStirling:
    def test_matches_sympy(self):
        for n in range(0, 25):
            for k in range(0, n + 1):
                assert stirling_first_unsigned(n, k) == sympy.functions.combinatorial.numbers.stirling(
                    n, k, kind=1, signed=False)

    @pytest.mark.parametrize("n", range(1, 8))
    def test_counts_permutations_by_cycles(self, n):
        counts = [0] * (n + 1)
        for perm in itertools.permutations(range(n)):
            counts[cycle_count(perm)] += 1
        assert list(default_table().row(n)) == counts

    def test_small_values(self):
        assert stirling_first_unsigned(4, 2) == 11
        assert stirling_first_unsigned(5, 3) == 35
        assert stirling_first_unsigned(0, 0) == 1
        assert stirling_first_unsigned(3, 0) == 0
        assert stirling_first_unsigned(3, 5) == 0

    def test_row_sum_is_factorial(self):
        t = default_table()
        for n in range(MAX_N + 1):
            assert sum(t.row(n)) == math.factorial(n)

    def test_top_row_fits_128_bits(self):
        assert max(default_table().row(MAX_N)) < 2**128

    def test_range(self):
        with pytest.raises(RangeError):
            stirling_first_unsigned(MAX_N + 1, 1)
        with pytest.raises(RangeError):
            StirlingTable(MAX_N + 1)
        with pytest.raises(ValueError):
            stirling_first_unsigned(-1, 0)

    def test_corrupted_hook(self):
        t = default_table()
        bad = t.corrupted(4, 2, 1)
        assert bad[4, 2] == 12 and t[4, 2] == 11
        assert bad != t
        assert bad[5, 2] == t[5, 2]


@given(st.integers(0, 20), st.fractions(min_value=-5, max_value=5, max_denominator=50))
def test_generating_polynomial(n, x):
    t = default_table()
    assert sum(t[n, k] * x**k for k in range(n + 1)) == rising_factorial(x, n)


@given(st.integers(1, MAX_N - 1), st.integers(1, MAX_N))
def test_recurrence(n, k):
    t = default_table()
    assert t[n + 1, k] == n * t[n, k] + t[n, k - 1]


def test_rising_factorial():
    assert rising_factorial(3, 0) == 1
    assert rising_factorial(3, 4) == 3 * 4 * 5 * 6
    assert rising_factorial(Fraction(1, 2), 2) == Fraction(3, 4)
    assert rising_factorial(0.5, 3) == pytest.approx(0.5 * 1.5 * 2.5)
    with pytest.raises(ValueError):
        rising_factorial(1, -1)


class TestCompositions:
    def test_example_order(self):
        assert compositions(2, 2) == [(0, 2), (1, 1), (2, 0)]

    @pytest.mark.parametrize("total,L", [(0, 1), (3, 1), (3, 2), (4, 3), (5, 4), (2, 5)])
    def test_brute_force(self, total, L):
        brute = sorted(t for t in itertools.product(range(total + 1), repeat=L) if sum(t) == total)
        got = compositions(total, L)
        assert got == brute
        assert len(got) == count_compositions(total, L) == math.comb(total + L - 1, L - 1)

    def test_cap(self):
        with pytest.raises(ResourceError):
            compositions(10, 10, cap=100)
        with pytest.raises(ResourceError):
            coeff_A_tilde(4, 3, cap=200)  # 15 compositions, 225 pairs

    def test_bad_args(self):
        with pytest.raises(ValueError):
            compositions(2, 0)
        with pytest.raises(ValueError):
            compositions(-1, 2)


def a_by_definition(mv, j):
    # sum over j-compositions (j_k >= 0) of prod_k [m_k j_k]
    t = default_table()
    total = 0
    for js in itertools.product(*(range(m + 1) for m in mv)):
        if sum(js) == j:
            total += math.prod(t[m, jk] for m, jk in zip(mv, js))
    return total


class TestCoefficients:
    @pytest.mark.parametrize("mv", [(2,), (1, 1), (2, 0), (2, 1), (1, 1, 1), (3, 0, 2), (0, 4), (2, 2, 1)])
    def test_a_matches_definition(self, mv):
        m = sum(mv)
        assert coeff_a(mv) == [a_by_definition(mv, j) for j in range(1, m + 1)]

    def test_single_group_is_stirling_row(self):
        t = default_table()
        for m in range(2, 8):
            assert coeff_A(m, 1) == list(t.row(m)[1:])
            assert coeff_A_tilde(m, 1) == list(t.row(2 * m)[1:])

    def test_two_groups_order_two(self):
        assert coeff_A(2, 2) == [2, 3]
        assert coeff_A_tilde(2, 2) == [12, 33, 30, 9]

    @pytest.mark.parametrize("m,L", [(2, 3), (3, 2), (3, 3), (4, 2)])
    def test_A_tilde_brute(self, m, L):
        comps = compositions(m, L)
        want = [0] * (2 * m)
        for m1 in comps:
            for m2 in comps:
                s = tuple(x + y for x, y in zip(m1, m2))
                for j in range(1, 2 * m + 1):
                    want[j - 1] += a_by_definition(s, j)
        assert coeff_A_tilde(m, L) == want

    @given(st.integers(2, 6), st.integers(1, 4))
    @settings(max_examples=30, deadline=None)
    def test_A_total(self, m, L):
        # a_j summed over j is prod_k m_k!
        want = sum(math.prod(math.factorial(v) for v in mv) for mv in compositions(m, L))
        assert sum(coeff_A(m, L)) == want

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            coeff_a((1, 1), L=3)

    def test_C_values(self):
        assert coeff_C((1, 1), 2, 1.0) == pytest.approx(0.2, abs=1e-15)
        assert coeff_C((2, 0), 2, 1.0) == pytest.approx(0.4, abs=1e-15)
        assert coeff_C((3,), 1, 0.37) == 1.0

    @given(st.integers(2, 5), st.integers(1, 3), st.floats(0.01, 100))
    @settings(max_examples=30, deadline=None)
    def test_C_partition_of_unity(self, m, L, c):
        cs = coefficient_set(m, L, c)
        assert sum(cs.C_exact().values()) == 1
        assert math.fsum(cs.C.values()) == pytest.approx(1.0, abs=1e-12)

    def test_coefficient_set_shape(self):
        cs = coefficient_set(3, 2, 0.5)
        assert cs.compositions == compositions(3, 2)
        assert len(cs.A) == 3 and len(cs.A_tilde) == 6
        with pytest.raises(ValueError):
            coefficient_set(1, 2)
        with pytest.raises(ValueError):
            coefficient_set(2, 2, c=0.0)
