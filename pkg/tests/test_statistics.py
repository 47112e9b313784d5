import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdphom.combinatorics import default_table, rising_factorial
from hdphom.sampling import GroupFamily, RngStream, WeightVector, sample_hdp_groups
from hdphom.statistics import (
    HomozygosityValue,
    exact_mean_fdhdp,
    exact_mean_fdhdp_fraction,
    exact_mean_groups,
    exact_mean_hdp,
    exact_mean_hdp_fraction,
    exact_mean_z_power,
    group_homozygosity,
    power_sum,
    scale_fdhdp,
    scale_groups,
    scale_hdp,
    scaled_statistic,
    standardizer,
    theorem_centering,
)

GRID = [0.5, 1.0, 3.0, 17.0, 250.0]

simplex = st.lists(st.floats(1e-6, 1.0), min_size=1, max_size=40).map(
    lambda v: np.array(v) / math.fsum(v))


class TestPowerSum:
    def test_value(self):
        w = np.array([0.5, 0.25, 0.25])
        assert power_sum(w, 2).value == 0.375
        assert power_sum(w, 3).value == 0.15625

    def test_tail_reported(self):
        wv = WeightVector(np.array([0.6, 0.4 - 1e-9]), 1e-9, "HDP")
        h = power_sum(wv, 2)
        assert h.tail_bound == 1e-9 and h.m == 2

    def test_order(self):
        with pytest.raises(ValueError):
            power_sum(np.ones(2) / 2, 1)

    @given(simplex, st.integers(2, 8))
    def test_bounds_and_permutation(self, w, m):
        h = power_sum(w, m).value
        assert 0 < h <= 1 + 1e-12
        assert h == power_sum(w[::-1], m).value
        # Jensen below; max w <= sqrt(H_2) above
        h2 = power_sum(w, 2).value
        assert h2 ** (m - 1) * (1 - 1e-9) <= h <= h2 ** (m / 2) * (1 + 1e-9)

    def test_exact_sum_against_fractions(self):
        w = np.geomspace(1e-12, 0.5, 300)
        want = sum(Fraction(x) ** 3 for x in w.tolist())
        assert power_sum(w, 3).value == float(want)


class TestGroupHomozygosity:
    def test_single_group(self):
        fam = sample_hdp_groups(4.0, 6.0, 1, stream=RngStream(3))
        assert group_homozygosity(fam, 3).value == power_sum(fam.groups[0], 3).value

    def test_two_groups_order_two(self):
        fam = sample_hdp_groups(4.0, 6.0, 2, stream=RngStream(3))
        z1, z2 = fam.matrix()
        plain = group_homozygosity(fam, 2).value
        assert plain == pytest.approx((np.sum(z1**2) + np.sum(z1 * z2) + np.sum(z2**2)) / 4, rel=1e-13)
        multi = group_homozygosity(fam, 2, multinomial=True).value
        assert multi == pytest.approx(np.sum(((z1 + z2) / 2) ** 2), rel=1e-13)

    def test_complete_homogeneous(self):
        # multinomial version is the power sum of the group average
        z = np.array([[0.5, 0.3, 0.2], [0.1, 0.1, 0.8], [0.3, 0.3, 0.4]])
        fam = GroupFamily(WeightVector(np.ones(3) / 3, 0.0, "GEM"),
                          [WeightVector(r, 0.0, "HDP") for r in z])
        assert group_homozygosity(fam, 4, multinomial=True).value == pytest.approx(
            np.sum(z.mean(axis=0) ** 4), rel=1e-13)


class TestExactMeans:
    @pytest.mark.parametrize("alpha", GRID)
    @pytest.mark.parametrize("beta", GRID)
    def test_order_two_closed_form(self, alpha, beta):
        want = (alpha + beta + 1) / ((alpha + 1) * (beta + 1))
        assert exact_mean_hdp(alpha, beta, 2) == pytest.approx(want, rel=1e-14)

    def test_rational(self):
        assert exact_mean_hdp_fraction(5, 5, 2) == Fraction(11, 36)

    @pytest.mark.parametrize("m", [2, 3, 5])
    @pytest.mark.parametrize("alpha,beta", [(2.0, 3.0), (0.7, 12.0), (9.0, 0.4)])
    def test_sum_over_atoms(self, m, alpha, beta):
        # independent route: sum_k E[Z_k^m]; geometric tail in k summed in closed form
        K = 400
        head = math.fsum(exact_mean_z_power(alpha, beta, k, m) for k in range(1, K + 1))
        t = default_table()
        tail = math.fsum(t[m, j] * beta**j * math.factorial(j) / rising_factorial(alpha + 1.0, j)
                         * (alpha / (alpha + j)) ** K * (alpha + j) / j
                         for j in range(1, m + 1)) / rising_factorial(beta, m)
        assert head + tail == pytest.approx(exact_mean_hdp(alpha, beta, m), rel=1e-11)

    def test_z_power_first_moment(self):
        # E[Z_k] = E[V_k] = alpha^(k-1)/(1+alpha)^k
        for k in (1, 2, 5):
            assert exact_mean_z_power(3.0, 7.0, k, 1) == pytest.approx(3.0 ** (k - 1) / 4.0**k)

    @pytest.mark.parametrize("m", [2, 3, 4])
    @pytest.mark.parametrize("alpha,beta,n", [(5, 5, 10), (2.5, 8, 3), (40, 1.5, 7)])
    def test_fdhdp_dirichlet_moments(self, m, alpha, beta, n):
        # n E[Z_1^m], with E[Z_1^m | W] = (beta W_1)_(m)/(beta)_(m) and Dirichlet moments of W_1
        t = default_table()
        a, b = Fraction(alpha), Fraction(beta)
        want = n * sum(t[m, j] * b**j * rising_factorial(a / n, j) / rising_factorial(a, j)
                       for j in range(1, m + 1)) / rising_factorial(b, m)
        assert exact_mean_fdhdp_fraction(alpha, beta, n, m) == want

    def test_fdhdp_single_atom(self):
        assert exact_mean_fdhdp(3.0, 4.0, 1, 3) == pytest.approx(1.0, rel=1e-15)

    def test_fdhdp_approaches_hdp(self):
        a, b = 4.0, 6.0
        gaps = [abs(exact_mean_fdhdp(a, b, n, 3) - exact_mean_hdp(a, b, 3)) for n in (10, 100, 1000)]
        assert gaps[0] > gaps[1] > gaps[2]

    def test_groups_two_by_two(self):
        alpha, beta = 5.0, 7.0
        within = (alpha + beta + 1) / ((alpha + 1) * (beta + 1))
        across = 1 / (alpha + 1)
        assert exact_mean_groups(alpha, beta, 2, 2) == pytest.approx((2 * within + across) / 4, rel=1e-14)
        assert exact_mean_groups(alpha, beta, 2, 2, multinomial=True) == pytest.approx(
            (within + across) / 2, rel=1e-14)

    @pytest.mark.parametrize("m", [2, 3, 4])
    def test_groups_one_group(self, m):
        assert exact_mean_groups(2.5, 4.0, m, 1) == exact_mean_hdp(2.5, 4.0, m)

    def test_groups_monte_carlo_order_three(self):
        alpha, beta, R = 2.0, 3.0, 6000
        vals = np.array([group_homozygosity(sample_hdp_groups(alpha, beta, 2, 1e-9,
                                                              RngStream.for_replicate(17, r)), 3).value
                         for r in range(R)])
        want = exact_mean_groups(alpha, beta, 3, 2)
        assert abs(vals.mean() - want) < 4 * vals.std() / math.sqrt(R)

    def test_order_check(self):
        with pytest.raises(ValueError):
            exact_mean_hdp(1.0, 1.0, 1)
        with pytest.raises(ValueError):
            exact_mean_fdhdp(1.0, 1.0, 0, 2)


class TestScaling:
    def test_scale_values(self):
        assert scale_hdp(500.0, 2, 1.0) == pytest.approx(2 / 500)
        assert scale_hdp(10.0, 2, 0.5) == pytest.approx(3 / 10)
        # (d+1)_(1) = 2 for d = 1
        assert scale_fdhdp(500.0, 2, 1.0, 1.0) == pytest.approx(3 / 500)
        # A = [2, 3] for L = 2: (2 + 3)/(4 beta)
        assert scale_groups(500.0, 2, 2, 1.0) == pytest.approx(5 / 2000)

    def test_groups_scale_reduces(self):
        for m in (2, 3, 4):
            assert scale_groups(30.0, m, 1, 0.7) == scale_hdp(30.0, m, 0.7)

    def test_centering_is_scale_at_ratio(self):
        assert theorem_centering("hdp", 3, 50.0, 20.0) == pytest.approx(scale_hdp(20.0, 3, 2.5), rel=1e-15)
        assert theorem_centering("groups", 2, 5.0, 5.0, L=2) == scale_groups(5.0, 2, 2, 1.0)

    def test_centering_tracks_mean(self):
        # the theorem centering and exact mean agree to leading order
        for b in (1e3, 1e5):
            rel = abs(theorem_centering("hdp", 2, b, b) / exact_mean_hdp(b, b, 2) - 1)
            assert rel < 3 / b

    def test_scaled_statistic(self):
        s = scaled_statistic(0.005, "hdp", 2, 500.0, 500.0)
        assert s.scale == pytest.approx(0.004) and s.centering == pytest.approx(0.004)
        assert s.value == pytest.approx(math.sqrt(500) * 0.001 / 0.004)
        e = scaled_statistic(HomozygosityValue(2, 0.005), "hdp", 2, 500.0, 500.0, centering="exact-mean")
        assert e.centering == exact_mean_hdp(500.0, 500.0, 2)
        assert e.scale == s.scale

    def test_standardizer_matches(self):
        c, f = standardizer("fdhdp", 2, 50.0, 40.0, n=25)
        s = scaled_statistic(0.03, "fdhdp", 2, 50.0, 40.0, n=25)
        assert (c, f) == (s.centering, s.scale)

    def test_errors(self):
        with pytest.raises(ValueError):
            scaled_statistic(0.1, "dp", 2, 1.0, 1.0)
        with pytest.raises(ValueError):
            scaled_statistic(0.1, "fdhdp", 2, 1.0, 1.0)
        with pytest.raises(ValueError):
            scaled_statistic(0.1, "hdp", 2, 1.0, 1.0, L=2)
        with pytest.raises(ValueError):
            scaled_statistic(0.1, "hdp", 2, 1.0, 1.0, centering="median")


@given(st.floats(0.1, 1e4), st.floats(0.1, 1e4))
@settings(max_examples=50)
def test_mean_is_probability(alpha, beta):
    h2 = exact_mean_hdp(alpha, beta, 2)
    h3 = exact_mean_hdp(alpha, beta, 3)
    assert 0 < h3 < h2 < 1
