import math

import numpy as np
import pytest
from scipy import stats

from hdphom.sampling import (
    MAX_GROUPS,
    ROLE_FDHDP_LAYER2,
    RngStream,
    SamplingError,
    WeightVector,
    gamma_variate,
    gamma_variates,
    sample_fdhdp,
    sample_gem,
    sample_hdp,
    sample_hdp_groups,
)


class TestRngStream:
    def test_reproducible(self):
        a = RngStream(7, 3).generator.random(5)
        b = RngStream(7, 3).generator.random(5)
        assert np.array_equal(a, b)

    def test_distinct_streams(self):
        a = RngStream(7, 3).generator.random(5)
        assert not np.array_equal(a, RngStream(7, 4).generator.random(5))
        assert not np.array_equal(a, RngStream(8, 3).generator.random(5))

    def test_role_layout(self):
        s = RngStream.for_role(11, 5, 2)
        assert s.stream_index == 5 * 16 + 2
        assert s.replicate == 5
        assert s.derive(ROLE_FDHDP_LAYER2).stream_index == 5 * 16 + 15
        with pytest.raises(ValueError):
            RngStream.for_role(11, 0, 16)
        with pytest.raises(ValueError):
            RngStream(1, -1)

    def test_pinned_first_draw(self):
        # guards against silent changes to the stream derivation
        u = RngStream(0, 0).generator.random()
        seq = np.random.SeedSequence(0, spawn_key=(0,))
        assert u == np.random.Generator(np.random.Philox(seq)).random()


class TestGamma:
    @pytest.mark.parametrize("shape", [0.05, 0.3, 0.9, 1.0, 2.5, 40.0])
    def test_distribution(self, shape):
        x = gamma_variates(np.full(20000, shape), RngStream(123, int(shape * 100)))
        if shape < 0.1:
            # the smallest values flush to zero; compare on the log scale above that
            x = x[x > 0]
        assert stats.kstest(x, stats.gamma(shape).cdf).pvalue > 1e-3

    def test_moments_small_shape(self):
        s = 0.2
        x = gamma_variates(np.full(200000, s), RngStream(5, 1))
        assert abs(x.mean() - s) < 4 * math.sqrt(s / x.size)

    def test_tiny_shapes_finite(self):
        x = gamma_variates(np.full(1000, 1e-6), RngStream(1))
        assert np.all(np.isfinite(x)) and np.all(x >= 0)
        assert np.mean(x == 0) > 0.9

    def test_bad_shape(self):
        with pytest.raises(ValueError):
            gamma_variates([1.0, 0.0], RngStream(1))
        with pytest.raises(ValueError):
            gamma_variate(-1.0, RngStream(1))

    def test_scalar(self):
        assert gamma_variate(2.0, RngStream(3)) == gamma_variates([2.0], RngStream(3))[0]


class TestGem:
    def test_mass_accounting(self):
        for alpha in (0.5, 5.0, 200.0):
            w = sample_gem(alpha, 1e-8, RngStream(2))
            assert w.tail_mass < 1e-8
            assert math.fsum(w.weights.tolist()) + w.tail_mass == pytest.approx(1.0, abs=1e-12)
            assert np.all(w.weights >= 0)

    def test_first_stick_mean(self):
        alpha = 3.0
        v1 = np.array([sample_gem(alpha, 1e-6, RngStream(9, r)).weights[0] for r in range(4000)])
        assert abs(v1.mean() - 1 / (1 + alpha)) < 4 * v1.std() / math.sqrt(v1.size)

    def test_length_scales_with_alpha(self):
        w = sample_gem(100.0, 1e-10, RngStream(1))
        # expected number of sticks is about alpha * log(1/eps)
        assert 0.7 * 100 * math.log(1e10) < len(w) < 1.3 * 100 * math.log(1e10)

    def test_stick_cap(self):
        with pytest.raises(SamplingError):
            sample_gem(1e4, 1e-10, RngStream(1), max_sticks=1000)

    def test_bad_args(self):
        with pytest.raises(ValueError):
            sample_gem(0.0)
        with pytest.raises(ValueError):
            sample_gem(1.0, eps=1.0)


class TestHdp:
    def test_normalized(self):
        z = sample_hdp(10.0, 20.0, 1e-10, RngStream(4))
        assert isinstance(z, WeightVector)
        assert z.total == pytest.approx(1.0, abs=1e-12)
        assert z.model == "HDP"

    def test_reproducible(self):
        a = sample_hdp(10.0, 20.0, stream=RngStream.for_replicate(4, 17))
        b = sample_hdp(10.0, 20.0, stream=RngStream.for_replicate(4, 17))
        assert np.array_equal(a.weights, b.weights) and a.tail_mass == b.tail_mass

    def test_single_group_is_first_group(self):
        s = RngStream.for_replicate(4, 2)
        fam = sample_hdp_groups(10.0, 20.0, 3, stream=s)
        one = sample_hdp(10.0, 20.0, stream=s)
        assert np.array_equal(fam.groups[0].weights, one.weights)

    def test_mean_z1(self):
        # E[Z_1] = E[V_1] = 1/(1+alpha)
        alpha, beta = 2.0, 3.0
        z1 = np.array([sample_hdp(alpha, beta, 1e-8, RngStream.for_replicate(3, r)).weights[0]
                       for r in range(4000)])
        assert abs(z1.mean() - 1 / (1 + alpha)) < 4 * z1.std() / math.sqrt(z1.size)

    def test_groups_share_support(self):
        fam = sample_hdp_groups(5.0, 5.0, 4, stream=RngStream(1))
        assert fam.L == 4
        assert fam.matrix().shape == (4, len(fam.base))
        for g in fam.groups:
            assert g.total == pytest.approx(1.0, abs=1e-12)
        assert not np.array_equal(fam.groups[0].weights, fam.groups[1].weights)

    def test_group_limits(self):
        with pytest.raises(ValueError):
            sample_hdp_groups(1.0, 1.0, MAX_GROUPS + 1)
        with pytest.raises(ValueError):
            sample_hdp_groups(1.0, 1.0, 0)
        with pytest.raises(ValueError):
            sample_hdp(1.0, 0.0)


class TestFdhdp:
    def test_shape_and_mass(self):
        z = sample_fdhdp(5.0, 7.0, 50, RngStream(6))
        assert len(z) == 50 and z.tail_mass == 0.0
        assert z.total == pytest.approx(1.0, abs=1e-12)

    def test_symmetric_mean(self):
        n = 10
        z = np.array([sample_fdhdp(3.0, 4.0, n, RngStream.for_replicate(8, r)).weights
                      for r in range(3000)])
        assert np.allclose(z.mean(axis=0), 1 / n, atol=4 * z.std(axis=0).max() / math.sqrt(3000))

    def test_tiny_level_one_shapes(self):
        # alpha/n = 1e-4: most level-one weights flush to zero
        z = sample_fdhdp(0.1, 1.0, 1000, RngStream(2))
        assert z.total == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.isfinite(z.weights))

    def test_bad_args(self):
        with pytest.raises(ValueError):
            sample_fdhdp(1.0, 1.0, 0)
