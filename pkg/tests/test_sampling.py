import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from prodspec.errors import ParameterDomainError
from prodspec.rng import RandomStream
from prodspec.sampling import TWO_PI, sample_angle, sample_log_beta, sample_log_gamma
from prodspec.stats import EmpiricalMeasure, digamma, ks_one_sample


def gamma_cdf_by_quadrature(shape):
    """CDF of Gamma(shape, 1) from integrating the density, no library CDF."""
    log_norm = math.lgamma(shape)

    def density(y):
        return math.exp((shape - 1) * math.log(y) - y - log_norm) if y > 0 else (1.0 if shape == 1 else 0.0)

    def cdf(xs):
        xs = np.asarray(xs)
        order = np.argsort(xs)
        out = np.empty_like(xs, dtype=float)
        acc, prev = 0.0, 0.0
        for i in order:
            acc += integrate.quad(density, prev, xs[i], epsabs=1e-13)[0]
            prev = xs[i]
            out[i] = acc
        return out

    return cdf


def beta_cdf_by_quadrature(a, b):
    log_norm = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)

    def density(y):
        if not 0 < y < 1:
            return 0.0
        return math.exp((a - 1) * math.log(y) + (b - 1) * math.log1p(-y) - log_norm)

    def cdf(xs):
        xs = np.asarray(xs)
        order = np.argsort(xs)
        out = np.empty_like(xs, dtype=float)
        acc, prev = 0.0, 0.0
        for i in order:
            acc += integrate.quad(density, prev, xs[i], epsabs=1e-13)[0]
            prev = xs[i]
            out[i] = acc
        return out

    return cdf


class TestRandomStream:
    def test_same_key_same_sequence(self):
        a = RandomStream(123, 4).generator.random(10)
        b = RandomStream(123, 4).generator.random(10)
        assert np.array_equal(a, b)

    def test_stream_ids_differ(self):
        a = RandomStream(123, 0).generator.random(10)
        b = RandomStream(123, 1).generator.random(10)
        assert not np.array_equal(a, b)

    @pytest.mark.parametrize("seed,stream", [(-1, 0), (0, -1), (2**64, 0), (0, 2**64)])
    def test_rejects_out_of_range(self, seed, stream):
        with pytest.raises(ValueError):
            RandomStream(seed, stream)

    def test_substream(self):
        s = RandomStream(9, 0)
        assert np.array_equal(s.substream(3).generator.random(4), RandomStream(9, 3).generator.random(4))


class TestLogGamma:
    def test_exp1_mean(self):
        x = np.exp(sample_log_gamma(1, RandomStream(1), size=10**6))
        assert abs(x.mean() - 1.0) < 0.004

    def test_shape5_mean(self):
        x = np.exp(sample_log_gamma(5, RandomStream(2), size=10**6))
        assert abs(x.mean() - 5.0) < 0.01

    def test_shape3_log_mean_is_digamma(self):
        x = sample_log_gamma(3, RandomStream(3), size=10**6)
        se = x.std() / math.sqrt(x.size)
        assert abs(x.mean() - 0.9227843350984671) < 4 * se

    @pytest.mark.parametrize("shape", [1, 2, 5, 20])
    def test_ks_against_integrated_density(self, shape):
        x = np.exp(sample_log_gamma(shape, RandomStream(10 + shape), size=10**4))
        assert ks_one_sample(EmpiricalMeasure(x), gamma_cdf_by_quadrature(shape)) < 0.02

    def test_large_shape_is_finite(self):
        x = sample_log_gamma(1000, RandomStream(5), size=1000)
        assert np.all(np.isfinite(x))
        assert abs(x.mean() - digamma(1000)) < 0.01

    @pytest.mark.parametrize("bad", [0, -3, 1.5, float("nan")])
    def test_domain(self, bad):
        with pytest.raises(ParameterDomainError):
            sample_log_gamma(bad, RandomStream(0))

    def test_scalar_and_array_forms(self):
        assert isinstance(sample_log_gamma(2, RandomStream(0)), float)
        out = sample_log_gamma(np.array([1, 2, 3]), RandomStream(0))
        assert out.shape == (3,)
        assert sample_log_gamma(np.array([1, 2, 3]), RandomStream(0), size=(4, 3)).shape == (4, 3)

    def test_deterministic(self):
        a = sample_log_gamma(np.arange(1, 50), RandomStream(77, 5))
        b = sample_log_gamma(np.arange(1, 50), RandomStream(77, 5))
        assert np.array_equal(a, b)


class TestLogBeta:
    def test_uniform_mean(self):
        x = np.exp(sample_log_beta(1, 1, RandomStream(4), size=10**6))
        assert abs(x.mean() - 0.5) < 0.002

    def test_mean_2_3(self):
        x = np.exp(sample_log_beta(2, 3, RandomStream(5), size=10**6))
        assert abs(x.mean() - 0.4) < 0.002

    def test_log_mean_4_2(self):
        x = sample_log_beta(4, 2, RandomStream(6), size=10**6)
        expected = digamma(4) - digamma(6)
        assert abs(expected - (-0.45)) < 1e-12
        assert abs(x.mean() - expected) < 4 * x.std() / math.sqrt(x.size)

    @pytest.mark.parametrize("a,b", [(1, 1), (1, 3), (2, 2), (3, 1), (5, 2), (2, 7)])
    def test_ks_grid(self, a, b):
        x = np.exp(sample_log_beta(a, b, RandomStream(100 + 10 * a + b), size=10**4))
        assert ks_one_sample(EmpiricalMeasure(x), beta_cdf_by_quadrature(a, b)) < 0.02

    @given(a=st.integers(1, 500), b=st.integers(1, 500), seed=st.integers(0, 2**64 - 1))
    @settings(max_examples=60, deadline=None)
    def test_never_positive(self, a, b, seed):
        x = sample_log_beta(a, b, RandomStream(seed), size=64)
        assert np.all(x <= 0.0)
        assert np.all(np.isfinite(x))

    @pytest.mark.parametrize("a,b", [(0, 1), (1, 0), (2.5, 1)])
    def test_domain(self, a, b):
        with pytest.raises(ParameterDomainError):
            sample_log_beta(a, b, RandomStream(0))


class TestAngle:
    def test_moments(self):
        t = sample_angle(RandomStream(8), size=10**6)
        assert abs(t.mean() - math.pi) < 0.01
        assert abs(np.mean(t < math.pi) - 0.5) < 0.002

    def test_ks(self):
        t = sample_angle(RandomStream(9), size=10**4)
        assert ks_one_sample(EmpiricalMeasure(t), lambda x: np.asarray(x) / TWO_PI) <= 0.02

    @given(seed=st.integers(0, 2**64 - 1))
    @settings(max_examples=30, deadline=None)
    def test_range(self, seed):
        t = sample_angle(RandomStream(seed), size=1000)
        assert np.all((t >= 0.0) & (t < TWO_PI))
        assert 0.0 <= sample_angle(RandomStream(seed)) < TWO_PI
