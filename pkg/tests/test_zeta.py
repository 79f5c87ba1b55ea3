import math

import mpmath as mp
import numpy as np
import pytest

from zres.errors import DomainError, PrecisionError
from zres.params import EvalConfig
from zres.zeta import (LEMMA1_CALIBRATED_C, continuous_second_moment,
                       dirichlet_partial_sum, zeta_derivative_approx,
                       zeta_derivative_ref, zeta_derivative_ref_batch)


class TestDirichletPartialSum:
    def test_single_term(self):
        assert dirichlet_partial_sum(0, 2.0, 0.0, 1) == 1.0
        for j in (1, 2, 5):
            assert dirichlet_partial_sum(j, 1.3, 4.2, 1) == 0.0

    def test_against_zeta2_with_tail_bound(self):
        val = dirichlet_partial_sum(0, 2.0, 0.0, 10 ** 6)
        # tail of sum n^-2 beyond T is below 1/T
        assert abs(val - math.pi ** 2 / 6) < 1.0 / 10 ** 6
        assert val.imag == 0.0

    def test_monotone_in_truncation_and_bounded(self):
        zeta2 = math.pi ** 2 / 6
        prev = 0.0
        for t_len in (1, 3, 10, 100, 3000):
            cur = dirichlet_partial_sum(0, 2.0, 0.0, t_len).real
            assert cur > prev
            assert cur < zeta2
            prev = cur

    def test_rejects_overflowing_log_power(self):
        with pytest.raises(DomainError):
            dirichlet_partial_sum(400, 2.0, 0.0, 10 ** 6)


class TestReferenceEvaluator:
    def test_zeta2_to_1e12(self):
        val = zeta_derivative_ref(0, 2.0, 0.0, precision_bits=90)
        assert abs(val - 1.6449340668482264) < 1e-12

    def test_zeta_prime_2(self):
        # zeta'(2) from an independent high-precision oracle
        val = zeta_derivative_ref(1, 2.0, 0.0, precision_bits=90)
        assert abs(val - (-0.9375482543158437)) < 1e-12

    def test_first_zero_ordinate(self):
        val = zeta_derivative_ref(0, 0.5, 14.134725141734694)
        assert abs(val) < 1e-6

    def test_against_mpmath_random_grid(self):
        rng = np.random.default_rng(11)
        with mp.workdps(25):
            for _ in range(12):
                j = int(rng.integers(0, 5))
                sigma = float(rng.uniform(0.5, 2.5))
                t = float(rng.uniform(0.0, 8000.0))
                mine = zeta_derivative_ref(j, sigma, t)
                ref = complex(mp.zeta(mp.mpc(sigma, t), derivative=j))
                assert abs(mine - ref) < 2.0 ** (-53 / 2)

    def test_conjugate_symmetry(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            j = int(rng.integers(0, 4))
            sigma = float(rng.uniform(0.55, 2.0))
            t = float(rng.uniform(1.0, 3000.0))
            plus = zeta_derivative_ref(j, sigma, t)
            minus = zeta_derivative_ref(j, sigma, -t)
            assert minus == pytest.approx(plus.conjugate(), abs=1e-12)

    def test_finite_difference_consistency(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            sigma = float(rng.uniform(0.8, 2.0))
            t = float(rng.uniform(5.0, 500.0))
            d1 = zeta_derivative_ref(1, sigma, t)
            errs = []
            for h in (1e-3, 1e-4):
                fd = (zeta_derivative_ref(0, sigma + h, t)
                      - zeta_derivative_ref(0, sigma - h, t)) / (2 * h)
                errs.append(abs(fd - d1))
            scale = max(1.0, abs(zeta_derivative_ref(3, sigma, t)))
            assert errs[0] <= 2e-6 * scale            # O(h^2) at h=1e-3
            assert errs[1] <= errs[0] / 10 + 1e-10 * scale

    def test_batch_matches_scalar(self):
        ts = np.linspace(0.0, 2500.0, 40)
        batch = zeta_derivative_ref_batch(2, 0.8, ts)
        scalars = np.array([zeta_derivative_ref(2, 0.8, float(t)) for t in ts])
        assert np.max(np.abs(batch - scalars)) == 0.0

    def test_pole_and_domain_errors(self):
        with pytest.raises(DomainError):
            zeta_derivative_ref(0, 1.0, 0.0)
        with pytest.raises(DomainError):
            zeta_derivative_ref(0, -0.5, 3.0)
        with pytest.raises(DomainError):
            zeta_derivative_ref(9, 2.0, 3.0)

    def test_precision_unattainable_raises(self):
        # near sigma=0 the Cauchy radius collapses and j!/rho^j swamps any
        # achievable truncation bound
        with pytest.raises(PrecisionError):
            zeta_derivative_ref(8, 0.02, 3000.0)


class TestLemma1Approx:
    def test_sign_pattern_forced_t0(self):
        cfg = EvalConfig(truncation=10 ** 3)
        sample = zeta_derivative_approx(2, 3.0, 0.0, cfg, force=True)
        direct = dirichlet_partial_sum(2, 3.0, 0.0, 10 ** 3)
        assert sample.value == direct          # (-1)^2 = +1
        assert sample.value.real > 0
        assert not sample.rigorous

    def test_rejects_t_outside_window(self):
        cfg = EvalConfig(truncation=10 ** 3)
        with pytest.raises(DomainError):
            zeta_derivative_approx(0, 2.0, 10.0, cfg)

    def test_rejects_sigma_below_floor(self):
        cfg = EvalConfig(truncation=10 ** 3, epsilon=0.1)
        with pytest.raises(DomainError):
            zeta_derivative_approx(0, 0.55, 1500.0, cfg)

    def test_residual_within_bound_sample(self):
        rng = np.random.default_rng(17)
        for big_t in (10 ** 3, 10 ** 4):
            cfg = EvalConfig(truncation=big_t, epsilon=0.1)
            for _ in range(10):
                j = int(rng.integers(0, 4))
                sigma = float(rng.uniform(0.6, 1.2))
                t = float(rng.uniform(big_t, 2.0 * big_t))
                sample = zeta_derivative_approx(j, sigma, t, cfg)
                ref = zeta_derivative_ref(j, sigma, t)
                assert abs(sample.value - ref) <= sample.error_bound

    def test_bound_formula(self):
        cfg = EvalConfig(truncation=10 ** 4, epsilon=0.1)
        sample = zeta_derivative_approx(3, 0.9, 1.5 * 10 ** 4, cfg)
        expected = LEMMA1_CALIBRATED_C * math.factorial(3) / 0.1 ** 3 * (10 ** 4) ** (-0.9 + 0.1)
        assert sample.error_bound == pytest.approx(expected, rel=1e-12)


class TestSecondMoment:
    def test_j0_sigma075(self):
        got = continuous_second_moment(0, 0.75, 2000.0)
        assert 0.8 <= got.value / got.predicted <= 1.2
        assert got.predicted == pytest.approx(2.612375348685488, abs=1e-8)

    def test_large_sigma_proxy(self):
        got = continuous_second_moment(0, 5.0, 1000.0)
        assert abs(got.value - 1.0009945751278181) < 1e-2
        assert got.predicted == pytest.approx(1.0009945751278181, abs=1e-8)

    def test_j1_sigma075(self):
        # the derivative moment approaches its limit like T^(-1/2) (log T)^2;
        # measured ratios: 0.50 at T=2e3, 0.65 at 8e3, 0.74 at 2.4e4
        got = continuous_second_moment(1, 0.75, 2000.0)
        assert 0.4 <= got.value / got.predicted <= 1.2
        assert got.predicted == pytest.approx(15.989556371225687, abs=1e-6)

    def test_domain(self):
        with pytest.raises(DomainError):
            continuous_second_moment(0, 0.4, 1000.0)
        with pytest.raises(DomainError):
            continuous_second_moment(0, 0.75, 50.0)
