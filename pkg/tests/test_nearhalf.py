import math
import random
from itertools import combinations

import mpmath as mp
import numpy as np
import pytest

from zres.errors import BudgetExceededError, DomainError, EmptyBandError
from zres.nearhalf import (FactoredInteger, PrimeBand, ResonatorConfig,
                           build_prime_band, build_resonator_near_half, compute_A_N,
                           delta_k, eval_resonator, eval_resonator_batch,
                           in_pruned_support, off_support_ratio, prop31_lower_bound,
                           read_resonator, resonator_digest, shell_caps,
                           small_divisor_ratio, weight_f, write_resonator)
from zres.params import ProgressionParams, SigmaMode, sigma_of

SIGMA_1E6 = 0.8808374892492403      # sigma_of(NEAR_HALF, A=1, N=1e6)


def _brute_primes(lo: float, hi: float):
    out = []
    for p in range(2, int(hi) + 2):
        if p <= lo or p > hi:
            continue
        if all(p % q for q in range(2, int(math.isqrt(p)) + 1)):
            out.append(p)
    return out


class TestPrimeBand:
    def test_band_example_1e6(self, band_1e6):
        with mp.workdps(40):
            n = mp.mpf(10) ** 6
            l1 = mp.log(n)
            l2 = mp.log(l1)
            lower = float(mp.e * l1 * l2)
            upper = float(mp.exp(l2 ** mp.mpf("0.5")) * l1 * l2)
        assert band_1e6.lower == pytest.approx(lower, abs=1e-9)
        assert band_1e6.upper == pytest.approx(upper, abs=1e-9)
        assert band_1e6.lower == pytest.approx(98.6101745, abs=1e-6)
        assert band_1e6.upper == pytest.approx(183.3879754, abs=1e-6)
        assert list(band_1e6.primes) == _brute_primes(band_1e6.lower, band_1e6.upper)
        assert len(band_1e6.primes) == 17
        assert band_1e6.primes[0] == 101 and band_1e6.primes[-1] == 181

    def test_empty_band_for_tiny_gamma(self):
        with pytest.raises(EmptyBandError):
            build_prime_band(10 ** 6, 0.001)

    def test_shell_defining_property(self, band_1e6, band_1e3):
        for band in (band_1e6, band_1e3):
            scale = band.log1 * band.log2
            for p in band.primes:
                k = band.shell_index[p]
                assert 1 <= k <= band.shell_count
                assert math.e ** k * scale < p <= math.e ** (k + 1) * scale

    def test_multi_shell_band(self):
        band = build_prime_band(10 ** 8, 0.55)
        assert band.shell_count >= 1
        ks = sorted(set(band.shell_index.values()))
        assert ks[0] == 1


class TestWeight:
    def test_out_of_band_is_zero(self, band_1e6):
        assert weight_f(2, band_1e6, SIGMA_1E6) == 0.0
        assert weight_f(97, band_1e6, SIGMA_1E6) == 0.0

    def test_f101_oracle(self, band_1e6):
        # direct mpmath evaluation of the displayed formula
        with mp.workdps(40):
            l1 = mp.log(mp.mpf(10) ** 6)
            l2 = mp.log(l1)
            l3 = mp.log(l2)
            s = mp.mpf(1) / 2 + 1 / l2
            expected = float(l1 ** (1 - s) * l2 ** s / l3 ** (1 - s)
                             / (mp.mpf(101) ** s * (mp.log(101) - l2 - l3)))
        assert weight_f(101, band_1e6, SIGMA_1E6) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(0.0538584619557123, abs=1e-12)

    def test_positive_and_bounded(self, band_1e6):
        bound = band_1e6.log3 ** (SIGMA_1E6 - 1.0)
        for p in band_1e6.primes:
            f = weight_f(p, band_1e6, SIGMA_1E6)
            assert 0 < f < bound

    def test_denominator_at_least_one(self, band_1e6, band_1e3):
        for band in (band_1e6, band_1e3):
            for p in band.primes:
                assert math.log(p) - band.log2 - band.log3 >= 1.0


class TestDeltaK:
    def test_k_squared_scaling(self):
        for k in (1, 2, 5):
            ratio = delta_k(k, 10 ** 6, SIGMA_1E6, 2.0) / delta_k(2 * k, 10 ** 6, SIGMA_1E6, 2.0)
            assert ratio == pytest.approx(4.0, rel=1e-12)

    def test_oracle_value(self):
        assert delta_k(1, 10 ** 6, SIGMA_1E6, 2.0) == pytest.approx(3.770982162363860, rel=1e-12)

    def test_sigma_to_one_limit(self):
        for k in (1, 3):
            assert delta_k(k, 10 ** 6, 1.0, 1.8) == pytest.approx(1.8 / k ** 2, rel=1e-12)


class TestPrunedSupport:
    def test_unit_accepted(self, band_1e6):
        assert in_pruned_support(FactoredInteger.one(), band_1e6, SIGMA_1E6, 1.8)

    def test_cap_violation_rejected(self, band_1e6):
        caps = shell_caps(band_1e6, SIGMA_1E6, 1.8)
        shell1 = [p for p in band_1e6.primes if band_1e6.shell_index[p] == 1]
        over = FactoredInteger.from_primes(shell1[: caps[1] + 1])
        under = FactoredInteger.from_primes(shell1[: caps[1]])
        assert not in_pruned_support(over, band_1e6, SIGMA_1E6, 1.8)
        assert in_pruned_support(under, band_1e6, SIGMA_1E6, 1.8)

    def test_outside_band_factor_rejected(self, band_1e6):
        with pytest.raises(DomainError):
            in_pruned_support(FactoredInteger.from_primes((2,)), band_1e6, SIGMA_1E6, 1.8)

    def test_divisor_closure_random(self, band_1e6):
        rng = random.Random(41)
        caps = shell_caps(band_1e6, SIGMA_1E6, 1.8)
        accepted = []
        while len(accepted) < 200:
            size = rng.randint(0, min(3, caps[1]))
            m = FactoredInteger.from_primes(rng.sample(band_1e6.primes, size))
            if in_pruned_support(m, band_1e6, SIGMA_1E6, 1.8):
                accepted.append(m)
        for m in accepted:
            for d in m.divisors():
                assert in_pruned_support(d, band_1e6, SIGMA_1E6, 1.8)


class TestResonatorBuild:
    def test_single_prime_band(self):
        band = PrimeBand(n=10 ** 6, gamma=0.5, primes=(101,), shell_index={101: 1},
                         lower=98.61, upper=183.39,
                         log1=math.log(10 ** 6), log2=math.log(math.log(10 ** 6)),
                         log3=math.log(math.log(math.log(10 ** 6))))
        cfg = ResonatorConfig(gamma=0.5, b=1.9, kappa=0.45)
        res = build_resonator_near_half(10 ** 6, 10 ** 4, cfg, sigma=SIGMA_1E6, band=band)
        assert len(res.support) == 2
        f101 = weight_f(101, band, SIGMA_1E6)
        weights = sorted(r for _, r in res.support)
        assert weights == pytest.approx(sorted([1.0, f101]), rel=1e-12)

    def test_mass_covering_when_uncapped(self, res_1e3):
        assert not res_1e3.capped
        assert res_1e3.sum_r_squared >= res_1e3.mass_total * (1 - 1e-12)

    def test_cardinality_cap(self, band_1e6):
        cfg = ResonatorConfig(gamma=0.5, b=1.9, kappa=0.45)
        res = build_resonator_near_half(10 ** 6, 10 ** 4, cfg, sigma=SIGMA_1E6,
                                        band=band_1e6)
        assert len(res.support) <= math.floor((10 ** 4) ** 0.45)
        assert res.capped

    def test_block_ratio(self, res_1e3):
        assert res_1e3.block_ratio == 1.0 + math.log(10 ** 3) / 10 ** 3

    def test_sampling_path_deterministic(self, band_1e6):
        cfg = ResonatorConfig(gamma=0.5, b=1.9, kappa=0.8, max_support=64)
        r1 = build_resonator_near_half(10 ** 6, 10 ** 4, cfg, sigma=SIGMA_1E6,
                                       band=band_1e6, seed=5)
        r2 = build_resonator_near_half(10 ** 6, 10 ** 4, cfg, sigma=SIGMA_1E6,
                                       band=band_1e6, seed=5)
        assert not r1.exhaustive
        assert r1.support == r2.support
        with pytest.raises(BudgetExceededError):
            build_resonator_near_half(10 ** 6, 10 ** 4, cfg, sigma=SIGMA_1E6,
                                      band=band_1e6, seed=5, allow_sampling=False)


class TestEval:
    def test_t0_maximal_real(self, res_1e3):
        r0 = eval_resonator(res_1e3, 0.0)
        assert r0.imag == 0.0
        assert r0.real == pytest.approx(float(res_1e3.weights.sum()), rel=1e-14)
        for t in (0.3, 2.7, 41.0, 1000.0):
            assert abs(eval_resonator(res_1e3, t)) <= r0.real * (1 + 1e-12)

    def test_conjugate_symmetry(self, res_1e3):
        for t in (0.5, 3.3, 77.7):
            assert eval_resonator(res_1e3, -t) == eval_resonator(res_1e3, t).conjugate()

    def test_cauchy_schwarz_bound(self, res_1e3):
        cap = len(res_1e3.support) * res_1e3.sum_r_squared
        for t in np.linspace(0, 500, 64):
            assert abs(eval_resonator(res_1e3, float(t))) ** 2 <= cap * (1 + 1e-12)

    def test_batch_matches_scalar(self, res_1e3):
        ts = np.linspace(0, 100, 37)
        batch = eval_resonator_batch(res_1e3, ts)
        for t, val in zip(ts, batch):
            assert complex(val) == pytest.approx(eval_resonator(res_1e3, float(t)),
                                                 rel=1e-13, abs=1e-13)


class TestBandProduct:
    def test_empty_band_gives_one(self):
        band = PrimeBand(n=10 ** 6, gamma=0.5, primes=(), shell_index={},
                         lower=98.61, upper=98.62,
                         log1=math.log(10 ** 6), log2=math.log(math.log(10 ** 6)),
                         log3=math.log(math.log(math.log(10 ** 6))))
        assert compute_A_N(band, SIGMA_1E6) == 1.0

    def test_single_prime_formula(self):
        band = PrimeBand(n=10 ** 6, gamma=0.5, primes=(101,), shell_index={101: 1},
                         lower=98.61, upper=183.39,
                         log1=math.log(10 ** 6), log2=math.log(math.log(10 ** 6)),
                         log3=math.log(math.log(math.log(10 ** 6))))
        f = weight_f(101, band, SIGMA_1E6)
        expected = (1 + f * f + f * 101 ** -SIGMA_1E6) / (1 + f * f)
        assert compute_A_N(band, SIGMA_1E6) == pytest.approx(expected, rel=1e-14)

    def test_reverse_order_agreement(self, band_1e6):
        fwd = compute_A_N(band_1e6, SIGMA_1E6)
        rev = compute_A_N(band_1e6, SIGMA_1E6, reverse=True)
        assert fwd > 1.0
        assert abs(fwd - rev) <= 1e-12 * fwd

    def test_log_bound(self, band_1e6):
        a_n = compute_A_N(band_1e6, SIGMA_1E6)
        cap = sum(weight_f(p, band_1e6, SIGMA_1E6) * p ** -SIGMA_1E6
                  for p in band_1e6.primes)
        assert math.log(a_n) <= cap

    def test_brute_force_ratio_form(self, band_1e3, params_1e3):
        # exhaustive supp(f) enumeration oracle on a small band
        sigma = sigma_of(params_1e3)
        primes = band_1e3.primes
        assert len(primes) <= 12
        fv = {p: weight_f(p, band_1e3, sigma) for p in primes}
        num = 0.0
        den = 0.0
        for r in range(len(primes) + 1):
            for s_set in combinations(primes, r):
                f_s = math.prod(fv[p] for p in s_set)
                n_val = math.prod(s_set) if s_set else 1
                den += f_s * f_s
                inner = 0.0
                for rr in range(len(s_set) + 1):
                    for d_set in combinations(s_set, rr):
                        f_d = math.prod(fv[p] for p in d_set)
                        d_val = math.prod(d_set) if d_set else 1
                        inner += f_d * d_val ** sigma
                num += f_s * n_val ** -sigma * inner
        brute = num / den
        assert compute_A_N(band_1e3, sigma) == pytest.approx(brute, rel=1e-12)


class TestPropBounds:
    def test_limit_and_oracle(self):
        assert prop31_lower_bound(10 ** 6, SIGMA_1E6, 1e-9, 1e-9) == pytest.approx(1.0, abs=1e-12)
        assert prop31_lower_bound(10 ** 6, SIGMA_1E6, 0.5, 0.9) == pytest.approx(
            1.2902978673065444, rel=1e-12)

    def test_monotone_decreasing_in_sigma(self):
        vals = [prop31_lower_bound(10 ** 6, s, 0.5, 0.9)
                for s in (0.55, 0.65, 0.75, 0.85, 0.95)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_prop32_negligible_on_doubling_grid(self):
        # at desk scale the shell caps exclude essentially no f^2-weighted
        # mass: the off-support share sits at the float noise floor, which is
        # the desk-scale face of the vanishing-ratio claim
        for n in (10 ** 4, 2 * 10 ** 4, 4 * 10 ** 4, 8 * 10 ** 4):
            band = build_prime_band(n, 0.45)
            params = ProgressionParams(alpha=1.0, n_range=n, j=0, a_param=0.5,
                                       sigma_mode=SigmaMode.NEAR_HALF)
            assert abs(off_support_ratio(band, sigma_of(params), 1.8)) < 1e-4

    def test_prop33_trend_on_band_preserving_doublings(self):
        # the small-divisor share decreases along doubling steps that keep
        # the band's prime set fixed (1e4->2e4 and 4e4->8e4 share bands)
        def ratio(n):
            band = build_prime_band(n, 0.45)
            params = ProgressionParams(alpha=1.0, n_range=n, j=0, a_param=0.5,
                                       sigma_mode=SigmaMode.NEAR_HALF)
            sigma = sigma_of(params)
            val = small_divisor_ratio(band, sigma, 1.8, eps=0.05)
            union_bound = sum(weight_f(p, band, sigma) * p ** -sigma
                              for p in band.primes)
            assert 0 < val <= union_bound
            return val

        assert ratio(2 * 10 ** 4) < ratio(10 ** 4)
        assert ratio(8 * 10 ** 4) < ratio(4 * 10 ** 4)


class TestSerialization:
    def test_round_trip(self, res_1e3, tmp_path):
        path = tmp_path / "r.zres"
        digest = write_resonator(res_1e3, path)
        loaded, digest2 = read_resonator(path)
        assert digest == digest2 == resonator_digest(res_1e3)
        assert loaded.support == res_1e3.support
        assert loaded.n == res_1e3.n and loaded.t_len == res_1e3.t_len

    def test_header_format(self, res_1e3, tmp_path):
        path = tmp_path / "r.zres"
        write_resonator(res_1e3, path)
        head = path.read_text().split("\n")[0].split()
        assert head[0] == "zres1" and head[1] == "near-half"
        assert head[2] == "1000"
        assert len(head) == 8

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "bad.zres"
        path.write_text("zres1 near-one 10000 20.0\n1\n")
        with pytest.raises(DomainError):
            read_resonator(path)
