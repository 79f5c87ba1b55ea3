"""Two-route evaluation of zeta derivatives.

Route one is the truncated Dirichlet polynomial with the explicit
j!/eps^j * T^(-sigma+eps) error model (`zeta_derivative_approx`).  Route two
is an independent Euler-Maclaurin reference evaluator with a certified
truncation bound (`zeta_derivative_ref`), kept deliberately separate so each
can check the other.  A continuous mean-square verifier built on the
reference route rounds out the module.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import mpmath as mp
import numpy as np

from .errors import DomainError, PrecisionError, QuadratureError
from .params import EvalConfig

# Calibrated as 2x the max residual ratio observed over the sweep
# sigma in {0.6, 0.75, 0.9, 1.2} x j in {0..3} x T in {1e3, 1e4} with
# epsilon = 0.1 (see calibrate_lemma1_constant); observed max was 0.5228.
LEMMA1_CALIBRATED_C = 1.05
LEMMA1_SIGMA0 = 0.5

_EPS = 2.0 ** -53
_EPS128 = 2.0 ** -64
_MAX_BERNOULLI_TERMS = 30
_MAX_REF_DERIVATIVE = 8

# B_{2r} for r = 0..32 as exact-to-double floats.
_B2R = np.array([float(mp.bernoulli(2 * r)) for r in range(33)])

# 2*pi at extended precision for phase argument reduction.
_TWO_PI_128 = np.float128("6.283185307179586476925286766559005768394")


@dataclass(frozen=True)
class ZetaSample:
    """One evaluation of zeta^(j)(sigma + it) with its error bound."""

    sigma: float
    t: float
    j: int
    value: complex
    error_bound: float
    rigorous: bool = True

    def __post_init__(self):
        if not self.sigma > 0.5:
            raise DomainError(f"samples live in sigma > 1/2, got {self.sigma}")
        if not math.isfinite(self.error_bound) or self.error_bound < 0:
            raise DomainError(f"error_bound must be finite and >= 0: {self.error_bound}")
        if not (math.isfinite(self.value.real) and math.isfinite(self.value.imag)):
            raise DomainError(f"value must be finite: {self.value}")


class SecondMoment(NamedTuple):
    """Mean square of |zeta^(j)| over [0, T] and its predicted large-T limit."""

    value: float
    predicted: float


def dirichlet_partial_sum(j: int, sigma: float, t: float, truncation: int) -> complex:
    """Sum_{n<=T} (log n)^j n^(-sigma) e^(-it log n), ascending n, compensated.

    Deterministic for fixed inputs: the real and imaginary parts are reduced
    with exactly-rounded summation.
    """
    if truncation < 1:
        raise DomainError(f"truncation must be >= 1, got {truncation}")
    if j < 0:
        raise DomainError(f"j must be non-negative, got {j}")
    if truncation > 2 and j * math.log(math.log(truncation)) > 700:
        raise DomainError(f"(log T)^j overflows double precision for j={j}, T={truncation}")
    n = np.arange(1, truncation + 1, dtype=np.float64)
    logs = np.log(n)
    coef = n ** (-sigma) if j == 0 else logs ** j * n ** (-sigma)
    phases = np.exp(-1j * t * logs)
    re = math.fsum((coef * phases.real).tolist())
    im = math.fsum((coef * phases.imag).tolist())
    return complex(re, im)


def _em_cutoff(t: float) -> int:
    return max(24, int(math.ceil(1.3 * (abs(t) + 8.0))))


def _em_truncation_bound(j: int, s: complex, sigma: float, cutoff: int, r_used: int) -> float:
    """Certified bound on the Euler-Maclaurin remainder after r_used terms.

    For j = 0 this is the classical |(s+2R+1)/(sigma+2R+1)| multiple of the
    first omitted correction term.  For j >= 1 the remainder is analytic in s,
    so the bound is pushed through Cauchy's integral formula on a circle of
    radius rho < sigma.
    """
    big_r = r_used
    rho = 0.0 if j == 0 else min(sigma / 2.0, 0.5)
    i = np.arange(0, 2 * big_r + 1, dtype=np.float64)
    # log of |B_{2R+2}|/(2R+2)! via |B_{2r}| = 2 (2r)! zeta(2r) / (2pi)^{2r}.
    log_c = math.log(4.0) - (2 * big_r + 2) * math.log(2 * math.pi)
    log_prod = float(np.log(np.abs(s + i) + rho).sum())
    log_kpow = -(sigma - rho + 2 * big_r + 1) * math.log(cutoff)
    ratio = (abs(s + 2 * big_r + 1) + rho) / (sigma - rho + 2 * big_r + 1)
    log_bound = log_c + log_prod + log_kpow + math.log(ratio)
    if j > 0:
        log_bound += math.lgamma(j + 1) - j * math.log(rho)
    if log_bound > 700:
        return math.inf
    return math.exp(log_bound)


def _em_eval_once(j: int, sigma: float, t: float, cutoff: int, target: float,
                  logs: np.ndarray | None = None,
                  coef: np.ndarray | None = None,
                  logs128: np.ndarray | None = None) -> tuple[complex, float] | None:
    """One Euler-Maclaurin attempt at fixed cutoff; None if not certifiable."""
    s = complex(sigma, t)
    if logs is None:
        n = np.arange(1, cutoff, dtype=np.float64)
        logs = np.log(n)
        coef = n ** (-sigma) if j == 0 else logs ** j * n ** (-sigma)
    else:
        logs = logs[: cutoff - 1]
        coef = coef[: cutoff - 1]
        if logs128 is not None:
            logs128 = logs128[: cutoff - 1]
    coef_sq = float(np.dot(coef, coef))
    lk = math.log(cutoff)

    # Phase arguments t*log(n) reach ~1e5, where plain double products cost
    # ~ulp(t log n) per phase.  When that noise threatens the target, reduce
    # the arguments mod 2*pi in extended precision first.
    phase_scale = max(1.0, abs(t) * lk)
    delta_theta = 4.0 * _EPS * phase_scale
    if delta_theta * math.sqrt(coef_sq) > 0.2 * target:
        if logs128 is None:
            logs128 = np.log(np.arange(1, cutoff, dtype=np.float128))
        theta = np.mod(logs128 * np.float128(t), _TWO_PI_128).astype(np.float64)
        phases = np.exp(-1j * theta)
        delta_theta = 8.0 * _EPS128 * phase_scale + 4.0 * _EPS
    else:
        phases = np.exp(-1j * t * logs)
    partial = (-1.0) ** j * complex(np.dot(coef, phases.real), np.dot(coef, phases.imag))

    k_ms = cmath.exp(-s * lk)          # cutoff^(-s)
    k_1ms = cutoff * k_ms              # cutoff^(1-s)
    half = 0.5 * (-lk) ** j * k_ms
    pole = 0j
    for m in range(j + 1):
        pole += (math.comb(j, m) * (-lk) ** m * (-1) ** (j - m) * math.factorial(j - m)) \
            * k_1ms / (s - 1.0) ** (j - m + 1)

    # Bernoulli corrections: term_r = B_{2r}/(2r)! * (s)_{2r-1} * cutoff^{-s-2r+1},
    # differentiated j times.  (s)_{2r-1}/K^{2r-1} and the log-derivative prefix
    # sums are shared across r via cumulative arrays.
    rmax = _MAX_BERNOULLI_TERMS
    idx = np.arange(0, 2 * rmax, dtype=np.float64)
    factors = (s + idx) / cutoff
    cumq = np.cumprod(factors)         # Q_r = cumq[2r-2]
    if j > 0:
        inv = 1.0 / (s + idx)
        prefix = [None] * (j + 1)
        for q in range(1, j + 1):
            prefix[q] = np.cumsum(inv ** q)
    corr = 0j
    r_used = 0
    cert = math.inf
    for r in range(1, rmax + 1):
        c_r = _B2R[r] / math.factorial(2 * r)
        q_r = cumq[2 * r - 2]
        if j == 0:
            dfac = 1.0 + 0j
        else:
            ell = [0j] * (j + 1)
            for q in range(1, j + 1):
                ell[q] = (-1) ** (q - 1) * math.factorial(q - 1) * prefix[q][2 * r - 2]
            beta = [1.0 + 0j] + [0j] * j
            for m in range(j):
                acc = 0j
                for k in range(m + 1):
                    acc += math.comb(m, k) * beta[m - k] * ell[k + 1]
                beta[m + 1] = acc
            dfac = sum(math.comb(j, m) * beta[m] * (-lk) ** (j - m) for m in range(j + 1))
        corr += c_r * q_r * k_ms * dfac
        r_used = r
        cert = _em_truncation_bound(j, s, sigma, cutoff, r_used)
        if cert <= 0.25 * target:
            break

    # Floating-point allowance: RMS accumulation model plus phase noise.
    rms = math.sqrt(coef_sq)
    round_err = (_EPS * rms * (8.0 + 2.0 * math.sqrt(math.log2(cutoff)))
                 + delta_theta * rms
                 + 16.0 * _EPS * (abs(pole) + abs(half) + abs(corr) + abs(partial)))
    total = cert + round_err
    if total > target:
        return None
    return complex(partial + pole + half + corr), float(total)


def zeta_derivative_ref(j: int, sigma: float, t: float, precision_bits: int = 53) -> complex:
    """Reference zeta^(j)(sigma + it), certified to about 2^(-precision_bits/2).

    Euler-Maclaurin with analytically differentiated terms and up to 30
    Bernoulli corrections; precision_bits > 53 delegates to an
    arbitrary-precision evaluation of the same expansion.  The returned value
    is rounded once to a machine complex, so accuracy beyond ~1e-16 relative
    is not representable in the return type.
    """
    if sigma <= 0:
        raise DomainError(f"reference evaluator needs sigma > 0, got {sigma}")
    if not 0 <= j <= _MAX_REF_DERIVATIVE:
        raise DomainError(f"reference evaluator supports j <= {_MAX_REF_DERIVATIVE}, got {j}")
    if abs(complex(sigma, t) - 1.0) < 1e-9:
        raise DomainError("s = 1 is a pole of zeta")
    if precision_bits > 53:
        with mp.workprec(precision_bits + 20):
            return complex(mp.zeta(mp.mpc(sigma, t), derivative=j))
    target = 2.0 ** (-precision_bits / 2.0)
    cutoff = _em_cutoff(t)
    for attempt in range(3):
        got = _em_eval_once(j, sigma, t, cutoff, target)
        if got is not None:
            return got[0]
        cutoff *= 2
        if cutoff > 4_000_000:
            break
    raise PrecisionError(
        f"cannot certify zeta^({j})({sigma}+{t}i) to {target:.3e} within budget"
    )


def zeta_derivative_ref_batch(j: int, sigma: float, ts: Sequence[float]) -> np.ndarray:
    """Vectorized double-precision reference evaluation over many ordinates.

    Shares the coefficient table across ordinates; each point is certified at
    the same 2^(-53/2) target as the scalar path.
    """
    ts = np.asarray(ts, dtype=np.float64)
    if ts.size == 0:
        return np.zeros(0, dtype=np.complex128)
    if sigma <= 0:
        raise DomainError(f"reference evaluator needs sigma > 0, got {sigma}")
    if not 0 <= j <= _MAX_REF_DERIVATIVE:
        raise DomainError(f"reference evaluator supports j <= {_MAX_REF_DERIVATIVE}, got {j}")
    target = 2.0 ** (-53 / 2.0)
    kmax = _em_cutoff(float(np.max(np.abs(ts))))
    n = np.arange(1, 4 * kmax, dtype=np.float64)
    logs = np.log(n)
    logs128 = np.log(np.arange(1, 4 * kmax, dtype=np.float128))
    coef = n ** (-sigma) if j == 0 else logs ** j * n ** (-sigma)
    out = np.empty(ts.size, dtype=np.complex128)
    for i, t in enumerate(ts):
        t = float(t)
        if abs(complex(sigma, t) - 1.0) < 1e-9:
            raise DomainError("s = 1 is a pole of zeta")
        cutoff = _em_cutoff(t)
        got = None
        while got is None and cutoff <= len(n):
            got = _em_eval_once(j, sigma, t, cutoff, target,
                                logs=logs, coef=coef, logs128=logs128)
            cutoff *= 2
        if got is None:
            raise PrecisionError(f"cannot certify batch point t={t}")
        out[i] = got[0]
    return out


def zeta_derivative_approx(j: int, sigma: float, t: float, config: EvalConfig,
                           force: bool = False,
                           sigma0: float = LEMMA1_SIGMA0) -> ZetaSample:
    """Truncated-Dirichlet-polynomial route with its explicit error bound.

    value = (-1)^j * dirichlet_partial_sum(j, sigma, t, T);
    error_bound = C * j!/eps^j * T^(-sigma+eps).  Outside the t in [T, 2T]
    regime the bound has no backing and the sample is flagged non-rigorous
    (requires force=True).
    """
    eps = config.epsilon
    big_t = config.truncation
    if sigma < sigma0 + eps:
        raise DomainError(f"sigma={sigma} below sigma0+eps={sigma0 + eps}")
    rigorous = True
    if not big_t <= t <= 2 * big_t:
        if not force:
            raise DomainError(
                f"t={t} outside [T, 2T]=[{big_t}, {2 * big_t}]; pass force=True to override"
            )
        rigorous = False
    value = (-1.0) ** j * dirichlet_partial_sum(j, sigma, t, big_t)
    bound = LEMMA1_CALIBRATED_C * math.factorial(j) / eps ** j * big_t ** (-sigma + eps)
    return ZetaSample(sigma=sigma, t=t, j=j, value=value, error_bound=bound,
                      rigorous=rigorous)


def calibrate_lemma1_constant(sigmas: Sequence[float] = (0.6, 0.75, 0.9, 1.2),
                              js: Sequence[int] = (0, 1, 2, 3),
                              truncations: Sequence[int] = (10 ** 3, 10 ** 4),
                              epsilon: float = 0.1,
                              points_per_cell: int = 5) -> float:
    """Max residual ratio |approx - ref| / (j!/eps^j T^(-sigma+eps)) over the sweep.

    The shipped LEMMA1_CALIBRATED_C is twice the value this returns on the
    default grid.
    """
    worst = 0.0
    for big_t in truncations:
        for sigma in sigmas:
            for j in js:
                ts = [big_t * (1.0 + i / (points_per_cell - 1)) for i in range(points_per_cell)]
                refs = zeta_derivative_ref_batch(j, sigma, ts)
                raw = math.factorial(j) / epsilon ** j * big_t ** (-sigma + epsilon)
                for t, ref in zip(ts, refs):
                    val = (-1.0) ** j * dirichlet_partial_sum(j, sigma, t, big_t)
                    worst = max(worst, abs(val - ref) / raw)
    return worst


def continuous_second_moment(j: int, sigma: float, big_t: float,
                             samples: int = 4096, rtol: float = 1e-3,
                             max_refine: int = 3) -> SecondMoment:
    """(1/T) * integral of |zeta^(j)(sigma+it)|^2 over [0, T], with prediction.

    Composite-Simpson quadrature refined by panel doubling; raises
    QuadratureError if the refinement budget is exhausted before successive
    values agree to rtol.  `predicted` is |zeta^(2j)(2 sigma)| from the
    reference evaluator.
    """
    if sigma <= 0.5:
        raise DomainError(f"second moment needs sigma > 1/2, got {sigma}")
    if big_t < 100:
        raise DomainError(f"second moment needs T >= 100, got {big_t}")
    if samples < 8:
        raise DomainError(f"samples must be >= 8, got {samples}")

    def simpson(panels: int) -> float:
        ts = np.linspace(0.0, big_t, panels + 1)
        vals = np.abs(zeta_derivative_ref_batch(j, sigma, ts)) ** 2
        h = big_t / panels
        total = vals[0] + vals[-1] + 4.0 * vals[1:-1:2].sum() + 2.0 * vals[2:-1:2].sum()
        return float(total * h / 3.0)

    panels = samples + (samples % 2)
    prev = simpson(panels)
    for _ in range(max_refine):
        panels *= 2
        cur = simpson(panels)
        if abs(cur - prev) <= rtol * abs(cur):
            prev = cur
            break
        prev = cur
    else:
        raise QuadratureError(
            f"second-moment quadrature did not reach rtol={rtol} within {max_refine} refinements"
        )
    predicted = abs(zeta_derivative_ref(2 * j, 2.0 * sigma, 0.0))
    return SecondMoment(value=prev / big_t, predicted=predicted)
