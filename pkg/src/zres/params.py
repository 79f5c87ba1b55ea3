"""Shared parameters, iterated logarithms and sigma-placement rules.

Defines the progression grid {alpha*l}, the derivative order j, the distance
parameter A, and the two sigma placements: near the critical line
(sigma = 1/2 + A/log_2 N) and near the 1-line (sigma = 1 - A/log_2 N).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import mpmath as mp

from .errors import DomainError

# log_3 N > 0 needs N > e^e ~ 15.15; log_4 N > 0 needs N > e^e^e ~ 3 814 279.1.
MIN_N_LOG3 = 16
MIN_N_LOG4 = 3_814_280


class SigmaMode(Enum):
    NEAR_HALF = "near-half"
    NEAR_ONE = "near-one"


def iterated_log(x: float, k: int, precision_bits: int = 53) -> float:
    """k-th iterated logarithm of x, computed at the configured precision.

    Raises DomainError when any intermediate (or the final) logarithm is <= 0,
    or when k is outside {1, 2, 3, 4}.
    """
    if k not in (1, 2, 3, 4):
        raise DomainError(f"iterated_log order k={k} not in {{1,2,3,4}}")
    if not x > 0:
        raise DomainError(f"iterated_log requires x > 0, got {x}")
    with mp.workprec(precision_bits + 10):
        y = mp.mpf(x)
        for step in range(k):
            if y <= 0:
                raise DomainError(
                    f"iterated_log({x}, {k}): intermediate log_{step} = {y} <= 0"
                )
            y = mp.log(y)
        if y <= 0:
            raise DomainError(f"iterated_log({x}, {k}) = {y} is not positive")
        return float(y)


def _logs123(n: float, precision_bits: int = 53) -> tuple[float, float, float]:
    """(log N, log_2 N, log_3 N) in one pass; requires N >= MIN_N_LOG3."""
    require_log3(n)
    with mp.workprec(precision_bits + 10):
        l1 = mp.log(mp.mpf(n))
        l2 = mp.log(l1)
        l3 = mp.log(l2)
        return float(l1), float(l2), float(l3)


def require_log3(n: float) -> None:
    if n < MIN_N_LOG3:
        raise DomainError(f"N={n} too small: log_3 N <= 0 for N < {MIN_N_LOG3}")


def require_log4(n: float) -> None:
    if n < MIN_N_LOG4:
        raise DomainError(f"N={n} too small: log_4 N <= 0 for N < {MIN_N_LOG4}")


@dataclass(frozen=True)
class ProgressionParams:
    """Grid step alpha, horizon N, derivative order j, distance A, placement."""

    alpha: float
    n_range: int
    j: int
    a_param: float
    sigma_mode: SigmaMode

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if self.n_range < MIN_N_LOG3:
            raise DomainError(f"n_range must be >= {MIN_N_LOG3}, got {self.n_range}")
        if self.j < 0:
            raise DomainError(f"j must be non-negative, got {self.j}")
        if not self.a_param > 0:
            raise DomainError(f"a_param must be positive, got {self.a_param}")
        # Validates the placement (raises for NearOne sigma outside (1/2, 1)).
        sigma_of(self)


@dataclass(frozen=True)
class EvalConfig:
    """Dirichlet truncation T, error slack epsilon, precision, cap exponent kappa."""

    truncation: int
    epsilon: float = 0.1
    precision_bits: int = 53
    kappa: float = 0.45

    def __post_init__(self):
        if self.truncation < 1:
            raise DomainError(f"truncation must be >= 1, got {self.truncation}")
        if not 0 < self.epsilon < 0.25:
            raise DomainError(f"epsilon must lie in (0, 1/4), got {self.epsilon}")
        if self.precision_bits < 53:
            raise DomainError(f"precision_bits must be >= 53, got {self.precision_bits}")
        if not 0 < self.kappa < 1:
            raise DomainError(f"kappa must lie in (0, 1), got {self.kappa}")


def sigma_of(params: ProgressionParams, precision_bits: int = 53) -> float:
    """Sigma placement for the given mode.

    NearHalf: 1/2 + A/log_2 N.  NearOne: 1 - A/log_2 N, rejected outside
    (1/2, 1).  At desk-scale N the NearHalf value may reach or exceed 1
    (A/log_2 N is not small); such placements are accepted since every
    downstream formula remains well defined for sigma > 1/2.
    """
    require_log3(params.n_range)
    with mp.workprec(precision_bits + 10):
        l2 = mp.log(mp.log(mp.mpf(params.n_range)))
        shift = mp.mpf(params.a_param) / l2
        if params.sigma_mode is SigmaMode.NEAR_HALF:
            sigma = float(mp.mpf(1) / 2 + shift)
            if sigma <= 0.5:
                raise DomainError(f"near-half sigma {sigma} <= 1/2")
            return sigma
        sigma = float(1 - shift)
        if not 0.5 < sigma < 1:
            raise DomainError(
                f"near-one sigma {sigma} outside (1/2, 1); "
                f"A={params.a_param} too large for N={params.n_range}"
            )
        return sigma


def sigma_in_strip(params: ProgressionParams) -> bool:
    """Whether the placement lies in the open strip (1/2, 1)."""
    return 0.5 < sigma_of(params) < 1


def log_ratio_target(n: int, precision_bits: int = 53) -> float:
    """sqrt(log N * log_3 N / log_2 N), the exponent scale of the near-half bound."""
    l1, l2, l3 = _logs123(n, precision_bits)
    return math.sqrt(l1 * l3 / l2)
