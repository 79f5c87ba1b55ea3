"""Near-1-line resonator: characteristic function of the smooth integers up
to floor(sqrt(N)), and the diagonal key ratio driving the (log_2 N)^(j+1)
growth.

The authoritative member set lives in an external construction; what is built
here is the smooth-number surrogate with configurable smoothness bound
x = logN*log2N (default) or logN*log2N/log3N, which preserves divisor closure
and the proof architecture.
"""

from __future__ import annotations

import hashlib
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError
from .params import _logs123

SMOOTHNESS_RULES = ("log1*log2", "log1*log2/log3")


@dataclass(frozen=True)
class ResonatorNearOne:
    """Ascending divisor-closed list of smooth integers up to floor(sqrt(N))."""

    n: int
    smoothness_bound: float
    members: tuple[int, ...]

    def __post_init__(self):
        if not self.members or self.members[0] != 1:
            raise DomainError("1 must be a member")
        if any(b <= a for a, b in zip(self.members, self.members[1:])):
            raise DomainError("members must be ascending and distinct")

    @property
    def limit(self) -> int:
        return math.floor(math.isqrt(self.n))

    @property
    def member_mask(self) -> np.ndarray:
        mask = np.zeros(self.limit + 1, dtype=bool)
        mask[list(self.members)] = True
        return mask


def smoothness_bound(n: int, rule: str | float = "log1*log2") -> float:
    """Resolve the smoothness-bound rule to a number."""
    if isinstance(rule, (int, float)):
        if rule < 2:
            raise DomainError(f"numeric smoothness bound must be >= 2, got {rule}")
        return float(rule)
    l1, l2, l3 = _logs123(n)
    if rule == "log1*log2":
        return l1 * l2
    if rule == "log1*log2/log3":
        return l1 * l2 / l3
    raise DomainError(f"unknown smoothness rule {rule!r}; use one of {SMOOTHNESS_RULES}")


def build_resonator_near_one(n: int, smoothness_rule: str | float = "log1*log2") -> ResonatorNearOne:
    """All x-smooth integers up to floor(sqrt(N)); divisor-closed by
    smoothness monotonicity.  Requires N >= 10^4."""
    if n < 10 ** 4:
        raise DomainError(f"near-one construction needs N >= 10^4, got {n}")
    x = smoothness_bound(n, smoothness_rule)
    limit = math.isqrt(n)
    gpf = np.ones(limit + 1, dtype=np.int64)
    for p in range(2, limit + 1):
        if gpf[p] == 1:                  # p prime: overwrite multiples ascending
            gpf[p:: p] = p
    members = tuple(int(m) for m in np.flatnonzero(gpf <= x) if m >= 1)
    return ResonatorNearOne(n=n, smoothness_bound=x, members=members)


def admissible_j_bound(n: int) -> float:
    """log_3 N / log_4 N, the derivative-order window of the growth claim.

    Meaningful only for N > e^e^e (log_4 N > 0); desk-scale N returns nan.
    The window is recorded for reports, never enforced.
    """
    from .params import MIN_N_LOG4, iterated_log
    if n < MIN_N_LOG4:
        return math.nan
    return iterated_log(n, 3) / iterated_log(n, 4)


def key_ratio(res: ResonatorNearOne, sigma: float, j: int) -> float:
    """sum over member pairs m*k = n <= sqrt(N) of k^(-sigma) (log k)^j,
    divided by the member count.

    By divisor closure, (m, n) both members with mk = n is the same as
    n member and k | n, so the double sum collapses to a divisor sweep.
    The growth claim behind this ratio carries the derivative-order window
    j <= log_3 N / log_4 N (see admissible_j_bound); at desk scale the window
    is recorded, not enforced.
    """
    if j < 0:
        raise DomainError(f"j must be non-negative, got {j}")
    limit = res.limit
    mask = res.member_mask
    total_parts = []
    for k in range(1, limit + 1):
        count = int(np.count_nonzero(mask[k:: k]))
        if count == 0:
            continue
        kw = k ** (-sigma) if j == 0 else k ** (-sigma) * math.log(k) ** j
        total_parts.append(kw * count)
    return math.fsum(total_parts) / len(res.members)


def key_ratio_scaled(res: ResonatorNearOne, sigma: float, j: int) -> float:
    """key_ratio normalized by (log_2 N)^(j+1), the predicted growth power."""
    _, l2, _ = _logs123(res.n)
    return key_ratio(res, sigma, j) / l2 ** (j + 1)


# ---------------------------------------------------------------------------
# serialization: `zres1 near-one N x` header, one member per line

def resonator_text_near_one(res: ResonatorNearOne) -> str:
    buf = io.StringIO()
    buf.write(f"zres1 near-one {res.n} {res.smoothness_bound!r}\n")
    for m in res.members:
        buf.write(f"{m}\n")
    return buf.getvalue()


def resonator_digest_near_one(res: ResonatorNearOne) -> str:
    return hashlib.sha256(resonator_text_near_one(res).encode()).hexdigest()


def write_resonator_near_one(res: ResonatorNearOne, path: str | Path) -> str:
    data = resonator_text_near_one(res)
    Path(path).write_text(data)
    return hashlib.sha256(data.encode()).hexdigest()


def read_resonator_near_one(path: str | Path) -> tuple[ResonatorNearOne, str]:
    data = Path(path).read_text()
    digest = hashlib.sha256(data.encode()).hexdigest()
    lines = data.strip().split("\n")
    head = lines[0].split()
    if head[:2] != ["zres1", "near-one"]:
        raise DomainError(f"not a zres1 near-one file: header {lines[0]!r}")
    n, x = int(head[2]), float(head[3])
    members = tuple(int(line) for line in lines[1:])
    return ResonatorNearOne(n=n, smoothness_bound=x, members=members), digest
