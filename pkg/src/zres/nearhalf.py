"""Near-critical-line resonator: prime band, multiplicative weight, pruned
divisor-closed support, geometric-block representatives, and the band product
bound.

Integers in the support are kept in factored-log form throughout; products of
band primes overflow any fixed width, and only log m and factor sets are ever
needed.
"""

from __future__ import annotations

import hashlib
import io
import math
import random
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import mpmath as mp
import numpy as np

from .errors import BudgetExceededError, DomainError, EmptyBandError
from .params import _logs123, require_log3, sigma_of  # noqa: F401 (sigma_of re-exported)

_E = math.e


@dataclass(frozen=True)
class ResonatorConfig:
    """Band exponent gamma, pruning strength b, plus delta/kappa and budget."""

    gamma: float = 0.45
    b: float = 1.8
    delta: float = 0.9
    kappa: float = 0.45
    max_support: int = 200_000

    def __post_init__(self):
        if not 0 < self.gamma < 1.0 / (_E - 1.0):
            raise DomainError(f"gamma must lie in (0, 1/(e-1)), got {self.gamma}")
        if not _E - 1.0 < self.b < 1.0 / self.gamma:
            raise DomainError(f"b must lie in (e-1, 1/gamma), got {self.b}")
        if not 0 < self.delta < 1:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")
        if not 0 < self.kappa < 1:
            raise DomainError(f"kappa must lie in (0, 1), got {self.kappa}")
        if self.max_support < 2:
            raise DomainError(f"max_support must be >= 2, got {self.max_support}")


@dataclass(frozen=True)
class PrimeBand:
    """Primes p with e*logN*log2N < p <= exp((log2N)^gamma)*logN*log2N,
    classified into shells (e^k*logN*log2N, e^(k+1)*logN*log2N]."""

    n: int
    gamma: float
    primes: tuple[int, ...]
    shell_index: dict[int, int]
    lower: float
    upper: float
    log1: float
    log2: float
    log3: float

    @property
    def shell_count(self) -> int:
        return math.floor(self.log2 ** self.gamma)

    def shells(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for p in self.primes:
            out.setdefault(self.shell_index[p], []).append(p)
        return out


def _sieve(limit: int) -> np.ndarray:
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    is_p = np.ones(limit + 1, dtype=bool)
    is_p[:2] = False
    for q in range(2, int(limit ** 0.5) + 1):
        if is_p[q]:
            is_p[q * q:: q] = False
    return np.flatnonzero(is_p).astype(np.int64)


def build_prime_band(n: int, gamma: float, precision_bits: int = 53) -> PrimeBand:
    """Sieve the band and classify every prime into its shell.

    Raises EmptyBandError when exp((log2 N)^gamma) <= e, i.e. the upper bound
    does not exceed the lower one.
    """
    require_log3(n)
    if not 0 < gamma < 1.0 / (_E - 1.0):
        raise DomainError(f"gamma must lie in (0, 1/(e-1)), got {gamma}")
    with mp.workprec(precision_bits + 10):
        l1 = mp.log(mp.mpf(n))
        l2 = mp.log(l1)
        l3 = mp.log(l2)
        scale = l1 * l2
        stretch = mp.exp(l2 ** gamma)
        if stretch <= mp.e:
            raise EmptyBandError(
                f"exp((log2 N)^gamma) = {float(stretch):.6f} <= e for N={n}, gamma={gamma}"
            )
        lower = mp.e * scale
        upper = stretch * scale
        if upper >= 2 ** 63:
            raise DomainError(f"band upper bound {float(upper):.3e} exceeds 2^63")
        p_min = int(mp.floor(lower)) + 1
        p_max = int(mp.floor(upper))
        lower_f, upper_f = float(lower), float(upper)
        l1f, l2f, l3f = float(l1), float(l2), float(l3)

    primes = [int(p) for p in _sieve(p_max) if p >= p_min]
    if not primes:
        raise EmptyBandError(
            f"no primes in ({lower_f:.3f}, {upper_f:.3f}] for N={n}, gamma={gamma}; "
            "gamma too small for this N"
        )
    shell_index: dict[int, int] = {}
    for p in primes:
        k = math.ceil(math.log(p / (l1f * l2f))) - 1
        # re-check the defining inequality against float boundary error
        while not (_E ** k * l1f * l2f < p):
            k -= 1
        while not (p <= _E ** (k + 1) * l1f * l2f):
            k += 1
        if k < 1:
            raise DomainError(f"prime {p} below the k=1 shell; band bounds inconsistent")
        shell_index[p] = k
    return PrimeBand(n=n, gamma=gamma, primes=tuple(primes), shell_index=shell_index,
                     lower=lower_f, upper=upper_f, log1=l1f, log2=l2f, log3=l3f)


def weight_f(p: int, band: PrimeBand, sigma: float) -> float:
    """Multiplicative weight at a band prime; 0 off the band.

    f(p) = (logN)^(1-sigma) (log2N)^sigma / (log3N)^(1-sigma)
           * 1 / (p^sigma (log p - log2N - log3N)).
    """
    if p not in band.shell_index:
        return 0.0
    with mp.workprec(70):
        l1, l2, l3 = mp.mpf(band.log1), mp.mpf(band.log2), mp.mpf(band.log3)
        s = mp.mpf(sigma)
        pref = l1 ** (1 - s) * l2 ** s / l3 ** (1 - s)
        den = mp.mpf(p) ** s * (mp.log(p) - l2 - l3)
        return float(pref / den)


def delta_k(k: int, n: int, sigma: float, b: float) -> float:
    """Shell-k pruning threshold b (logN)^(2-2sigma) / (k^2 (log3N)^(2-2sigma))."""
    if k < 1:
        raise DomainError(f"shell index must be >= 1, got {k}")
    l1, _, l3 = _logs123(n)
    return b * l1 ** (2 - 2 * sigma) / (k * k * l3 ** (2 - 2 * sigma))


def shell_caps(band: PrimeBand, sigma: float, b: float) -> dict[int, int]:
    """Max factor count per shell: largest integer strictly below Delta_k."""
    return {k: math.ceil(delta_k(k, band.n, sigma, b)) - 1
            for k in range(1, band.shell_count + 1)}


@dataclass(frozen=True)
class FactoredInteger:
    """Square-free product of band primes, stored as the factor set and log."""

    prime_factors: tuple[int, ...]
    log_value: float = field(compare=False)

    @classmethod
    def from_primes(cls, primes) -> "FactoredInteger":
        ps = tuple(sorted(primes))
        if len(set(ps)) != len(ps):
            raise DomainError(f"factors must be distinct primes: {ps}")
        return cls(ps, math.fsum(math.log(p) for p in ps))

    @classmethod
    def one(cls) -> "FactoredInteger":
        return cls((), 0.0)

    def divisors(self):
        """All 2^omega divisors as FactoredIntegers."""
        for r in range(len(self.prime_factors) + 1):
            for sub in combinations(self.prime_factors, r):
                yield FactoredInteger.from_primes(sub)

    def __hash__(self):
        return hash(self.prime_factors)


def in_pruned_support(m: FactoredInteger, band: PrimeBand, sigma: float, b: float) -> bool:
    """Whether m survives every shell cap (strictly fewer than Delta_k factors
    in shell k).  Divisor-closed: subsets of an accepted factor set pass too."""
    counts: dict[int, int] = {}
    for p in m.prime_factors:
        k = band.shell_index.get(p)
        if k is None:
            raise DomainError(f"factor {p} outside the band")
        counts[k] = counts.get(k, 0) + 1
    caps = shell_caps(band, sigma, b)
    return all(c <= caps[k] for k, c in counts.items())


def _support_size(band: PrimeBand, caps: dict[int, int]) -> int:
    """Number of shell-capped square-free products, by per-shell binomials."""
    total = 1
    for k, ps in band.shells().items():
        cap = min(caps.get(k, 0), len(ps))
        total *= sum(math.comb(len(ps), c) for c in range(cap + 1))
    return total


def _enumerate_pruned(band: PrimeBand, sigma: float, b: float):
    """DFS over shell-capped square-free products; yields (factors, f_value)."""
    caps = shell_caps(band, sigma, b)
    primes = band.primes
    fvals = [weight_f(p, band, sigma) for p in primes]
    shells = [band.shell_index[p] for p in primes]
    counts: dict[int, int] = {}
    stack: list[int] = []

    def rec(i: int, fprod: float):
        yield tuple(stack), fprod
        for nxt in range(i, len(primes)):
            k = shells[nxt]
            if counts.get(k, 0) + 1 > caps.get(k, 0):
                continue
            counts[k] = counts.get(k, 0) + 1
            stack.append(primes[nxt])
            yield from rec(nxt + 1, fprod * fvals[nxt])
            stack.pop()
            counts[k] -= 1

    yield from rec(0, 1.0)


@dataclass(frozen=True)
class ResonatorNearHalf:
    """Block representatives m_l with nonnegative weights r(m_l)."""

    n: int
    t_len: int
    gamma: float
    b: float
    kappa: float
    seed: int
    block_ratio: float
    support: tuple[tuple[FactoredInteger, float], ...]
    mass_total: float          # sum of f(n)^2 over the enumerated support
    capped: bool
    exhaustive: bool

    def __post_init__(self):
        cap = math.floor(self.t_len ** self.kappa)
        if len(self.support) > cap:
            raise DomainError(f"|support|={len(self.support)} exceeds floor(T^kappa)={cap}")
        if any(r < 0 for _, r in self.support):
            raise DomainError("resonator weights must be nonnegative")

    @property
    def log_values(self) -> np.ndarray:
        return np.array([m.log_value for m, _ in self.support])

    @property
    def weights(self) -> np.ndarray:
        return np.array([r for _, r in self.support])

    @property
    def sum_r_squared(self) -> float:
        return float(np.dot(self.weights, self.weights))


def build_resonator_near_half(n: int, t_len: int, config: ResonatorConfig,
                              sigma: float,
                              band: PrimeBand | None = None,
                              seed: int = 0,
                              allow_sampling: bool = True) -> ResonatorNearHalf:
    """Enumerate the pruned support, bin it into geometric blocks of ratio
    1 + logT/T, take each block's minimum as representative, and weight it by
    the root f^2-mass of the three-block neighborhood.

    When the shell-capped support exceeds config.max_support the band is
    sampled instead (each prime kept with probability f^2/(1+f^2)), and the
    resonator is flagged non-exhaustive; with allow_sampling=False this raises
    BudgetExceededError.  The cardinality cap floor(T^kappa) keeps the
    heaviest representatives.
    """
    if band is None:
        band = build_prime_band(n, config.gamma, 60)
    caps = shell_caps(band, sigma, config.b)
    exhaustive = True
    members: list[tuple[tuple[int, ...], float]] = []
    if _support_size(band, caps) <= config.max_support:
        members = list(_enumerate_pruned(band, sigma, config.b))
    else:
        if not allow_sampling:
            raise BudgetExceededError(
                f"pruned support exceeds max_support={config.max_support}"
            )
        exhaustive = False
        rng = random.Random(seed)
        fvals = {p: weight_f(p, band, sigma) for p in band.primes}
        incl = {p: fvals[p] ** 2 / (1 + fvals[p] ** 2) for p in band.primes}
        seen: set[tuple[int, ...]] = {()}
        members = [((), 1.0)]
        tries = 0
        while len(members) < config.max_support and tries < 50 * config.max_support:
            tries += 1
            factors = tuple(p for p in band.primes if rng.random() < incl[p])
            if factors in seen:
                continue
            counts: dict[int, int] = {}
            ok = True
            for p in factors:
                k = band.shell_index[p]
                counts[k] = counts.get(k, 0) + 1
                if counts[k] > caps.get(k, 0):
                    ok = False
                    break
            if not ok:
                continue
            seen.add(factors)
            fprod = math.prod(fvals[p] for p in factors)
            members.append((factors, fprod))
        members.sort(key=lambda mf: (math.fsum(math.log(p) for p in mf[0]), mf[0]))

    block_ratio = 1.0 + math.log(t_len) / t_len
    lblock = math.log1p(math.log(t_len) / t_len)
    blocks: dict[int, list[tuple[float, tuple[int, ...], float]]] = {}
    mass: dict[int, float] = {}
    for factors, fprod in members:
        logm = math.fsum(math.log(p) for p in factors)
        l = int(math.floor(logm / lblock)) if logm > 0 else 0
        blocks.setdefault(l, []).append((logm, factors, fprod))
        mass[l] = mass.get(l, 0.0) + fprod * fprod
    mass_total = math.fsum(mass.values())

    reps: list[tuple[FactoredInteger, float]] = []
    for l, items in blocks.items():
        logm, factors, _ = min(items, key=lambda it: (it[0], it[1]))
        r2 = mass.get(l - 1, 0.0) + mass[l] + mass.get(l + 1, 0.0)
        reps.append((FactoredInteger.from_primes(factors), math.sqrt(r2)))

    cap = math.floor(t_len ** config.kappa)
    capped = len(reps) > cap
    if capped:
        reps.sort(key=lambda mr: (-mr[1] * mr[1], mr[0].log_value))
        reps = reps[:cap]
    reps.sort(key=lambda mr: (mr[0].log_value, mr[0].prime_factors))
    return ResonatorNearHalf(n=n, t_len=t_len, gamma=config.gamma, b=config.b,
                             kappa=config.kappa, seed=seed, block_ratio=block_ratio,
                             support=tuple(reps), mass_total=mass_total,
                             capped=capped, exhaustive=exhaustive)


def eval_resonator(res: ResonatorNearHalf, t: float) -> complex:
    """R(t) = sum of r(m_l) e^(-i t log m_l); |R(t)| <= R(0)."""
    phases = np.exp(-1j * t * res.log_values)
    w = res.weights
    return complex(np.dot(w, phases.real), np.dot(w, phases.imag))


def eval_resonator_batch(res: ResonatorNearHalf, ts: np.ndarray) -> np.ndarray:
    """R over an array of ordinates, chunked outer product."""
    ts = np.asarray(ts, dtype=np.float64)
    logm = res.log_values
    w = res.weights
    out = np.empty(ts.size, dtype=np.complex128)
    chunk = max(1, 8_000_000 // max(1, logm.size))
    for i in range(0, ts.size, chunk):
        part = ts[i: i + chunk, None] * logm[None, :]
        out[i: i + chunk] = np.exp(-1j * part) @ w
    return out


def compute_A_N(band: PrimeBand, sigma: float, reverse: bool = False) -> float:
    """Band product of (1 + f(p)^2 + f(p) p^(-sigma)) / (1 + f(p)^2)."""
    primes = band.primes[::-1] if reverse else band.primes
    total = 1.0
    for p in primes:
        f = weight_f(p, band, sigma)
        total *= (1.0 + f * f + f * p ** (-sigma)) / (1.0 + f * f)
    return total


def prop31_lower_bound(n: int, sigma: float, gamma: float, delta: float) -> float:
    """Leading-order band-product lower bound
    exp(delta*gamma*(logN)^(1-sigma)(log3N)^sigma/(log2N)^sigma); the
    vanishing correction in the exponent is dropped."""
    require_log3(n)
    with mp.workprec(70):
        l1 = mp.log(mp.mpf(n))
        l2 = mp.log(l1)
        l3 = mp.log(l2)
        s = mp.mpf(sigma)
        expo = mp.mpf(delta) * mp.mpf(gamma) * l1 ** (1 - s) * l3 ** s / l2 ** s
        return float(mp.exp(expo))


def off_support_ratio(band: PrimeBand, sigma: float, b: float) -> float:
    """Share of the correlation sum carried by integers outside the pruned
    support, normalized by the band product: the fraction the pruning
    discards.  Computed in closed form as 1 - (pruned part)/(full product)."""
    full = 1.0
    for p in band.primes:
        f = weight_f(p, band, sigma)
        full *= 1.0 + f * f + f * p ** (-sigma)
    pruned = 0.0
    for factors, fprod in _enumerate_pruned(band, sigma, b):
        term = fprod
        for p in factors:
            term *= p ** (-sigma) * (1.0 + weight_f(p, band, sigma) * p ** sigma)
        pruned += term
    return 1.0 - pruned / full


def small_divisor_ratio(band: PrimeBand, sigma: float, b: float, eps: float = 0.05) -> float:
    """Share of the correlation sum from divisor pairs with d <= n/N^eps,
    normalized by the band product.

    Each band prime is out of n (weight 1), in both n and d (weight f^2), or
    in n only (weight f p^(-sigma), adding log p to the n/d gap); pairs count
    when the gap reaches eps*logN.  Subtrees whose gap is already past the
    threshold close in product form.
    """
    primes = band.primes
    fv = [weight_f(p, band, sigma) for p in primes]
    gap_needed = eps * band.log1
    logs = [math.log(p) for p in primes]
    full_tail = [1.0] * (len(primes) + 1)
    for i in range(len(primes) - 1, -1, -1):
        f = fv[i]
        full_tail[i] = full_tail[i + 1] * (1.0 + f * f + f * primes[i] ** (-sigma))

    def rec(i: int, gap: float, weight: float) -> float:
        if gap >= gap_needed:
            return weight * full_tail[i]
        if i == len(primes):
            return 0.0
        f = fv[i]
        out = rec(i + 1, gap, weight)
        out += rec(i + 1, gap, weight * f * f)
        out += rec(i + 1, gap + logs[i], weight * f * primes[i] ** (-sigma))
        return out

    return rec(0, 0.0, 1.0) / full_tail[0]


# ---------------------------------------------------------------------------
# serialization: versioned text format, `zres1 near-half ...` header

def resonator_text(res: ResonatorNearHalf) -> str:
    """The versioned file content for a near-half resonator."""
    buf = io.StringIO()
    buf.write(f"zres1 near-half {res.n} {res.gamma!r} {res.b!r} {res.kappa!r} "
              f"{res.t_len} {res.seed}\n")
    for m, r in res.support:
        factors = ",".join(str(p) for p in m.prime_factors)
        if factors:
            buf.write(f"{m.log_value!r} {r!r} {factors}\n")
        else:
            buf.write(f"{m.log_value!r} {r!r}\n")
    return buf.getvalue()


def resonator_digest(res: ResonatorNearHalf) -> str:
    return hashlib.sha256(resonator_text(res).encode()).hexdigest()


def write_resonator(res: ResonatorNearHalf, path: str | Path) -> str:
    """Write the versioned resonator file; returns its content digest."""
    data = resonator_text(res)
    Path(path).write_text(data)
    return hashlib.sha256(data.encode()).hexdigest()


def read_resonator(path: str | Path) -> tuple[ResonatorNearHalf, str]:
    """Parse a near-half resonator file; returns (resonator, digest)."""
    data = Path(path).read_text()
    digest = hashlib.sha256(data.encode()).hexdigest()
    lines = data.strip().split("\n")
    head = lines[0].split()
    if head[:2] != ["zres1", "near-half"]:
        raise DomainError(f"not a zres1 near-half file: header {lines[0]!r}")
    n, gamma, b, kappa, t_len, seed = (int(head[2]), float(head[3]), float(head[4]),
                                       float(head[5]), int(head[6]), int(head[7]))
    support = []
    for line in lines[1:]:
        parts = line.split()
        logm, r = float(parts[0]), float(parts[1])
        factors = tuple(int(x) for x in parts[2].split(",")) if len(parts) > 2 else ()
        m = FactoredInteger.from_primes(factors)
        if abs(m.log_value - logm) > 1e-9 * max(1.0, abs(logm)):
            raise DomainError(f"stored log {logm} disagrees with factors {factors}")
        support.append((m, r))
    res = ResonatorNearHalf(n=n, t_len=t_len, gamma=gamma, b=b, kappa=kappa,
                            seed=seed, block_ratio=1.0 + math.log(t_len) / t_len,
                            support=tuple(support),
                            mass_total=math.nan, capped=False, exhaustive=True)
    return res, digest
