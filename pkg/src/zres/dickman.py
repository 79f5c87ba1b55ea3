"""Dickman rho, the weighted moments D_j(A), and the closed-form constant lambda(A).

rho solves u*rho'(u) = -rho(u-1) with rho = 1 on [0, 1].  The table is built
by integrating the delay equation one unit piece at a time on a uniform grid
whose step divides 1, so every back-reference lands on an already-computed
piece and interpolation stencils never straddle the derivative kinks at
integer u.  Each piece is integrated in renormalized form (shape relative to
the piece's left endpoint, plus an accumulated log) because rho spans
hundreds of orders of magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, ExtensionRequiredError, TailNotCertifiedError

DEFAULT_STEP_DENOM = 1024
DEFAULT_U_MAX = 20
_U_MAX_CAP = 240
_MAX_A = 4.0
_STENCIL = 6

# 4-point Gauss-Legendre on (0, 1).
_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def _lagrange_weights(x: float, nodes: int = _STENCIL) -> np.ndarray:
    """Lagrange weights at integer nodes 0..nodes-1 evaluated at x."""
    w = np.empty(nodes)
    for o in range(nodes):
        num = 1.0
        den = 1.0
        for p in range(nodes):
            if p == o:
                continue
            num *= x - p
            den *= o - p
        w[o] = num / den
    return w


def _interp_segment(prev: np.ndarray, gx: float, p: int) -> np.ndarray:
    """Values of the previous-piece array at the offsets (k + gx)/p, k = 0..p-1."""
    out = np.empty(p)
    bulk_w = _lagrange_weights(2.0 + gx)
    idx = np.arange(2, p - 2)
    acc = np.zeros(p - 4)
    for o in range(_STENCIL):
        acc += bulk_w[o] * prev[idx - 2 + o]
    out[2:-2] = acc
    for k in (0, 1, p - 2, p - 1):
        lo = min(max(k - 2, 0), p - _STENCIL + 1)
        w = _lagrange_weights(k + gx - lo)
        out[k] = float(np.dot(w, prev[lo: lo + _STENCIL]))
    return out


@dataclass(frozen=True)
class DickmanTable:
    """rho(u) tabulated at u = 0, h, 2h, ..., u_max with 1/h an integer.

    `values` holds rho itself (underflowing to 0 only far beyond the default
    range); `log_values` is the primary representation.
    """

    step: float
    u_max: int
    values: np.ndarray
    log_values: np.ndarray

    def __post_init__(self):
        if self.u_max < 10:
            raise DomainError(f"u_max must be >= 10, got {self.u_max}")
        if len(self.values) != self.u_max * round(1.0 / self.step) + 1:
            raise DomainError("table length inconsistent with step and u_max")

    @property
    def cells_per_unit(self) -> int:
        return round(1.0 / self.step)

    def interpolate_log(self, u: float) -> float:
        """log rho(u) by 6-point interpolation clamped to the smooth unit piece."""
        if u < 0:
            raise DomainError(f"rho is defined for u >= 0, got {u}")
        if u > self.u_max:
            raise ExtensionRequiredError(
                f"u={u} beyond tabulated u_max={self.u_max}; build a larger table"
            )
        if u <= 1.0:
            return 0.0
        p = self.cells_per_unit
        piece = min(int(u), self.u_max - 1)
        local = (u - piece) * p            # in [0, p]
        k = int(local)
        lo = min(max(k - 2, 0), p - _STENCIL + 1)
        w = _lagrange_weights(local - lo)
        base = piece * p + lo
        return float(np.dot(w, self.log_values[base: base + _STENCIL]))

    def interpolate(self, u: float) -> float:
        return math.exp(self.interpolate_log(u))


def _panel_integrals(nodes: np.ndarray, p: int) -> np.ndarray:
    """Per-cell Gauss-Legendre integrals of the tabulated function (step 1/p)."""
    acc = np.zeros(p)
    for gx, gw in zip(_GL_X, _GL_W):
        acc += gw * _interp_segment(nodes, gx, p)
    return acc / p


@lru_cache(maxsize=8)
def build_table(step_denom: int = DEFAULT_STEP_DENOM, u_max: int = DEFAULT_U_MAX) -> DickmanTable:
    """Tabulate rho on [0, u_max] with step 1/step_denom.

    Works piece by piece with the equivalent Volterra identity
    u*rho(u) = integral of rho over [u-1, u], whose right side is a positive
    sum (no cancellation, so the relative error does not amplify as rho
    decays).  Each piece is solved to fixed point in renormalized form
    sigma = rho/rho(piece); the 1/(piece+1) contraction of the identity makes
    the sweeps converge geometrically.
    """
    if u_max < 10 or u_max > _U_MAX_CAP:
        raise DomainError(f"u_max must lie in [10, {_U_MAX_CAP}], got {u_max}")
    p = step_denom
    h = 1.0 / p
    log_values = np.zeros(u_max * p + 1)
    u_nodes_base = np.arange(p + 1) * h
    prev_shape = np.ones(p + 1)      # piece 0
    log_left = 0.0                   # log rho(1) = 0
    for piece in range(1, u_max):
        ratio = 1.0 / prev_shape[-1]  # rho(piece-1)/rho(piece); 1 for piece 1
        back = _panel_integrals(prev_shape, p)[::-1]
        t_tail = np.concatenate(([0.0], np.cumsum(back)))[::-1] * ratio
        u_nodes = piece + u_nodes_base
        sigma = np.ones(p + 1)
        for sweep in range(200):
            s_fwd = np.concatenate(([0.0], np.cumsum(_panel_integrals(sigma, p))))
            new = (t_tail + s_fwd) / u_nodes
            new[0] = 1.0
            delta = float(np.max(np.abs(new - sigma)))
            sigma = new
            if delta < 1e-16:
                break
        else:
            raise DomainError(f"rho fixed point did not converge in piece {piece}")
        if sigma[-1] <= 0:
            raise DomainError(f"rho integration lost positivity in piece {piece}")
        log_values[piece * p: (piece + 1) * p + 1] = log_left + np.log(sigma)
        log_left += math.log(sigma[-1])
        prev_shape = sigma
    with np.errstate(under="ignore"):
        values = np.exp(log_values)
    values[: p + 1] = 1.0
    return DickmanTable(step=h, u_max=u_max, values=values, log_values=log_values)


def dickman_rho(u: float, table_accuracy: float = 1e-12, u_max: int = DEFAULT_U_MAX) -> float:
    """rho(u), absolute error below table_accuracy for the default grid.

    Raises ExtensionRequiredError for u beyond the tabulated range.
    """
    denom = DEFAULT_STEP_DENOM
    if table_accuracy < 1e-13:
        denom = 2 * DEFAULT_STEP_DENOM
    table = build_table(denom, u_max)
    return table.interpolate(u)


def _tail_bound(j: int, a: float, table: DickmanTable) -> float:
    """Rigorous bound on the integral of e^(Au) u^j rho(u) over [u_max, inf).

    Uses rho(u) <= rho(U) / ((U+1)...(U+k)) on [U+k, U+k+1], a consequence of
    u*rho(u) = integral of rho over [u-1, u] plus monotonicity.
    """
    big_u = float(table.u_max)
    log_term = a * (big_u + 1.0) + j * math.log(big_u + 1.0) + float(table.log_values[-1])
    total = 0.0
    for k in range(400):
        term = math.exp(log_term) if log_term > -745 else 0.0
        total += term
        ratio = math.exp(a) * ((big_u + k + 2.0) / (big_u + k + 1.0)) ** j / (big_u + k + 1.0)
        if ratio < 0.5:
            return total + term * ratio / (1.0 - ratio)
        log_term += a + j * math.log((big_u + k + 2.0) / (big_u + k + 1.0)) \
            - math.log(big_u + k + 1.0)
    return math.inf


def _quad_over_table(j: int, a: float, table: DickmanTable) -> float:
    """Gauss-Legendre integral of e^(Au) u^j rho(u) over [0, u_max], cell by cell."""
    p = table.cells_per_unit
    h = table.step
    pieces = []
    for gx, gw in zip(_GL_X, _GL_W):
        log_rho = np.empty(table.u_max * p)
        log_rho[:p] = 0.0
        for piece in range(1, table.u_max):
            prev = table.log_values[piece * p: (piece + 1) * p + 1]
            log_rho[piece * p: (piece + 1) * p] = _interp_segment(prev, gx, p)
        u = (np.arange(table.u_max * p) + gx) * h
        expo = a * u + log_rho if j == 0 else a * u + j * np.log(np.maximum(u, 1e-300)) + log_rho
        with np.errstate(under="ignore"):
            integrand = np.exp(expo)
        pieces.append(gw * float(integrand.sum()))
    return h * math.fsum(pieces)


def d_j_of_A(j: int, a: float, accuracy: float = 1e-9,
             step_denom: int = DEFAULT_STEP_DENOM) -> float:
    """D_j(A) = integral of e^(Au) u^j rho(u) du over [0, inf).

    Accepts A <= 4; the integration range is extended until the certified
    factorial-decay tail drops below accuracy (TailNotCertifiedError if the
    table cap is hit first).
    """
    if j < 0:
        raise DomainError(f"j must be non-negative, got {j}")
    if a < 0:
        raise DomainError(f"A must be non-negative, got {a}")
    if a > _MAX_A:
        raise DomainError(f"A={a} beyond supported range (A <= {_MAX_A})")
    u_max = DEFAULT_U_MAX
    while True:
        table = build_table(step_denom, u_max)
        tail = _tail_bound(j, a, table)
        if tail <= 0.5 * accuracy:
            break
        if u_max >= _U_MAX_CAP:
            raise TailNotCertifiedError(
                f"tail bound {tail:.3e} above accuracy {accuracy:.3e} at u_max={u_max}"
            )
        u_max = min(u_max * 2, _U_MAX_CAP)
    return _quad_over_table(j, a, table) + 0.5 * tail


def y_j(j: int, accuracy: float = 1e-9) -> float:
    """Y_j = integral of u^j rho(u) du; equals D_j(0)."""
    return d_j_of_A(j, 0.0, accuracy)


def lambda_of_A(a: float) -> float:
    """Leading near-half constant 1/(sqrt(2) (e-1) e^A)."""
    if a < 0:
        raise DomainError(f"A must be non-negative, got {a}")
    return 1.0 / (math.sqrt(2.0) * (math.e - 1.0) * math.exp(a))
