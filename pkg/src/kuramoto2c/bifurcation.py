"""The non-symmetric bifurcation line and the (K, L) phase diagram.

On the line where the non-symmetric pair branches off the symmetric state,
the symmetric level is

    r*(K, L) = sqrt(1 - 2K / (K^2 - L^2)),

and the line itself is the zero set of

    h(K, L) = V((K + L) r*(K, L)) - r*(K, L).

It exists only for L < 0 and can be parameterised by L, by K, or by the
level r* itself. Along the line r* increases and L* decreases with K.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .bessel import s_fn, v_fn, v_prime, v_upper_bound
from .coupling import check_psi
from .errors import ConvergenceError, DomainError
from .selfcons import symmetric_level

ROOT_TOL = 1e-12
CURVE_TOL = 1e-8
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class BifurcationPoint:
    K_star: float
    L: float
    r_star: float

    def residuals(self) -> tuple[float, float]:
        """Defects of the level formula and of the self-consistency condition."""
        level = abs(self.r_star - r_star(self.K_star, self.L))
        selfcons = abs(v_fn((self.K_star + self.L) * self.r_star) - self.r_star)
        return level, selfcons


class PhaseRegion(str, Enum):
    """U: only the unsynchronized state; S: plus the symmetric state;
    NS: plus a non-symmetric swap pair."""

    U = "U"
    S = "S"
    NS = "NS"


def r_star(K: float, L: float) -> float:
    """Symmetric level at a bifurcation point, ``sqrt(1 - 2K / (K^2 - L^2))``."""
    den = K * K - L * L
    if not den > 0:
        raise DomainError(f"need K^2 - L^2 > 0, got K={K!r}, L={L!r}")
    rad = 1.0 - 2.0 * K / den
    if rad < 0:
        if rad > -8 * _EPS:
            return 0.0
        raise DomainError(
            f"need K^2 - L^2 >= 2K (equivalently K >= 2/(1 - r^2)); got K={K!r}, L={L!r}"
        )
    return math.sqrt(rad)


def _h(K: float, L: float) -> float:
    r = r_star(K, L)
    return v_fn((K + L) * r) - r


def curve_defect(K: float, L: float) -> float:
    """``|h(K, L)|``; zero exactly on the bifurcation line."""
    return abs(_h(K, L))


def _radicand_zero_k(L: float) -> float:
    """Smallest K with a real r*, the root of K^2 - L^2 = 2K."""
    return 1.0 + math.sqrt(1.0 + L * L)


def _refine(f, lo, hi):
    return brentq(f, lo, hi, xtol=1e-15, rtol=4 * _EPS, maxiter=500)


@lru_cache(maxsize=4096)
def k_star_of_l(L: float) -> BifurcationPoint:
    """Bifurcation point K*(L) for a negative inter-community coupling."""
    L = float(L)
    if not (math.isfinite(L) and L < 0):
        raise DomainError(f"non-symmetric solutions need L < 0, got {L!r}")
    f = lambda K: _h(K, L)
    lo = _radicand_zero_k(L) * (1.0 + 1e-9)
    if f(lo) >= 0:
        raise ConvergenceError(f"h is not negative at the lower bracket K={lo} for L={L}")
    hi = 2.0 * lo
    while f(hi) <= 0:
        hi *= 2.0
        if hi > 1e12:
            raise ConvergenceError(f"no sign change of h on K in [{lo}, {hi}] for L={L}")
    K = _refine(f, lo, hi)
    if abs(f(K)) > ROOT_TOL:
        raise ConvergenceError(f"K*({L}) defect {abs(f(K)):.3e} exceeds {ROOT_TOL}")
    return BifurcationPoint(K, L, r_star(K, L))


@lru_cache(maxsize=4096)
def l_star_of_k(K: float) -> BifurcationPoint:
    """Bifurcation point L*(K); the root lies in (2 - K, 0)."""
    K = float(K)
    if not (math.isfinite(K) and K > 2):
        raise DomainError(f"the bifurcation line needs K > 2, got {K!r}")
    f = lambda L: _h(K, L)
    lo, hi = 2.0 - K, -1e-300
    if not (f(lo) < 0 < f(hi)):
        raise ConvergenceError(f"h does not change sign on L in [{lo}, {hi}] for K={K}")
    L = _refine(f, lo, hi)
    if abs(f(L)) > ROOT_TOL:
        raise ConvergenceError(f"L*({K}) defect {abs(f(L)):.3e} exceeds {ROOT_TOL}")
    return BifurcationPoint(K, L, r_star(K, L))


def f_r(K: float, r: float) -> float:
    """``K - sqrt(K^2 - 2K/(1 - r^2))``, the gain K + L on the line at level r.

    Evaluated as ``(2K/(1-r^2)) / (K + sqrt(...))`` to avoid cancellation.
    """
    c = 2.0 * K / (1.0 - r * r)
    rad = K * K - c
    if rad < 0:
        raise DomainError(f"K={K!r} is below 2/(1 - r^2) for r={r!r}")
    return c / (K + math.sqrt(rad))


def k_range_of_r(r: float) -> tuple[float, float]:
    """Interval of K that can carry a bifurcation point at level r."""
    lo = 2.0 / (1.0 - r * r)
    if r * r < 0.5:
        return lo, 2.0 * (1.0 - r * r) / (1.0 - 2.0 * r * r)
    return lo, math.inf


def k_star_of_r(r: float) -> tuple[float, float]:
    """The bifurcation point ``(K*, L)`` whose symmetric level is ``r``."""
    r = float(r)
    if not (0.0 < r < 1.0):
        raise DomainError(f"r must lie in (0, 1), got {r!r}")
    f = lambda K: v_fn(f_r(K, r) * r) - r
    lo, hi = k_range_of_r(r)
    lo = lo * (1.0 + 1e-13)
    if math.isinf(hi):
        hi = 2.0 * lo
        while np.sign(f(hi)) == np.sign(f(lo)):
            hi *= 2.0
            if hi > 1e15:
                raise ConvergenceError(f"no sign change for r={r} up to K={hi}")
    else:
        hi = hi * (1.0 - 1e-13)
    K = _refine(f, lo, hi)
    L = -math.sqrt(max(K * K - 2.0 * K / (1.0 - r * r), 0.0))
    return K, L


def r_star_asymptotic(K: float, regime: str) -> float:
    """Leading-order r*(K): ``sqrt((K-2)/2)`` near K = 2, ``1 - 1/(2 sqrt K)`` for large K."""
    if regime == "near_two":
        if not (2.0 < K <= 3.0):
            raise DomainError(f"near_two regime needs K in (2, 3], got {K!r}")
        return math.sqrt((K - 2.0) / 2.0)
    if regime == "large_K":
        if not K >= 10.0:
            raise DomainError(f"large_K regime needs K >= 10, got {K!r}")
        return 1.0 - 1.0 / (2.0 * math.sqrt(K))
    raise DomainError(f"unknown regime {regime!r}; use 'near_two' or 'large_K'")


def _l_of_kr(K: float, r: float) -> float:
    return -math.sqrt(max(K * K - 2.0 * K / (1.0 - r * r), 0.0))


def dr_star_dk(K: float, r_star_val: float) -> float:
    """Slope of r* along the bifurcation line at the curve point (K, r*)."""
    r = float(r_star_val)
    if not (0.0 < r < 1.0) or K <= 2:
        raise DomainError(f"(K={K!r}, r={r!r}) is not a curve point")
    L = _l_of_kr(K, r)
    defect = abs(v_fn((K + L) * r) - r)
    if defect > CURVE_TOL:
        raise DomainError(f"(K={K}, r={r}) is off the bifurcation line (defect {defect:.2e})")
    q = 1.0 - r * r
    den = 2.0 * K * (2.0 - r * r - K * q * q)
    if abs(den) < 1e-10:
        raise DomainError("denominator of dr*/dK vanishes")
    s = math.sqrt(K * K - 2.0 * K / q)
    return r * q * ((K - s) * q - 1.0) / den


def g_partials(K: float, L: float) -> tuple[float, float]:
    """Partial derivatives of ``g(K, L) = r* - V((K + L) r*)``.

    They use ``V' = (1 + S)/2 - V^2`` so only V and S = I2/I0 are needed.
    """
    r = r_star(K, L)
    if r == 0.0:
        raise DomainError("partials are singular where r* = 0")
    D = K * K - L * L
    x = (K + L) * r
    v = v_fn(x)
    c = v * v - 0.5 - 0.5 * s_fn(x)
    q = (4.0 * K * K / (D * D) - 2.0 / D) / (2.0 * r)
    p = -2.0 * K * L / (D * D * r)
    return q + ((K + L) * q + r) * c, p + ((K + L) * p + r) * c


def dl_star_dk(K: float, L_star_val: float) -> float:
    """Slope of L* along the bifurcation line, ``-g_K / g_L`` at a curve point."""
    L = float(L_star_val)
    defect = curve_defect(K, L)
    if defect > CURVE_TOL:
        raise DomainError(f"(K={K}, L={L}) is off the bifurcation line (defect {defect:.2e})")
    gk, gl = g_partials(K, L)
    if abs(gl) < 1e-14:
        raise DomainError("dg/dL vanishes; the slope is undefined")
    return -gk / gl


def r_star_lower_bound(K: float) -> float:
    """``sqrt(1 - (1 + sqrt(1 + 4K)) / (2K))``, the inversion of K < (2 - r^2)/(1 - r^2)^2."""
    return math.sqrt(1.0 - (1.0 + math.sqrt(1.0 + 4.0 * K)) / (2.0 * K))


def bound_check(p: BifurcationPoint) -> dict:
    """Which of the analytic bounds the curve point satisfies."""
    q = 1.0 - p.r_star ** 2
    return {
        "K_lower": 2.0 / q < p.K_star,
        "K_upper": p.K_star < (2.0 - p.r_star ** 2) / (q * q),
        "r_lower": p.r_star > r_star_lower_bound(p.K_star),
        "gain_above_two": p.K_star + p.L > 2.0,
    }


def bound_endpoint_k2(lo: float = 3.0, hi: float = 30.0) -> float:
    """K beyond which the level-2 upper bound on V certifies the lower bound on r*.

    Root of ``B2(f_{r-}(K) r-) - r-`` where ``r- = r_star_lower_bound(K)`` and
    ``B2`` is :func:`~kuramoto2c.bessel.v_upper_bound` at level 2.
    """
    def phi(K):
        rm = r_star_lower_bound(K)
        return v_upper_bound(f_r(K, rm) * rm, 2) - rm

    return _refine(phi, lo, hi)


def asymptote_roots(c_max: float = 1e6, samples: int = 4000) -> list[float]:
    """Solutions c >= 1 of ``sqrt(1 - 1/c) = V(c sqrt(1 - 1/c))``.

    A line ``L = -K + c`` would need such a c; c = 1 always solves it, and
    further roots are searched for by sign changes on a log grid up to c_max.
    """
    def phi(c):
        s = math.sqrt(1.0 - 1.0 / c)
        return s - v_fn(c * s)

    roots = [1.0]
    cs = 1.0 + np.logspace(-8, math.log10(c_max), samples)
    vals = [phi(c) for c in cs]
    for a, b, fa, fb in zip(cs[:-1], cs[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            roots.append(float(a))
        elif fa * fb < 0:
            roots.append(_refine(phi, a, b))
    return roots


def trace_curve(k_min: float = 2.001, k_max: float = 1000.0, n: int = 500) -> list[BifurcationPoint]:
    """Points of the line for K in [k_min, k_max], spaced geometrically in K - 2
    so they are densest near K = 2 where r* has infinite slope."""
    if not (2.0 < k_min < k_max):
        raise DomainError("need 2 < k_min < k_max")
    ks = 2.0 + np.geomspace(k_min - 2.0, k_max - 2.0, n)
    return [l_star_of_k(float(k)) for k in ks]


def bifurcation_line(l_min: float, l_max: float, points: int) -> list[tuple]:
    """Rows (K, L, r_star, dr_dK, dL_dK) at evenly spaced L in [l_min, l_max]."""
    if not (l_min <= l_max < 0):
        raise DomainError("need l_min <= l_max < 0")
    if points < 1:
        raise DomainError("points must be positive")
    rows = []
    for L in np.linspace(l_min, l_max, points):
        p = k_star_of_l(float(L))
        rows.append((p.K_star, p.L, p.r_star, dr_star_dk(p.K_star, p.r_star), dl_star_dk(p.K_star, p.L)))
    return rows


def classify_region(K: float, L: float, psi: float = 0.0) -> PhaseRegion:
    if not K > 0:
        raise DomainError(f"K must be positive, got {K!r}")
    lp = L if check_psi(psi) == 0.0 else -L
    if K + lp <= 2.0:
        return PhaseRegion.U
    if lp < 0 and K > k_star_of_l(lp).K_star:
        return PhaseRegion.NS
    return PhaseRegion.S


def scan_phase_diagram(K_range, L_range, resolution, psi: float = 0.0) -> list[tuple]:
    """Rows (K, L, region, r_sym, r_star) on a resolution x resolution grid.

    ``r_sym`` is the symmetric level (0 in region U); ``r_star`` is the level
    at the bifurcation point K*(L cos psi) in region NS and NaN elsewhere.
    """
    if isinstance(resolution, (int, np.integer)):
        nk = nl = int(resolution)
    else:
        nk, nl = (int(v) for v in resolution)
    if not (1 <= nk <= 2048 and 1 <= nl <= 2048):
        raise DomainError("resolution must be between 1 and 2048 per axis")
    check_psi(psi)
    ks = np.linspace(K_range[0], K_range[1], nk)
    ls = np.linspace(L_range[0], L_range[1], nl)
    rows = []
    for K in ks:
        for L in ls:
            K, L = float(K), float(L)
            region = classify_region(K, L, psi)
            lp = L if psi == 0.0 else -L
            r_sym = symmetric_level(K + lp)
            r_ns = k_star_of_l(lp).r_star if region is PhaseRegion.NS else math.nan
            rows.append((K, L, region.value, r_sym, r_ns))
    rows.sort(key=lambda row: (row[0], row[1]))
    return rows
