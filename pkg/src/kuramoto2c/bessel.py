"""Modified Bessel functions of orders 0-2 and the ratios built from them.

``V(x) = I1(x)/I0(x)`` is the response of a single noisy mean-field community
to an effective field ``x``; ``W(x) = 2V(x)/x`` and ``S(x) = I2(x)/I0(x)``
appear in the coupled self-consistency problem and in the derivative formulas
of the bifurcation line.

All functions accept scalars or numpy arrays and return the same shape.
Evaluation uses a power series for ``|x| < 15`` and the exponentially scaled
Hankel asymptotic expansion above, so ratios never overflow.
"""
import math

import numpy as np

from .errors import ConvergenceError, DomainError

SERIES_CUTOFF = 15.0
OVERFLOW_LIMIT = 700.0
_SUPPORTED_ORDERS = (0, 1, 2)
_SUPPORTED_LEVELS = (1, 2)

# Gauss-Legendre panel rule used by the concavity quadrature.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def _check_order(m):
    if isinstance(m, bool) or m not in _SUPPORTED_ORDERS:
        raise DomainError(f"unsupported Bessel order {m!r}; only 0, 1, 2 are implemented")
    return int(m)


def _as_finite(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {x!r}")
    return arr


def _wrap(arr, like):
    if np.ndim(like) == 0:
        return float(arr)
    return arr


def _series_scaled(m, ax):
    """exp(-ax) * I_m(ax) by the ascending series, for 0 <= ax < 15."""
    half = 0.5 * ax
    q = half * half
    term = half**m / math.factorial(m)
    total = term.copy() if isinstance(term, np.ndarray) else np.array(term)
    for k in range(1, 80):
        term = term * q / (k * (k + m))
        total = total + term
        if np.all(term <= 1e-17 * total):
            break
    return total * np.exp(-ax)


_HANKEL_TERMS = 48
_HANKEL_K = np.arange(1, _HANKEL_TERMS + 1, dtype=float)


def _asymptotic_scaled(m, ax):
    """exp(-ax) * I_m(ax) by the Hankel expansion, truncated at the smallest term."""
    mu = 4.0 * m * m
    coef = -(mu - (2.0 * _HANKEL_K - 1.0) ** 2) / (8.0 * _HANKEL_K)
    terms = np.cumprod(coef[None, :] / ax[:, None], axis=1)
    mag = np.abs(terms)
    # divergent series: keep terms only while their magnitude keeps shrinking
    shrinking = np.concatenate([mag[:, :1] < 1.0, mag[:, 1:] < mag[:, :-1]], axis=1)
    keep = np.logical_and.accumulate(shrinking, axis=1)
    total = 1.0 + np.sum(np.where(keep, terms, 0.0), axis=1)
    return total / np.sqrt(2.0 * np.pi * ax)


def scaled_bessel_i(m, x):
    """Return ``exp(-|x|) I_m(x)``; finite for every finite ``x``."""
    m = _check_order(m)
    arr = _as_finite(x)
    ax = np.atleast_1d(np.abs(arr))
    out = np.empty_like(ax)
    small = ax < SERIES_CUTOFF
    if np.any(small):
        out[small] = _series_scaled(m, ax[small])
    if np.any(~small):
        out[~small] = _asymptotic_scaled(m, ax[~small])
    if m % 2 == 1:
        out = np.where(np.atleast_1d(arr) < 0, -out, out)
    return _wrap(out.reshape(np.shape(arr)), x)


def bessel_i(m, x):
    """Modified Bessel function of the first kind ``I_m(x)`` for m in {0, 1, 2}.

    Equal to ``(1/2pi) * integral over the circle of cos(t)**m * exp(x cos t)``.
    ``|x|`` above 700 is rejected because ``exp(x)`` overflows; use
    :func:`scaled_bessel_i` there.
    """
    arr = _as_finite(x)
    if np.any(np.abs(arr) > OVERFLOW_LIMIT):
        raise DomainError(f"|x| must be <= {OVERFLOW_LIMIT} to avoid overflow")
    scaled = np.asarray(scaled_bessel_i(m, arr))
    return _wrap(scaled * np.exp(np.abs(arr)), x)


_RATIO_TERMS = 36
# coefficients of q**k in the series of I0 and 2 I1 / x, q = (x/2)**2
_C0 = np.array([1.0 / math.factorial(k) ** 2 for k in range(_RATIO_TERMS + 1)])
_C1 = np.array([1.0 / (math.factorial(k) * math.factorial(k + 1)) for k in range(_RATIO_TERMS + 1)])


def _ratio_small(ax):
    """I1/I0 for 0 <= ax < 15 from the two ascending series, by Horner's rule.

    36 terms reach relative 1e-17 at the cutoff; all terms are positive so
    there is no cancellation.
    """
    half = 0.5 * ax
    q = half * half
    s0 = np.full_like(q, _C0[-1])
    s1 = np.full_like(q, _C1[-1])
    for k in range(_RATIO_TERMS - 1, -1, -1):
        s0 *= q
        s0 += _C0[k]
        s1 *= q
        s1 += _C1[k]
    return half * s1 / s0


def _v_abs(ax):
    out = np.empty_like(ax)
    small = ax < SERIES_CUTOFF
    if np.any(small):
        out[small] = _ratio_small(ax[small])
    if np.any(~small):
        big = ax[~small]
        out[~small] = _asymptotic_scaled(1, big) / _asymptotic_scaled(0, big)
    return out


_C0_LIST = [float(c) for c in _C0]
_C1_LIST = [float(c) for c in _C1]


def _v_abs_scalar(ax: float) -> float:
    """Scalar twin of :func:`_v_abs` using plain floats (root finders call V one point at a time)."""
    if ax < SERIES_CUTOFF:
        half = 0.5 * ax
        q = half * half
        s0 = s1 = 0.0
        for k in range(_RATIO_TERMS, -1, -1):
            s0 = s0 * q + _C0_LIST[k]
            s1 = s1 * q + _C1_LIST[k]
        return half * s1 / s0
    big = np.array([ax])
    return float(_asymptotic_scaled(1, big)[0] / _asymptotic_scaled(0, big)[0])


def v_fn(x):
    """``V(x) = I1(x)/I0(x)``, odd in ``x`` and bounded by 1 in magnitude."""
    if isinstance(x, (float, int)) and not isinstance(x, bool):
        if not math.isfinite(x):
            raise DomainError(f"x must be finite, got {x!r}")
        return math.copysign(_v_abs_scalar(abs(float(x))), x)
    arr = _as_finite(x)
    flat = np.atleast_1d(arr)
    out = np.copysign(_v_abs(np.abs(flat)), flat)
    return _wrap(out.reshape(np.shape(arr)), x)


def v_and_prime(x):
    """Return ``(V(x), V'(x))`` for an array, sharing one evaluation of V."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    v = np.copysign(_v_abs(np.abs(arr)), arr)
    tiny = np.abs(arr) < 1e-4
    safe = np.where(tiny, 1.0, arr)
    x2 = arr * arr
    ratio = np.where(tiny, 0.5 - x2 / 16.0 + x2 * x2 / 96.0, v / safe)
    return v, 1.0 - ratio - v * v


def v_prime(x):
    """Derivative of V via the identity ``V' = 1 - V/x - V**2``; V'(0) = 1/2."""
    if isinstance(x, (float, int)) and not isinstance(x, bool):
        if not math.isfinite(x):
            raise DomainError(f"x must be finite, got {x!r}")
        x = float(x)
        if abs(x) < 1e-4:
            x2 = x * x
            ratio = 0.5 - x2 / 16.0 + x2 * x2 / 96.0
            v = x * ratio
        else:
            v = v_fn(x)
            ratio = v / x
        return 1.0 - ratio - v * v
    arr = _as_finite(x)
    _, dv = v_and_prime(arr)
    return _wrap(dv.reshape(np.shape(arr)), x)


def w_fn(x):
    """``W(x) = 2V(x)/x`` for ``x >= 0`` with ``W(0) = 1``."""
    arr = np.atleast_1d(_as_finite(x))
    if np.any(arr < 0):
        raise DomainError("W is defined for x >= 0 only")
    out = np.empty_like(arr)
    tiny = arr < 1e-4
    x2 = arr[tiny] ** 2
    out[tiny] = 1.0 - x2 / 8.0 + x2 * x2 / 48.0
    big = ~tiny
    out[big] = 2.0 * np.asarray(v_fn(arr[big])) / arr[big]
    return _wrap(out.reshape(np.shape(x)), x)


def s_fn(x):
    """``S(x) = I2(x)/I0(x)``; even in ``x`` and in [0, 1)."""
    arr = _as_finite(x)
    out = np.asarray(scaled_bessel_i(2, arr)) / np.asarray(scaled_bessel_i(0, arr))
    return _wrap(out, x)


def segura_lower(nu, x):
    """The first-level lower bound ``l_nu(x) = 1/(nu - 1/2 + sqrt((nu + 1/2)**2 + x**2))``.

    ``x * l_nu(x)`` bounds ``I_nu(x)/I_{nu-1}(x)`` from below.
    """
    x = np.asarray(x, dtype=float)
    out = 1.0 / (nu - 0.5 + np.sqrt((nu + 0.5) ** 2 + x * x))
    return _wrap(out, x)


def v_upper_bound(x, k):
    """Upper bound ``x * u_1^(k)(x)`` for V on ``x >= 0``.

    The family follows the three-term recurrence
    ``I0/I1 = 2/x + I2/I1``: ``u_1^(k) = 1/(2 + x**2 * l_2^(k-1))`` with the
    trivial lower bound ``l^(0) = 0`` and ``l^(1)`` from :func:`segura_lower`.
    Level 1 is therefore ``x/2`` and level 2 is
    ``x / (2 + x**2 / (3/2 + sqrt(25/4 + x**2)))``.
    """
    if isinstance(k, bool) or k not in _SUPPORTED_LEVELS:
        raise DomainError(f"bound level k={k!r} not supported; use 1 or 2")
    arr = _as_finite(x)
    if np.any(arr < 0):
        raise DomainError("upper bound is defined for x >= 0")
    if k == 1:
        out = 0.5 * arr
    else:
        out = arr / (2.0 + arr * arr * np.asarray(segura_lower(2, arr)))
    return _wrap(np.asarray(out, dtype=float), x)


def _panel_nodes(x, panels):
    """Nodes u = cos(phi) and weights exp(x (u - 1)) dphi on composite GL panels over [0, pi]."""
    edges = np.linspace(0.0, np.pi, panels + 1)
    half = 0.5 * np.diff(edges)
    phi = edges[:-1, None] + half[:, None] * (_GL_NODES[None, :] + 1.0)
    u = np.cos(phi).ravel()
    w = (np.exp(x * (np.cos(phi) - 1.0)) * _GL_WEIGHTS[None, :] * half[:, None]).ravel()
    return u, w


def _third_central_moment(x, panels):
    u, w = _panel_nodes(x, panels)
    w = w / np.sum(w)
    m = np.sum(w * u)
    return np.sum(w * (u - m) ** 3)


def concavity_certificate(x, tol=1e-10, max_panels=4096):
    """Return ``V''(x)`` as the third central moment ``E[(u - m)**3]``.

    The expectation is over ``u = cos(phi)`` with density proportional to
    ``exp(x cos phi)`` on ``phi`` in [0, pi] (the arcsine-weighted measure after
    substituting ``u = cos phi``), and ``m = V(x)`` is its mean. Composite
    Gauss-Legendre panels are doubled until the result stabilises to ``tol``.
    The value is strictly negative for ``x > 0``.
    """
    x = float(_as_finite(x))
    if x < 0:
        raise DomainError("concavity certificate is defined for x >= 0")
    if x == 0.0:
        return 0.0

    panels = 4
    prev = _third_central_moment(x, panels)
    while panels < max_panels:
        panels *= 2
        cur = _third_central_moment(x, panels)
        if abs(cur - prev) <= tol:
            return float(cur)
        prev = cur
    raise ConvergenceError(
        f"concavity quadrature at x={x} did not reach tol={tol}; "
        f"last change {abs(cur - prev):.3e} with {panels} panels"
    )
