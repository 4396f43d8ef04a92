"""Stationary theory with natural-frequency disorder.

Natural frequencies follow a symmetric law ``mu`` represented by quadrature
nodes. With ``alpha1 = alpha2 = 1/2`` and ``D = 1`` the stationary density of
community 1 at frequency ``omega`` solves

    0 = p''/2 - ((omega + G'(theta)/2) p)',
    G(theta) = K r1 cos(psi1 - theta) + L r2 cos(psi2 - theta),

(community 2 swaps the roles of r1/psi1 and r2/psi2). Its periodic solution is

    p(theta) ~ exp(G(theta)) * int_0^{2 pi} exp(-2 omega s - G(theta + s)) ds,

which reduces to ``exp(G) / int exp(G)`` at ``omega = 0``. The inner integral
is a circular convolution and is evaluated exactly in Fourier space.

The incoherent state loses stability where ``(K + L cos psi) chi = 1`` with
``chi = int mu(d omega) / (2 (1 + 4 omega^2))``. That this is the critical
line for every symmetric unimodal ``mu`` is a conjecture; results that rely
on it carry :data:`CONJECTURE_FLAG`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .coupling import SymmetricCoupling
from .errors import ConvergenceError, DomainError

THETA_POINTS = 2048
SELF_CHECK_TOL = 1e-9
GAUSSIAN_HALF_WIDTH = 10.0
CONJECTURE_FLAG = "critical-line-with-disorder-is-conjectural"

KINDS = ("point_mass_zero", "bimodal", "discretized_gaussian")


@dataclass(frozen=True)
class DisorderSpec:
    """A symmetric natural-frequency law as nodes and weights."""

    kind: str
    omegas: tuple
    weights: tuple
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown disorder kind {self.kind!r}; expected one of {KINDS}")
        w = np.asarray(self.weights, dtype=float)
        om = np.asarray(self.omegas, dtype=float)
        if w.shape != om.shape or w.ndim != 1 or len(w) == 0:
            raise DomainError("omegas and weights must be equal-length non-empty lists")
        if not (np.all(np.isfinite(om)) and np.all(np.isfinite(w)) and np.all(w >= 0)):
            raise DomainError("nodes must be finite and weights non-negative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise DomainError(f"weights must sum to 1, got {w.sum()!r}")
        order = np.argsort(om, kind="stable")
        if not (np.allclose(om[order], -om[order][::-1], rtol=0, atol=1e-12)
                and np.allclose(w[order], w[order][::-1], rtol=0, atol=1e-15)):
            raise DomainError("the frequency law must be symmetric under omega -> -omega")

    @classmethod
    def point_mass_zero(cls) -> "DisorderSpec":
        return cls("point_mass_zero", (0.0,), (1.0,), {})

    @classmethod
    def bimodal(cls, omega0: float) -> "DisorderSpec":
        omega0 = float(omega0)
        if not (math.isfinite(omega0) and omega0 > 0):
            raise DomainError(f"omega0 must be positive, got {omega0!r}")
        return cls("bimodal", (-omega0, omega0), (0.5, 0.5), {"omega0": omega0})

    @classmethod
    def discretized_gaussian(cls, sigma: float, n_nodes: int = 201) -> "DisorderSpec":
        """Equispaced nodes on [-10 sigma, 10 sigma] with normalised Gaussian weights.

        ``n_nodes`` must be odd so that omega = 0 is a node. The trapezoid rule
        converges geometrically here because the integrands of interest are
        analytic in a strip around the real axis.
        """
        sigma = float(sigma)
        if not (math.isfinite(sigma) and sigma > 0):
            raise DomainError(f"sigma must be positive, got {sigma!r}")
        if int(n_nodes) != n_nodes or n_nodes < 3 or n_nodes % 2 == 0:
            raise DomainError(f"n_nodes must be an odd integer >= 3, got {n_nodes!r}")
        n_nodes = int(n_nodes)
        half = (n_nodes - 1) // 2
        u = np.arange(-half, half + 1) * (GAUSSIAN_HALF_WIDTH / half)
        w = np.exp(-0.5 * u * u)
        w = 0.5 * (w + w[::-1])
        w /= w.sum()
        om = sigma * u
        om[half] = 0.0
        return cls("discretized_gaussian", tuple(om), tuple(w), {"sigma": sigma, "n_nodes": n_nodes})

    @property
    def nodes(self) -> list:
        return list(zip(self.omegas, self.weights))

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "DisorderSpec":
        d = dict(d)
        kind = d.pop("kind", None)
        allowed = {"point_mass_zero": set(), "bimodal": {"omega0"}, "discretized_gaussian": {"sigma", "n_nodes"}}
        if kind not in allowed:
            raise DomainError(f"unknown disorder kind {kind!r}")
        extra = set(d) - allowed[kind]
        if extra:
            raise DomainError(f"unknown keys for {kind}: {sorted(extra)}")
        if kind == "point_mass_zero":
            return cls.point_mass_zero()
        if kind == "bimodal":
            return cls.bimodal(d["omega0"])
        return cls.discretized_gaussian(d["sigma"], d.get("n_nodes", 201))

    @classmethod
    def from_json(cls, text: str) -> "DisorderSpec":
        return cls.from_dict(json.loads(text))


def chi(mu: DisorderSpec) -> float:
    """``sum w / (2 (1 + 4 omega^2))``, in (0, 1/2]."""
    om = np.asarray(mu.omegas)
    return float(np.sum(np.asarray(mu.weights) / (2.0 * (1.0 + 4.0 * om * om))))


def critical_threshold(mu: DisorderSpec) -> float:
    """The gain ``1/chi`` above which synchronized states appear."""
    return 1.0 / chi(mu)


def _check_state(state):
    if len(state) != 4:
        raise DomainError("state must be (r1, r2, psi1, psi2)")
    r1, r2, p1, p2 = (float(v) for v in state)
    if not all(math.isfinite(v) for v in (r1, r2, p1, p2)):
        raise DomainError(f"state must be finite, got {state!r}")
    if not (0.0 <= r1 <= 1.0 and 0.0 <= r2 <= 1.0):
        raise DomainError(f"levels must lie in [0, 1], got r1={r1}, r2={r2}")
    return r1, r2, p1, p2


def _potential_coeffs(community, state, c: SymmetricCoupling):
    """(a, b) with G(theta) = a cos theta + b sin theta for the given community."""
    r1, r2, p1, p2 = state
    if community == 1:
        own, own_psi, other, other_psi = r1, p1, r2, p2
    elif community == 2:
        own, own_psi, other, other_psi = r2, p2, r1, p1
    else:
        raise DomainError(f"community must be 1 or 2, got {community!r}")
    z = c.K * own * np.exp(1j * own_psi) + c.L * other * np.exp(1j * other_psi)
    return z.real, z.imag


def _density_on_grid(a, b, omegas, n):
    """Normalised densities (one row per omega) on the uniform grid 2 pi j / n."""
    theta = 2.0 * np.pi * np.arange(n) / n
    G = a * np.cos(theta) + b * np.sin(theta)
    amp = math.hypot(a, b)
    up = np.exp(G - amp)
    down = np.exp(-G - amp)
    fk = np.fft.rfft(down)
    k = np.arange(len(fk))
    w2 = 2.0 * np.asarray(omegas, dtype=float)[:, None]
    # the filter 1/(2 omega - i k) rescaled by 2 omega, which the final
    # normalisation absorbs: 2 omega (2 omega + i k) / (4 omega^2 + k^2). Its
    # k = 0 entry is exactly 1, and at omega = 0 it keeps only the mean, which
    # is the closed form exp(G) / int exp(G).
    kk = k[None, :].astype(float)
    filt = (w2 * w2 + 1j * w2 * kk) / (w2 * w2 + kk * kk + (kk == 0))
    filt[:, 0] = 1.0
    u = np.fft.irfft(fk[None, :] * filt, n=n, axis=1)
    p = up[None, :] * u
    p /= p.mean(axis=1, keepdims=True) * 2.0 * np.pi
    return theta, p


class StationaryDensity:
    """Stationary density of one community at a given mean-field state.

    ``state`` is ``(r1, r2, psi1, psi2)``; the couplings are ``c.K`` and
    ``c.L``, the inter-community offset being carried by the state phases.
    """

    def __init__(self, community: int, state, c: SymmetricCoupling, n: int = THETA_POINTS):
        self.community = community
        self.state = _check_state(state)
        self.coupling = c
        self.n = int(n)
        self._a, self._b = _potential_coeffs(community, self.state, c)

    @property
    def params(self) -> dict:
        r1, r2, p1, p2 = self.state
        return {"K": self.coupling.K, "L": self.coupling.L, "r1": r1, "r2": r2, "psi1": p1, "psi2": p2, "D": 1.0}

    def grid(self, omegas, n: int | None = None):
        """(theta, p) with ``p[i, j]`` the density at ``theta[j]`` for ``omegas[i]``."""
        return _density_on_grid(self._a, self._b, np.atleast_1d(omegas), n or self.n)

    def __call__(self, theta, omega: float):
        """Density at arbitrary angles, by evaluating the grid's Fourier series."""
        theta_grid, p = self.grid([float(omega)])
        ck = np.fft.rfft(p[0]) / self.n
        th = np.asarray(theta, dtype=float)
        k = np.arange(len(ck))
        w = np.where((k == 0) | (2 * k == self.n), 1.0, 2.0)
        vals = np.real(np.exp(1j * np.multiply.outer(th, k)) @ (w * ck))
        return float(vals) if np.ndim(th) == 0 else vals


def stationary_density(community: int, theta, omega: float, state, c: SymmetricCoupling):
    """Value of ``p_community(theta, omega)``; see :class:`StationaryDensity`."""
    return StationaryDensity(community, state, c)(theta, omega)


def density_by_cumulative_quadrature(community, omega, state, c, n=THETA_POINTS):
    """Reference evaluation straight from the A/B representation.

    ``B = exp(2 omega theta + G)`` and
    ``A = B (e^{4 pi omega} int_S 1/B + (1 - e^{4 pi omega}) int_0^theta 1/B)``,
    with the inner integrals by cumulative trapezoid on ``n`` panels. Second
    order accurate; used to cross-check the spectral evaluation.
    """
    state = _check_state(state)
    a, b = _potential_coeffs(community, state, c)
    theta = np.linspace(0.0, 2.0 * np.pi, n + 1)
    expo = 2.0 * omega * theta + a * np.cos(theta) + b * np.sin(theta)
    inv_b = np.exp(-expo)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (inv_b[1:] + inv_b[:-1]) * np.diff(theta))])
    e = math.exp(4.0 * math.pi * omega)
    A = np.exp(expo) * (e * cum[-1] + (1.0 - e) * cum)
    A = A[:-1]
    return theta[:-1], A / (A.mean() * 2.0 * np.pi)


def _functionals(state, c, mu, n):
    out = []
    for community in (1, 2):
        a, b = _potential_coeffs(community, state, c)
        theta, p = _density_on_grid(a, b, mu.omegas, n)
        psi = state[2] if community == 1 else state[3]
        h = 2.0 * np.pi / n
        cos_int = (p * np.cos(psi - theta)).sum(axis=1) * h
        sin_int = (p * np.sin(psi - theta)).sum(axis=1) * h
        w = np.asarray(mu.weights)
        out.append((float(w @ cos_int), float(w @ sin_int)))
    (v1, u1), (v2, u2) = out
    return v1, v2, u1, u2


def selfcons_functionals(state, c: SymmetricCoupling, mu: DisorderSpec, self_check: bool = True):
    """Disorder-averaged ``(V1, V2, U1, U2)``.

    ``V_m = E_mu int cos(psi_m - theta) p_m`` and ``U_m`` likewise with sine;
    a stationary state has ``V1 = r1, V2 = r2, U1 = U2 = 0``. With
    ``self_check`` the values are recomputed on a grid twice as fine and must
    agree to 1e-9.
    """
    state = _check_state(state)
    vals = _functionals(state, c, mu, THETA_POINTS)
    if self_check:
        fine = _functionals(state, c, mu, 2 * THETA_POINTS)
        diff = max(abs(x - y) for x, y in zip(vals, fine))
        if diff > SELF_CHECK_TOL:
            raise ConvergenceError(f"theta quadrature not resolved: grid doubling changed functionals by {diff:.2e}")
    return vals


def _symmetric_state(r, c):
    return (r, r, 0.0, c.psi)


def solve_symmetric_with_disorder(c: SymmetricCoupling, mu: DisorderSpec) -> float:
    """Level r of the symmetric state ``(r, r)`` with phase offset ``c.psi``.

    Returns 0 at or below the threshold ``K + L cos psi <= 1/chi``. Above it
    the positive root of ``r = V1(r, r)`` is bracketed in (0, 1]; uniqueness
    rests on the conjectured concavity of ``r -> V1(r, r)``.
    """
    gain = c.symmetric_gain
    if gain <= critical_threshold(mu):
        return 0.0
    f = lambda r: _functionals(_symmetric_state(r, c), c, mu, THETA_POINTS)[0] - r
    lo = 1e-9
    if f(lo) <= 0:
        # the root sits below the lowest resolvable level
        return 0.0
    r = brentq(f, lo, 1.0, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    selfcons_functionals(_symmetric_state(r, c), c, mu, self_check=True)
    return float(r)


def threshold_report(c: SymmetricCoupling, mu: DisorderSpec) -> dict:
    """Threshold, symmetric level and the conjecture flag for output metadata."""
    return {
        "chi": chi(mu),
        "threshold": critical_threshold(mu),
        "gain": c.symmetric_gain,
        "r": solve_symmetric_with_disorder(c, mu),
        "flag": CONJECTURE_FLAG,
    }


LINEARIZATION_STEP = 1e-5


def linearized_slope(c: SymmetricCoupling, mu: DisorderSpec, h: float = LINEARIZATION_STEP) -> float:
    """Centred difference of ``r -> V1(r, r)`` at 0 (the map is odd, so it is V1(h, h)/h)."""
    return _functionals(_symmetric_state(h, c), c, mu, THETA_POINTS)[0] / h


def linearization_check(c: SymmetricCoupling, mu: DisorderSpec) -> float:
    """``slope - (K + L cos psi) chi``; near zero when the linear theory holds."""
    return linearized_slope(c, mu) - c.symmetric_gain * chi(mu)
