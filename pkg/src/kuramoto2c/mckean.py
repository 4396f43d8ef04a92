"""Fourier-spectral evolution of the mean-field (McKean-Vlasov) densities.

Each community m and frequency node omega carries a density on the circle

    p(theta) = sum_k c_k exp(i k theta),   c_0 = 1/(2 pi),  c_{-k} = conj(c_k),

so only k = 0..M is stored and realness holds by construction. With the mean
field ``Z_1 = a1 K1 R1 + a2 L1 R2`` (``R_m = r_m e^{i psi_m}``) the drift is
``omega + Im(Z e^{-i theta})`` and the Fokker-Planck equation becomes

    dc_k/dt = -(D k^2 / 2 + i k omega) c_k - (k / 2) (Z c_{k+1} - conj(Z) c_{k-1}).

The linear part is integrated exactly and the coupling term by the
exponential Euler rule, so c_0 never changes and steady states of the scheme
are exactly those of the PDE.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ive

from .coupling import CouplingConfig
from .disorder import DisorderSpec
from .errors import ConvergenceError, DomainError

MIN_MODES = 32
NEGATIVITY_TOL = 1e-8
_INV_2PI = 1.0 / (2.0 * math.pi)


@dataclass
class DensityField:
    """Fourier coefficients ``coeffs[m, j, k]`` for community m, node j, mode k = 0..M."""

    coeffs: np.ndarray
    omegas: np.ndarray
    weights: np.ndarray
    t: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coeffs = np.array(self.coeffs, dtype=complex)
        self.omegas = np.asarray(self.omegas, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.coeffs.ndim != 3 or self.coeffs.shape[0] != 2 or self.coeffs.shape[1] != len(self.omegas):
            raise DomainError("coeffs must have shape (2, n_nodes, M + 1)")
        if self.M < MIN_MODES:
            raise DomainError(f"truncation M must be >= {MIN_MODES}, got {self.M}")
        self.coeffs[:, :, 0] = _INV_2PI

    @property
    def M(self) -> int:
        return self.coeffs.shape[2] - 1

    @classmethod
    def uniform(cls, mu: DisorderSpec, M: int = 64) -> "DensityField":
        n = len(mu.omegas)
        return cls(np.zeros((2, n, M + 1), dtype=complex), mu.omegas, mu.weights)

    @classmethod
    def von_mises(cls, mu: DisorderSpec, means, kappas, M: int = 64) -> "DensityField":
        """Von Mises densities with per-community mean and concentration, the same at every node."""
        k = np.arange(M + 1)
        coeffs = np.zeros((2, len(mu.omegas), M + 1), dtype=complex)
        for m in range(2):
            kappa = float(kappas[m])
            ratio = ive(k, kappa) / ive(0, kappa) if kappa > 0 else (k == 0).astype(float)
            coeffs[m, :, :] = _INV_2PI * ratio * np.exp(-1j * k * float(means[m]))
        return cls(coeffs, mu.omegas, mu.weights)

    @classmethod
    def from_grid(cls, densities, mu: DisorderSpec, M: int = 64) -> "DensityField":
        """From densities sampled on the uniform grid ``2 pi j / n``; shape (2, n_nodes, n)."""
        p = np.asarray(densities, dtype=float)
        n = p.shape[-1]
        if n < 2 * M + 2:
            raise DomainError("grid too coarse for the requested truncation")
        ck = np.fft.rfft(p, axis=-1)[..., : M + 1] / n
        return cls(ck, mu.omegas, mu.weights)

    def density(self, theta) -> np.ndarray:
        """Reconstructed densities at ``theta``; shape (2, n_nodes, len(theta))."""
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        k = np.arange(self.M + 1)
        w = np.where(k == 0, 1.0, 2.0)
        basis = np.exp(1j * np.multiply.outer(k, th))
        return np.real(np.einsum("mjk,kt->mjt", self.coeffs * w, basis))

    def min_density(self, n: int | None = None) -> float:
        n = n or 4 * (self.M + 1)
        return float(self.density(2.0 * np.pi * np.arange(n) / n).min())

    def conjugacy_defect(self) -> float:
        """``max |c_{-k} - conj(c_k)|`` of the full two-sided spectrum (zero by storage)."""
        full = np.concatenate([np.conj(self.coeffs[:, :, :0:-1]), self.coeffs], axis=2)
        return float(np.max(np.abs(full[:, :, ::-1] - np.conj(full))))

    def to_json(self) -> str:
        return json.dumps({
            "t": self.t,
            "M": self.M,
            "omegas": self.omegas.tolist(),
            "weights": self.weights.tolist(),
            "re": self.coeffs.real.tolist(),
            "im": self.coeffs.imag.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "DensityField":
        d = json.loads(text)
        coeffs = np.asarray(d["re"]) + 1j * np.asarray(d["im"])
        return cls(coeffs, d["omegas"], d["weights"], t=float(d["t"]))


def _mean_fields(coeffs, weights):
    """``R_m = r_m e^{i psi_m}`` for both communities."""
    return 2.0 * np.pi * (np.conj(coeffs[:, :, 1]) @ weights)


def order_params_of_field(f: DensityField, community: int) -> tuple[float, float]:
    """(r, psi) of one community, psi in [0, 2 pi)."""
    if community not in (1, 2):
        raise DomainError(f"community must be 1 or 2, got {community!r}")
    z = _mean_fields(f.coeffs, f.weights)[community - 1]
    return float(abs(z)), float(np.angle(z) % (2.0 * np.pi))


def _drive(R, c: CouplingConfig):
    z1 = c.alpha1 * c.K1 * R[0] + c.alpha2 * c.L1 * R[1]
    z2 = c.alpha2 * c.K2 * R[1] + c.alpha1 * c.L2 * R[0]
    return np.array([z1, z2])


def _coupling_term(coeffs, Z, k):
    """``-(k/2)(Z c_{k+1} - conj(Z) c_{k-1})`` with c_{M+1} = 0."""
    up = np.zeros_like(coeffs)
    up[:, :, :-1] = coeffs[:, :, 1:]
    down = np.zeros_like(coeffs)
    down[:, :, 1:] = coeffs[:, :, :-1]
    z = Z[:, None, None]
    return -0.5 * k * (z * up - np.conj(z) * down)


def _linear_rates(omegas, D, M):
    k = np.arange(M + 1)
    return -(0.5 * D * k * k)[None, :] - 1j * np.outer(omegas, k), k


def _check_mu(f: DensityField, mu: DisorderSpec):
    if len(mu.omegas) != len(f.omegas) or not np.allclose(mu.omegas, f.omegas, rtol=0, atol=1e-14):
        raise DomainError("field nodes do not match the disorder spec")


def max_stable_dt(M: int, D: float) -> float:
    return 0.5 / (D * M * M)


def evolve(f: DensityField, c: CouplingConfig, mu: DisorderSpec, dt: float, t_end: float,
           record_every: int = 0) -> DensityField:
    """Integrate from ``f.t`` to ``t_end`` with step ``dt``; returns a new field.

    With ``record_every > 0`` the rows (t, r1, r2, psi1, psi2) at every
    ``record_every``-th step are stored in ``diagnostics["history"]``.
    """
    _check_mu(f, mu)
    M = f.M
    if not (dt > 0 and math.isfinite(dt)):
        raise DomainError(f"dt must be positive, got {dt!r}")
    if dt > max_stable_dt(M, c.D) * (1 + 1e-12):
        raise DomainError(f"dt={dt} exceeds the stability limit 0.5/(D M^2) = {max_stable_dt(M, c.D)}")
    if t_end < f.t:
        raise DomainError("t_end precedes the field time")
    steps = int(math.ceil((t_end - f.t) / dt - 1e-9))
    h = (t_end - f.t) / steps if steps else 0.0

    lam, k = _linear_rates(f.omegas, c.D, M)
    expo = np.exp(lam * h)[None, :, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(lam == 0, h, (np.exp(lam * h) - 1.0) / lam)[None, :, :]
    kk = k[None, None, :]
    coeffs = f.coeffs.copy()
    w = f.weights
    history = []

    def record(step):
        R = _mean_fields(coeffs, w)
        history.append((f.t + step * h, abs(R[0]), abs(R[1]),
                        float(np.angle(R[0]) % (2 * np.pi)), float(np.angle(R[1]) % (2 * np.pi))))

    if record_every:
        record(0)
    for step in range(1, steps + 1):
        Z = _drive(_mean_fields(coeffs, w), c)
        coeffs = expo * coeffs + phi * _coupling_term(coeffs, Z, kk)
        coeffs[:, :, 0] = _INV_2PI
        if step % 1000 == 0 and not np.all(np.isfinite(coeffs)):
            raise ConvergenceError(f"non-finite Fourier coefficients at step {step}")
        if record_every and step % record_every == 0:
            record(step)
    if not np.all(np.isfinite(coeffs)):
        raise ConvergenceError("non-finite Fourier coefficients at the final step")
    out = DensityField(coeffs, f.omegas, f.weights, t=float(t_end))
    low = out.min_density()
    out.diagnostics = {"steps": steps, "dt": h, "min_density": low, "under_resolved": low < -NEGATIVITY_TOL}
    if record_every:
        out.diagnostics["history"] = history
    return out


def stationary_residual(f: DensityField, c: CouplingConfig, mu: DisorderSpec) -> float:
    """Largest modulus of dc_k/dt over modes, nodes and communities."""
    _check_mu(f, mu)
    lam, k = _linear_rates(f.omegas, c.D, f.M)
    Z = _drive(_mean_fields(f.coeffs, f.weights), c)
    rhs = lam[None, :, :] * f.coeffs + _coupling_term(f.coeffs, Z, k[None, None, :])
    rhs[:, :, 0] = 0.0
    return float(np.max(np.abs(rhs)))


def snapshot_rows(f: DensityField, n_theta: int = 256):
    """Rows (t, community, omega, theta, p) on a uniform theta grid."""
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    p = f.density(theta)
    rows = []
    for m in range(2):
        for j, om in enumerate(f.omegas):
            for th, val in zip(theta, p[m, j]):
                rows.append((f.t, m + 1, float(om), float(th), float(val)))
    return rows
