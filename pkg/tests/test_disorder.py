import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from kuramoto2c import disorder as d
from kuramoto2c.coupling import SymmetricCoupling
from kuramoto2c.errors import DomainError
from kuramoto2c.selfcons import symmetric_level

C52 = SymmetricCoupling(5.0, 2.0)


def quad_density(theta, omega, a, b):
    """Unnormalised stationary density by adaptive quadrature of the integral form."""
    G = lambda t: a * math.cos(t) + b * math.sin(t)
    inner = lambda t: integrate.quad(lambda s: math.exp(-2 * omega * s - G(t + s)), 0, 2 * math.pi,
                                     epsabs=0, epsrel=1e-13, limit=200)[0]
    return math.exp(G(theta)) * inner(theta)


def test_chi_values():
    assert d.chi(d.DisorderSpec.point_mass_zero()) == 0.5
    assert d.critical_threshold(d.DisorderSpec.point_mass_zero()) == 2.0
    assert d.critical_threshold(d.DisorderSpec.bimodal(1.0)) == 10.0


def test_chi_gaussian_against_quad():
    sigma = 1.0
    exact = integrate.quad(lambda w: math.exp(-w * w / (2 * sigma ** 2)) / math.sqrt(2 * math.pi) / sigma
                           / (2 * (1 + 4 * w * w)), -np.inf, np.inf, epsabs=1e-15)[0]
    assert d.chi(d.DisorderSpec.discretized_gaussian(sigma)) == pytest.approx(exact, abs=1e-12)


def test_zero_frequency_density_is_von_mises():
    state = (0.8, 0.6, 0.2, 0.2)
    a = C52.K * 0.8 + C52.L * 0.6
    theta = np.linspace(0, 2 * np.pi, 13)
    expected = np.exp(a * np.cos(theta - 0.2)) / (2 * np.pi * special.i0(a))
    assert np.allclose(d.stationary_density(1, theta, 0.0, state, C52), expected, rtol=1e-12)


@pytest.mark.parametrize("omega", [0.3, -0.7, 2.0])
def test_density_against_adaptive_quadrature(omega):
    state = (0.7, 0.4, 0.0, math.pi)
    a, b = d._potential_coeffs(1, state, C52)
    norm = integrate.quad(lambda t: quad_density(t, omega, a, b), 0, 2 * math.pi, epsrel=1e-11, limit=200)[0]
    sd = d.StationaryDensity(1, state, C52)
    for t in (0.0, 1.3, 4.0):
        assert sd(t, omega) == pytest.approx(quad_density(t, omega, a, b) / norm, rel=1e-9)


def test_cumulative_quadrature_reference_agrees():
    state = (0.7, 0.5, 0.0, 0.0)
    theta, p_ref = d.density_by_cumulative_quadrature(1, 0.5, state, C52, n=8192)
    p = d.StationaryDensity(1, state, C52)(theta, 0.5)
    assert np.max(np.abs(p - p_ref)) <= 1e-7


def test_density_satisfies_constant_flux():
    # (omega + G'/2) p - p'/2 must be constant in theta
    state = (0.8, 0.3, 0.0, math.pi)
    a, b = d._potential_coeffs(1, state, C52)
    omega, n = 0.9, 512
    theta, p = d.StationaryDensity(1, state, C52, n=n).grid([omega])
    k = np.fft.rfftfreq(n, 1.0 / n)
    dp = np.fft.irfft(1j * k * np.fft.rfft(p[0]), n=n)
    flux = (omega + 0.5 * (-a * np.sin(theta) + b * np.cos(theta))) * p[0] - 0.5 * dp
    assert np.ptp(flux) <= 1e-12


def test_zero_disorder_reduction():
    mu = d.DisorderSpec.point_mass_zero()
    rng = np.random.default_rng(4)
    for _ in range(10):
        K, L = rng.uniform(0.5, 8), rng.uniform(-3, 3)
        r1, r2 = rng.uniform(0, 1, 2)
        c = SymmetricCoupling(K, L)
        v1, v2, u1, u2 = d.selfcons_functionals((r1, r2, 0.0, 0.0), c, mu)
        x1, x2 = K * r1 + L * r2, K * r2 + L * r1
        assert v1 == pytest.approx(special.i1e(x1) / special.i0e(x1), abs=1e-8)
        assert v2 == pytest.approx(special.i1e(x2) / special.i0e(x2), abs=1e-8)
        assert abs(u1) <= 1e-9 and abs(u2) <= 1e-9


@pytest.mark.parametrize("mu", [d.DisorderSpec.point_mass_zero(), d.DisorderSpec.bimodal(0.4),
                                d.DisorderSpec.discretized_gaussian(0.2, 61)])
def test_threshold_consistency(mu):
    t = d.critical_threshold(mu)
    assert d.solve_symmetric_with_disorder(SymmetricCoupling(t - 1e-3 - 1.0, 1.0), mu) == 0.0
    r = d.solve_symmetric_with_disorder(SymmetricCoupling(t + 0.05 - 1.0, 1.0), mu)
    assert r > 1e-3
    v1, v2, u1, u2 = d.selfcons_functionals((r, r, 0.0, 0.0), SymmetricCoupling(t + 0.05 - 1.0, 1.0), mu)
    assert v1 == pytest.approx(r, abs=1e-10)
    assert abs(u1) <= 1e-9 and abs(u2) <= 1e-9


def test_solver_matches_selfcons_without_disorder():
    mu = d.DisorderSpec.point_mass_zero()
    assert d.solve_symmetric_with_disorder(C52, mu) == pytest.approx(symmetric_level(7.0), abs=1e-10)
    cpi = SymmetricCoupling(5.0, 2.0, math.pi)
    assert d.solve_symmetric_with_disorder(cpi, mu) == pytest.approx(symmetric_level(3.0), abs=1e-10)


def test_linearized_slope():
    mu = d.DisorderSpec.bimodal(0.5)
    assert d.linearized_slope(C52, mu) == pytest.approx(7.0 * d.chi(mu), rel=1e-6)
    assert abs(d.linearization_check(C52, mu)) <= 1e-6


def test_threshold_report_flags_conjecture():
    rep = d.threshold_report(C52, d.DisorderSpec.bimodal(1.0))
    assert rep["flag"] == d.CONJECTURE_FLAG
    assert rep["threshold"] == 10.0 and rep["r"] == 0.0


def test_spec_validation_and_round_trip():
    with pytest.raises(DomainError):
        d.DisorderSpec("custom", (0.0,), (1.0,))
    with pytest.raises(DomainError):
        d.DisorderSpec("bimodal", (-1.0, 2.0), (0.5, 0.5))
    with pytest.raises(DomainError):
        d.DisorderSpec.discretized_gaussian(1.0, 40)
    with pytest.raises(DomainError):
        d.DisorderSpec.from_dict({"kind": "bimodal", "omega0": 1.0, "extra": 2})
    for mu in (d.DisorderSpec.point_mass_zero(), d.DisorderSpec.bimodal(0.3),
               d.DisorderSpec.discretized_gaussian(0.5, 21)):
        again = d.DisorderSpec.from_json(mu.to_json())
        assert again == mu
        assert json.loads(mu.to_json())["kind"] == mu.kind


def test_state_validation():
    with pytest.raises(DomainError):
        d.stationary_density(3, 0.0, 0.0, (0.5, 0.5, 0.0, 0.0), C52)
    with pytest.raises(DomainError):
        d.stationary_density(1, 0.0, 0.0, (1.5, 0.5, 0.0, 0.0), C52)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(-3.0, 3.0), st.sampled_from([0.0, math.pi]))
def test_density_normalised_and_positive(r1, r2, omega, psi2):
    sd = d.StationaryDensity(1, (r1, r2, 0.0, psi2), C52)
    theta, p = sd.grid([omega])
    assert np.all(p > 0)
    assert p.mean() * 2 * np.pi == pytest.approx(1.0, abs=1e-12)


@given(st.floats(0.05, 1.0), st.floats(-2.0, 2.0), st.floats(0.0, 2 * math.pi))
def test_omega_reflection(r, omega, t):
    sd = d.StationaryDensity(1, (r, r, 0.0, 0.0), C52)
    assert sd(t, omega) == pytest.approx(sd(-t, -omega), abs=1e-9)
