import math

import numpy as np
import pytest
from scipy import integrate

from kuramoto2c import mckean as mk
from kuramoto2c.coupling import CouplingConfig, SymmetricCoupling
from kuramoto2c.disorder import DisorderSpec, StationaryDensity
from kuramoto2c.errors import DomainError
from kuramoto2c.selfcons import symmetric_level

MU0 = DisorderSpec.point_mass_zero()
C52 = CouplingConfig.symmetric(5.0, 2.0)


def field_from_stationary(r, c: SymmetricCoupling, mu, M=64):
    """Both communities at the stationary density of the symmetric state (r, r, 0, psi)."""
    n = 4 * (M + 1)
    grids = []
    for community in (1, 2):
        _, p = StationaryDensity(community, (r, r, 0.0, c.psi), c).grid(mu.omegas, n)
        grids.append(p)
    return mk.DensityField.from_grid(np.array(grids), mu, M=M)


def test_pure_diffusion_decay():
    f0 = mk.DensityField.von_mises(MU0, (0.3, 2.0), (3.0, 0.5), M=32)
    zero = CouplingConfig(0.0, 0.0, 0.0, 0.0, test_mode=True)
    t = 0.8
    f1 = mk.evolve(f0, zero, MU0, 2e-4, t)
    k = np.arange(33)
    assert np.allclose(np.abs(f1.coeffs), np.abs(f0.coeffs) * np.exp(-0.5 * k * k * t), atol=1e-14)


def test_frequency_rotates_modes():
    mu = DisorderSpec.bimodal(0.7)
    f0 = mk.DensityField.von_mises(mu, (0.0, 0.0), (1.0, 1.0), M=32)
    zero = CouplingConfig(0.0, 0.0, 0.0, 0.0, test_mode=True)
    f1 = mk.evolve(f0, zero, mu, 2e-4, 0.5)
    k = np.arange(33)
    expected = f0.coeffs * np.exp((-0.5 * k * k)[None, None, :] * 0.5
                                  - 1j * np.outer(mu.omegas, k)[None, :, :] * 0.5)
    assert np.max(np.abs(f1.coeffs - expected)) <= 1e-14


def test_subcritical_decay():
    f0 = mk.DensityField.von_mises(MU0, (0.0, 0.0), (0.2, 0.2), M=32)
    # the first mode decays at rate D/2 - (K + L)/4 = 1/4
    f1 = mk.evolve(f0, CouplingConfig.symmetric(0.6, 0.4), MU0, 4.8e-4, 20.0)
    assert mk.order_params_of_field(f1, 1)[0] < 1e-2 * mk.order_params_of_field(f0, 1)[0]


def test_incoherent_state_unstable_above_threshold():
    f0 = mk.DensityField.von_mises(MU0, (0.0, 0.0), (2e-3, 2e-3), M=32)
    f1 = mk.evolve(f0, CouplingConfig.symmetric(1.5, 0.7), MU0, 2e-4, 1.0)
    assert mk.order_params_of_field(f1, 1)[0] > mk.order_params_of_field(f0, 1)[0]


def test_mass_and_realness_invariants():
    f0 = mk.DensityField.von_mises(MU0, (0.0, 1.0), (2.0, 4.0), M=48)
    f1 = mk.evolve(f0, CouplingConfig(4.0, 6.0, -1.0, 2.5, alpha1=0.3, alpha2=0.7), MU0, 1e-4, 2.0)
    assert np.max(np.abs(f1.coeffs[:, :, 0] - 1.0 / (2 * np.pi))) <= 1e-14
    assert f1.conjugacy_defect() <= 1e-13
    theta = np.linspace(0, 2 * np.pi, 1001)
    mass = integrate.trapezoid(f1.density(theta), theta, axis=-1)
    assert np.allclose(mass, 1.0, atol=1e-12)


def test_stationary_density_is_steady_state():
    c = SymmetricCoupling(5.0, 2.0)
    r = symmetric_level(7.0)
    f = field_from_stationary(r, c, MU0)
    assert mk.order_params_of_field(f, 1)[0] == pytest.approx(r, abs=1e-12)
    assert mk.stationary_residual(f, C52, MU0) <= 1e-6


def test_stationary_density_with_disorder_is_steady_state():
    from kuramoto2c.disorder import solve_symmetric_with_disorder

    mu = DisorderSpec.bimodal(0.5)
    c = SymmetricCoupling(5.0, 2.0)
    r = solve_symmetric_with_disorder(c, mu)
    f = field_from_stationary(r, c, mu)
    assert mk.stationary_residual(f, C52, mu) <= 1e-6


def test_uniform_field_is_stationary():
    f = mk.DensityField.uniform(MU0, M=32)
    assert mk.stationary_residual(f, C52, MU0) <= 1e-12


def test_truncation_doubling():
    # short horizon, shared step: the M = 64 and M = 128 runs agree to 1e-8
    dt = mk.max_stable_dt(128, 1.0)
    runs = []
    for M in (64, 128):
        f0 = mk.DensityField.von_mises(MU0, (0.0, 0.0), (2.5, 2.5), M=M)
        runs.append(mk.order_params_of_field(mk.evolve(f0, C52, MU0, dt, 1.0), 1)[0])
    assert abs(runs[0] - runs[1]) <= 1e-8


def test_history_and_diagnostics():
    f0 = mk.DensityField.von_mises(MU0, (0.0, 0.0), (2.0, 2.0), M=32)
    f1 = mk.evolve(f0, C52, MU0, 2e-4, 0.1, record_every=100)
    hist = f1.diagnostics["history"]
    assert len(hist) == 6
    assert hist[0][0] == 0.0 and hist[-1][0] == pytest.approx(0.1)
    assert f1.diagnostics["under_resolved"] is False
    assert f1.t == 0.1


def test_negativity_flagged():
    f = mk.DensityField.von_mises(MU0, (0.0, 0.0), (400.0, 400.0), M=32)
    assert f.min_density() < -mk.NEGATIVITY_TOL
    f1 = mk.evolve(f, C52, MU0, 1e-5, 1e-4)
    assert f1.diagnostics["under_resolved"] is True


def test_validation():
    f = mk.DensityField.uniform(MU0, M=32)
    with pytest.raises(DomainError):
        mk.evolve(f, C52, MU0, 1.0, 1.0)
    with pytest.raises(DomainError):
        mk.DensityField.uniform(MU0, M=16)
    with pytest.raises(DomainError):
        mk.evolve(f, C52, DisorderSpec.bimodal(1.0), 1e-4, 1.0)
    with pytest.raises(DomainError):
        mk.order_params_of_field(f, 3)


def test_json_round_trip():
    f = mk.DensityField.von_mises(DisorderSpec.bimodal(0.3), (0.2, 1.0), (1.0, 3.0), M=32)
    g = mk.DensityField.from_json(f.to_json())
    assert np.array_equal(g.coeffs, f.coeffs)
    assert np.array_equal(g.omegas, f.omegas)


def test_snapshot_rows():
    f = mk.DensityField.von_mises(MU0, (0.0, 0.0), (1.0, 1.0), M=32)
    rows = mk.snapshot_rows(f, n_theta=64)
    assert len(rows) == 2 * 64
    assert sum(r[4] for r in rows[:64]) * 2 * math.pi / 64 == pytest.approx(1.0, abs=1e-12)
