import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from kuramoto2c import sde
from kuramoto2c.coupling import CouplingConfig
from kuramoto2c.disorder import DisorderSpec
from kuramoto2c.errors import DomainError
from kuramoto2c.selfcons import symmetric_level


def config(K=5.0, L=2.0, N=1000, dt=0.01, steps=4000, seed=1, initial=((0.0, 2.0), (0.0, 2.0)), **kw):
    init = tuple(sde.InitialCondition(m, k) for m, k in initial)
    return sde.SimulationConfig(N, N, dt, steps, seed, CouplingConfig.symmetric(K, L, **kw), initial=init)


def test_order_params():
    r, psi, valid = sde.order_params([0.3, 0.3, 0.3])
    assert r == pytest.approx(1.0) and psi == pytest.approx(0.3) and valid
    r, _, valid = sde.order_params([0.0, math.pi])
    assert r < 1e-15 and not valid
    with pytest.raises(DomainError):
        sde.order_params([])


def test_von_mises_sampling_matches_theory():
    kappa = 2.0
    angles = sde.sample_initial(1.0, kappa, 200_000, seed=5)
    r, psi, _ = sde.order_params(angles)
    assert r == pytest.approx(special.i1(kappa) / special.i0(kappa), abs=5e-3)
    assert psi == pytest.approx(1.0, abs=1e-2)
    assert np.all((angles >= 0) & (angles < 2 * np.pi))
    assert sde.order_params(sde.sample_initial(0.0, 0.0, 100_000, seed=1))[0] < 0.02


def test_determinism():
    cfg = config(N=200, steps=300)
    a, b = sde.simulate(cfg), sde.simulate(cfg)
    assert a.to_csv() == b.to_csv()
    c = sde.simulate(config(N=200, steps=300, seed=2))
    assert not np.array_equal(a.r1, c.r1)


def test_label_swap_is_exact():
    init = (sde.InitialCondition(0.0, 3.0), sde.InitialCondition(2.0, 0.5))
    cfg = sde.SimulationConfig(150, 100, 0.01, 300, 9, CouplingConfig(6.0, 3.0, 1.5, -2.0, alpha1=0.6, alpha2=0.4),
                               initial=init)
    a, b = sde.simulate(cfg), sde.simulate(cfg.swapped())
    assert np.array_equal(a.r1, b.r2) and np.array_equal(a.r2, b.r1)
    assert np.array_equal(a.psi1, b.psi2)


def test_null_model():
    cfg = config(K=0.0, L=0.0, N=1000, steps=1500, initial=((0.0, 0.0), (0.0, 0.0)), test_mode=True)
    ts = sde.simulate(cfg)
    r1, r2 = ts.late_mean(1000)
    assert r1 <= 3 / math.sqrt(1000) and r2 <= 3 / math.sqrt(1000)


def test_equilibrium_consistency():
    ts = sde.simulate(config(steps=5000))
    target = symmetric_level(7.0)
    r1, r2 = ts.late_mean(2000)
    assert abs(r1 - target) <= 0.03 and abs(r2 - target) <= 0.03


def test_dt_robustness():
    coarse = sde.simulate(config(steps=4000, dt=0.01)).late_mean(2000)
    fine = sde.simulate(config(steps=8000, dt=0.005)).late_mean(4000)
    assert abs(np.mean(coarse) - np.mean(fine)) <= 0.01


def test_disorder_frequencies_drawn_from_nodes():
    cfg = sde.SimulationConfig(500, 500, 0.01, 10, 3, CouplingConfig.symmetric(5.0, 2.0),
                               disorder=DisorderSpec.bimodal(1.0))
    state = sde.initial_state(cfg)
    for om in state.omega:
        assert set(np.unique(om)) == {-1.0, 1.0}


def test_validation():
    with pytest.raises(DomainError):
        config(dt=0.1)
    with pytest.raises(DomainError):
        config(N=1)
    with pytest.raises(DomainError):
        sde.SimulationConfig(100, 300, 0.01, 10, 0, CouplingConfig.symmetric(5.0, 2.0))
    with pytest.raises(DomainError):
        CouplingConfig.symmetric(5.0, 0.0)
    with pytest.raises(DomainError):
        sde.preset_config("fig99")
    with pytest.raises(DomainError):
        sde.sample_initial(0.0, -1.0, 10)


def test_csv_header_and_precision():
    ts = sde.simulate(config(N=50, steps=5, seed=77))
    text = ts.to_csv({"K": 5.0})
    lines = text.splitlines()
    assert lines[0] == "# seed: 77" and lines[1] == "# K: 5.0"
    first = lines[3].split(",")
    assert float(first[1]) == ts.r1[0]


def test_psi_unwrapped():
    ts = sde.simulate(sde.preset_config("fig9", seed=1))
    assert np.max(np.abs(np.diff(ts.psi1))) < 1.0


def test_presets_match_captions():
    for name, K, L in (("fig9", 7.0, -2.0), ("fig10", 5.0, 2.0)):
        cfg = sde.preset_config(name)
        assert (cfg.N1, cfg.N2, cfg.dt) == (1000, 1000, 0.01)
        assert (cfg.couplings.K1, cfg.couplings.L1) == (K, L)
    fig9 = sde.preset_config("fig9")
    assert fig9.initial[0].mean == fig9.initial[1].mean == math.pi
    assert fig9.initial[1].concentration < fig9.initial[0].concentration


def _series(r1, r2, psi1, psi2):
    n = len(r1)
    return sde.TimeSeries(np.arange(n) * 0.01, np.array(r1), np.array(r2), np.array(psi1), np.array(psi2),
                          np.ones(n, bool), np.ones(n, bool))


def test_transition_detector():
    ts = _series([0.9, 0.9, 0.9, 0.9], [0.7, 0.75, 0.85, 0.9], [0, 0, 0, 0], [0, 0.2, 1.0, 3.0])
    out = sde.suppression_then_separation(ts)
    assert out["detected"] and out["separation_time"] == pytest.approx(0.03)
    assert out["max_gap_before"] == pytest.approx(0.2)
    # phases never separate
    assert not sde.suppression_then_separation(_series([0.9] * 3, [0.7] * 3, [0] * 3, [0] * 3))["detected"]
    # separated without a lagging community
    assert not sde.suppression_then_separation(_series([0.9] * 3, [0.88] * 3, [0] * 3, [0, 1.0, 3.0]))["detected"]


@given(st.integers(min_value=0, max_value=2**64 - 1))
def test_seed_streams_are_reproducible(seed):
    a = sde.community_rng(seed, 1).standard_normal(3)
    b = sde.community_rng(seed, 1).standard_normal(3)
    c = sde.community_rng(seed, 2).standard_normal(3)
    assert np.array_equal(a, b) and not np.array_equal(a, c)
