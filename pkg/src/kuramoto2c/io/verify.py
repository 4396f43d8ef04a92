"""Invariant suites behind ``kuramoto2c verify``.

Each suite returns a list of :class:`Check` rows; a suite passes when every
row does. The grids and tolerances mirror the module-level test contracts, but
are sized to finish in seconds.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    passed: bool
    detail: str = ""


def _run(suite, name, fn):
    try:
        ok, detail = fn()
    except Exception as exc:  # a crashing check is a failing check
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return Check(suite, name, bool(ok), detail)


def bessel_grid(n: int = 500, x_max: float = 50.0) -> np.ndarray:
    """``n`` equispaced points in (0, x_max]."""
    return np.linspace(x_max / n, x_max, n)


def bessel_suite():
    from .. import bessel as b

    x = bessel_grid()
    v = b.v_fn(x)
    checks = [
        ("0 < V(x) < x/2", lambda: (bool(np.all((v > 0) & (v < x / 2))), "")),
        ("V(x) < 1", lambda: (bool(np.all(v < 1)), f"max {v.max():.17g}")),
        ("V increasing", lambda: (bool(np.all(np.diff(v) > 0)), "")),
        ("V' > 0", lambda: (bool(np.all(b.v_prime(x) > 0)), "")),
        ("odd symmetry", lambda: (bool(np.array_equal(b.v_fn(-x), -v)), "")),
    ]

    def concave():
        worst = max(b.concavity_certificate(float(t)) for t in x)
        return worst < 0, f"max V'' {worst:.3e}"

    def w_decreasing():
        w = b.w_fn(x)
        far = b.w_fn(1e3)
        return bool(np.all(np.diff(w) < 0) and far < 2.1e-3), f"W(1e3) = {far:.3e}"

    def derivative():
        xs = np.linspace(0.01, 30.0, 500)
        h = 1e-5
        fd = (b.v_fn(xs + h) - b.v_fn(xs - h)) / (2 * h)
        err = float(np.max(np.abs(fd - b.v_prime(xs))))
        return err <= 1e-7, f"max |FD - V'| = {err:.2e}"

    def bounds():
        u1, u2 = b.v_upper_bound(x, 1), b.v_upper_bound(x, 2)
        return bool(np.all(v <= u2) and np.all(u2 < u1)), ""

    def ordering():
        xs = np.concatenate([[0.0], x])
        i0, i1, i2 = (b.bessel_i(m, xs) for m in (0, 1, 2))
        return bool(np.all(i0 >= i1) and np.all(i1 >= i2) and np.all(i2 >= 0)), ""

    def crossover():
        errs = [abs(b._series_scaled(m, np.array([15.0]))[0] / b._asymptotic_scaled(m, np.array([15.0]))[0] - 1)
                for m in (0, 1, 2)]
        return max(errs) <= 1e-11, f"max rel. gap {max(errs):.1e}"

    checks += [
        ("V'' < 0 (certificate)", concave),
        ("W decreasing, W(1e3) small", w_decreasing),
        ("V' vs finite differences", derivative),
        ("V <= level-2 bound < level-1 bound", bounds),
        ("I0 >= I1 >= I2 >= 0", ordering),
        ("series/asymptotic agree at 15", crossover),
    ]
    return [_run("bessel", name, fn) for name, fn in checks]


def selfcons_suite():
    from ..coupling import SymmetricCoupling
    from .. import selfcons as s

    def ordering():
        sol = s.find_all_solutions(SymmetricCoupling(5.5, -2.0))
        return len(sol.points) == 4 and s.verify_ordering(sol), f"{len(sol.points)} points"

    def residual_and_swap():
        worst = 0.0
        for K, L in ((5.5, -2.0), (7.0, -2.0), (6.0, -1.5), (4.0, 1.0)):
            sol = s.find_all_solutions(SymmetricCoupling(K, L))
            worst = max([worst] + [p.residual for p in sol.points])
            for p in sol.of_kind(s.NON_SYMMETRIC):
                if not any(p.swapped_close(q) for q in sol.points):
                    return False, f"missing swap partner at K={K}, L={L}"
        return worst <= 1e-10, f"max residual {worst:.1e}"

    def psi_pi():
        a = s.find_all_solutions(SymmetricCoupling(6.0, 2.0, math.pi))
        b = s.find_all_solutions(SymmetricCoupling(6.0, -2.0, 0.0))
        same = len(a.points) == len(b.points) and all(
            abs(p.r1 - q.r1) <= 1e-9 and abs(p.r2 - q.r2) <= 1e-9 for p, q in zip(a.points, b.points))
        return same, ""

    def origin_eigen():
        worst = 0.0
        # on K + L' = 2 with L' > 0 the symmetric mode carries the largest eigenvalue
        for i, K in enumerate(np.linspace(0.2, 1.8, 20)):
            psi = 0.0 if i % 2 == 0 else math.pi
            L = (2.0 - float(K)) * (1.0 if psi == 0.0 else -1.0)
            lam = np.linalg.eigvals(s.jacobian(0.0, 0.0, SymmetricCoupling(float(K), L, psi)))
            worst = max(worst, abs(max(lam.real) - 1.0))
        return worst <= 1e-12, f"max |lambda - 1| = {worst:.1e}"

    def criticality():
        ks, ls = np.linspace(0.2, 8.0, 10), np.linspace(-4.0, 4.0, 10)
        cs = [SymmetricCoupling(float(K), float(L), psi) for psi in (0.0, math.pi)
              for K in ks for L in ls if L != 0]
        bad = sum((sol.symmetric_r is not None and sol.symmetric_r > 0) != (c.symmetric_gain > 2 + 1e-6)
                  for c, sol in zip(cs, s.find_all_solutions_many(cs)))
        return bad == 0, f"{bad} mismatches of {len(cs)}"

    checks = [
        ("(5.5, -2): four ordered points", ordering),
        ("residuals and swap closure", residual_and_swap),
        ("psi = pi equals L -> -L", psi_pi),
        ("origin eigenvalue on the critical line", origin_eigen),
        ("criticality on a 10x10 grid", criticality),
    ]
    return [_run("selfcons", name, fn) for name, fn in checks]


def bifurcation_suite():
    from .. import bifurcation as bf

    curve = bf.trace_curve()
    K = np.array([p.K_star for p in curve])
    L = np.array([p.L for p in curve])
    r = np.array([p.r_star for p in curve])

    def residuals():
        worst = max(max(abs(v) for v in p.residuals()) for p in curve)
        return worst <= 1e-10, f"max {worst:.1e}"

    def bounds():
        return all(all(bf.bound_check(p).values()) for p in curve), ""

    def monotone():
        ok = np.all(np.diff(r) > 0) and np.all(np.diff(L) < 0)
        # second differences with respect to K on the non-uniform grid
        def second(y):
            d = np.diff(y) / np.diff(K)
            return np.diff(d)
        return bool(ok and np.all(second(r) < 0) and np.all(second(L) < 0)), ""

    def inverse():
        worst = max(abs(bf.k_star_of_l(bf.l_star_of_k(float(k)).L).K_star - k)
                    for k in np.linspace(2.1, 100.0, 20))
        return worst <= 1e-6, f"max {worst:.1e}"

    def slopes():
        lo, hi = bf.dl_star_dk(curve[0].K_star, curve[0].L), bf.dl_star_dk(curve[-1].K_star, curve[-1].L)
        return abs(lo + 0.5) <= 0.02 and abs(hi + 1.0) <= 0.02, f"{lo:.5f}, {hi:.5f}"

    checks = [
        ("K*(-2) = 4.9953", lambda: (abs(bf.k_star_of_l(-2.0).K_star - 4.9953) <= 1e-3,
                                     f"{bf.k_star_of_l(-2.0).K_star:.9f}")),
        ("curve residuals", residuals),
        ("K and r* bounds", bounds),
        ("monotonicity and concavity", monotone),
        ("inverse consistency", inverse),
        ("slope limits", slopes),
        ("asymptote equation root is 1", lambda: (bf.asymptote_roots() == [1.0], "")),
        ("level-2 bound endpoint", lambda: (abs(bf.bound_endpoint_k2() - 15.8684) <= 0.01,
                                            f"{bf.bound_endpoint_k2():.6f}")),
    ]
    return [_run("bifurcation", name, fn) for name, fn in checks]


def disorder_suite():
    from ..coupling import SymmetricCoupling
    from .. import disorder as d
    from ..selfcons import symmetric_level

    specs = [d.DisorderSpec.point_mass_zero(), d.DisorderSpec.bimodal(1.0),
             d.DisorderSpec.discretized_gaussian(0.3, 41)]

    def normalization():
        c = SymmetricCoupling(5.0, 2.0)
        worst = 0.0
        for mu in specs:
            theta, p = d.StationaryDensity(1, (0.8, 0.7, 0.0, 0.0), c).grid(mu.omegas)
            worst = max(worst, float(np.max(np.abs(p.sum(axis=1) * (2 * np.pi / p.shape[1]) - 1))))
        return worst <= 1e-9, f"max {worst:.1e}"

    def thresholds():
        a = d.critical_threshold(specs[0])
        b = d.critical_threshold(specs[1])
        return a == 2.0 and b == 10.0, f"{a!r}, {b!r}"

    def transitions():
        for mu in specs:
            t = d.critical_threshold(mu)
            below = d.solve_symmetric_with_disorder(SymmetricCoupling(t - 1e-3 - 1.0, 1.0), mu)
            above = d.solve_symmetric_with_disorder(SymmetricCoupling(t + 0.05 - 1.0, 1.0), mu)
            if not (below == 0.0 and above > 1e-3):
                return False, f"{mu.kind}: {below}, {above}"
        return True, ""

    def reduction():
        worst = 0.0
        for K, L in ((5.0, 2.0), (3.0, 0.5), (6.0, -1.0)):
            c = SymmetricCoupling(K, L)
            worst = max(worst, abs(d.solve_symmetric_with_disorder(c, specs[0]) - symmetric_level(K + L)))
        return worst <= 1e-8, f"max {worst:.1e}"

    def reflection():
        c = SymmetricCoupling(5.0, 2.0)
        sd = d.StationaryDensity(1, (0.8, 0.8, 0.3, 0.3), c)
        th = np.linspace(0, 2 * np.pi, 17)
        gap = float(np.max(np.abs(sd(0.3 + th, 0.7) - sd(0.3 - th, -0.7))))
        return gap <= 1e-9, f"max {gap:.1e}"

    checks = [
        ("densities integrate to 1", normalization),
        ("thresholds 2 and 10", thresholds),
        ("zero below, positive above threshold", transitions),
        ("zero-disorder reduction", reduction),
        ("omega reflection", reflection),
    ]
    return [_run("disorder", name, fn) for name, fn in checks]


def pde_suite():
    from ..coupling import CouplingConfig
    from ..disorder import DisorderSpec
    from .. import mckean as mk

    mu = DisorderSpec.point_mass_zero()

    def heat():
        f0 = mk.DensityField.von_mises(mu, (0.4, 1.0), (2.0, 1.0), M=32)
        c = CouplingConfig(0.0, 0.0, 0.0, 0.0, test_mode=True)
        f1 = mk.evolve(f0, c, mu, 1e-4, 0.5)
        k = np.arange(33)
        expected = f0.coeffs * np.exp(-0.5 * k * k * 0.5)
        err = float(np.max(np.abs(f1.coeffs - expected)))
        return err <= 1e-12, f"max {err:.1e}"

    def invariants():
        f0 = mk.DensityField.von_mises(mu, (0.0, 0.0), (2.0, 2.0), M=32)
        f1 = mk.evolve(f0, CouplingConfig.symmetric(5.0, 2.0), mu, 2e-4, 1.0)
        mass = float(np.max(np.abs(f1.coeffs[:, :, 0] - 1 / (2 * np.pi))))
        return mass <= 1e-14 and f1.conjugacy_defect() <= 1e-13, f"mass {mass:.1e}"

    def uniform():
        f = mk.DensityField.uniform(mu, M=32)
        res = mk.stationary_residual(f, CouplingConfig.symmetric(5.0, 2.0), mu)
        return res <= 1e-12, f"{res:.1e}"

    def growth():
        f0 = mk.DensityField.von_mises(mu, (0.0, 0.0), (2e-3, 2e-3), M=32)
        f1 = mk.evolve(f0, CouplingConfig.symmetric(1.5, 0.7), mu, 2e-4, 1.0)
        r0, r1 = mk.order_params_of_field(f0, 1)[0], mk.order_params_of_field(f1, 1)[0]
        return r1 > r0, f"{r0:.2e} -> {r1:.2e}"

    checks = [
        ("pure diffusion decay", heat),
        ("mass and realness", invariants),
        ("uniform state stationary", uniform),
        ("incoherence unstable above threshold", growth),
    ]
    return [_run("pde", name, fn) for name, fn in checks]


def sde_suite():
    from ..coupling import CouplingConfig
    from ..sde import InitialCondition, SimulationConfig, simulate

    init = (InitialCondition(0.0, 2.0), InitialCondition(1.0, 1.0))
    cfg = SimulationConfig(60, 60, 0.01, 200, 7, CouplingConfig(5.0, 4.0, 2.0, -1.0), initial=init)

    def determinism():
        a, b = simulate(cfg), simulate(cfg)
        return a.to_csv() == b.to_csv(), ""

    def swap():
        a, b = simulate(cfg), simulate(cfg.swapped())
        return bool(np.array_equal(a.r1, b.r2) and np.array_equal(a.r2, b.r1)), ""

    checks = [("determinism", determinism), ("label swap", swap)]
    return [_run("sde", name, fn) for name, fn in checks]


SUITE_FUNCTIONS = {
    "bessel": bessel_suite,
    "selfcons": selfcons_suite,
    "bifurcation": bifurcation_suite,
    "disorder": disorder_suite,
    "pde": pde_suite,
    "sde": sde_suite,
}


def run_suite(name: str) -> list[Check]:
    names = list(SUITE_FUNCTIONS) if name == "all" else [name]
    checks = []
    for n in names:
        start = time.perf_counter()
        checks.extend(SUITE_FUNCTIONS[n]())
        checks.append(Check(n, "(elapsed)", True, f"{time.perf_counter() - start:.2f} s"))
    return checks


def format_table(checks) -> str:
    width = max(len(c.name) for c in checks)
    lines = []
    for c in checks:
        status = "    " if c.name == "(elapsed)" else ("PASS" if c.passed else "FAIL")
        lines.append(f"{status}  {c.suite:<12} {c.name:<{width}}  {c.detail}".rstrip())
    return "\n".join(lines) + "\n"
