"""Fixed points of the zero-disorder self-consistency map.

For ``psi`` in {0, pi} the map reads

    r1 = V(K r1 + L' r2),   r2 = V(K r2 + L' r1),   L' = L cos(psi),

with V extended oddly to negative arguments. Every fixed point is found by
damped Newton iteration from a uniform grid of seeds over [0, 1]^2.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .bessel import v_and_prime, v_fn, v_prime
from .coupling import SymmetricCoupling
from .errors import DomainError, NotApplicable

UNSYNCHRONIZED = "unsynchronized"
SYMMETRIC = "symmetric"
NON_SYMMETRIC = "non_symmetric"

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 80
DEDUP_TOL = 1e-7
SYMMETRY_TOL = 1e-9


@dataclass(frozen=True)
class FixedPoint:
    r1: float
    r2: float
    kind: str
    jacobian_eigenvalues: tuple
    residual: float

    def swapped_close(self, other: "FixedPoint", tol: float = DEDUP_TOL) -> bool:
        return abs(self.r1 - other.r2) <= tol and abs(self.r2 - other.r1) <= tol


@dataclass
class SolutionSet:
    coupling: SymmetricCoupling
    points: list
    failed_seeds: int = 0
    diagnostics: dict = field(default_factory=dict)

    def of_kind(self, kind):
        return [p for p in self.points if p.kind == kind]

    @property
    def symmetric_r(self):
        """The positive symmetric level, or None below the critical line."""
        sym = self.of_kind(SYMMETRIC)
        return sym[0].r1 if sym else None


def _check_unit(r, name):
    if not (0.0 <= r <= 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {r!r}")


def _rhs(r1, r2, K, Lp):
    return v_fn(K * r1 + Lp * r2), v_fn(K * r2 + Lp * r1)


def selfcons_rhs(r1, r2, c: SymmetricCoupling):
    """Right-hand sides of both self-consistency equations at (r1, r2)."""
    _check_unit(r1, "r1")
    _check_unit(r2, "r2")
    return _rhs(float(r1), float(r2), c.K, c.effective_l)


def jacobian(r1, r2, c: SymmetricCoupling) -> np.ndarray:
    """Jacobian of (r1, r2) -> selfcons_rhs(r1, r2)."""
    _check_unit(r1, "r1")
    _check_unit(r2, "r2")
    K, Lp = c.K, c.effective_l
    da = v_prime(K * r1 + Lp * r2)
    db = v_prime(K * r2 + Lp * r1)
    return np.array([[K * da, Lp * da], [Lp * db, K * db]])


def _symmetric_level_scalar(g):
    if g <= 2.0:
        return 0.0
    # f(r) = V(g r) - r is positive on (0, r) and negative on (r, 1]
    return brentq(lambda r: v_fn(g * r) - r, 1e-300, 1.0, xtol=1e-300, rtol=4 * np.finfo(float).eps)


def symmetric_level(gain):
    """Positive root of ``r = V(gain * r)``, or 0.0 when ``gain <= 2``.

    Accepts a scalar or an array of gains.
    """
    g = np.asarray(gain, dtype=float)
    if g.ndim == 0:
        return _symmetric_level_scalar(float(g))
    return np.array([_symmetric_level_scalar(float(v)) for v in g.ravel()]).reshape(g.shape)


# Cubic Hermite table of V for the seed sweep: the sweep evaluates V on
# ~10^4-10^5 points per coupling and the table is an order of magnitude
# cheaper than the series. Interpolation error is ~1e-14; converged points
# are polished and their residuals checked with the reference V.
_TABLE_STEP = 1.0 / 512.0
_TABLE_MAX = 64.0
_TABLE_X = np.arange(0.0, _TABLE_MAX + 2 * _TABLE_STEP, _TABLE_STEP)
_TABLE_V, _TABLE_D = v_and_prime(_TABLE_X)
_TABLE_HD = _TABLE_STEP * _TABLE_D


def _sweep_v_and_prime(x):
    """(V, V') from the Hermite table, falling back to the series outside it."""
    ax = np.abs(x)
    inside = ax < _TABLE_MAX
    if not np.all(inside):
        v, d = np.empty_like(x), np.empty_like(x)
        v[inside], d[inside] = _sweep_v_and_prime(x[inside])
        v[~inside], d[~inside] = v_and_prime(x[~inside])
        return v, d
    t = ax * (1.0 / _TABLE_STEP)
    j = t.astype(np.intp)
    s = t - j
    s2 = s * s
    s1 = 1.0 - s
    v = (s1 * s1 * ((1.0 + 2.0 * s) * _TABLE_V[j] + s * _TABLE_HD[j])
         + s2 * ((3.0 - 2.0 * s) * _TABLE_V[j + 1] - s1 * _TABLE_HD[j + 1]))
    v = np.copysign(v, x)
    tiny = ax < 1e-4
    x2 = x * x
    ratio = np.where(tiny, 0.5 - x2 / 16.0 + x2 * x2 / 96.0, v / np.where(tiny, 1.0, x))
    return v, 1.0 - ratio - v * v


def _polish(r1, r2, K, Lp, steps=3):
    """A few plain Newton steps on an already converged point."""
    x = np.array([r1, r2], dtype=float)
    for _ in range(steps):
        a, b = K * x[0] + Lp * x[1], K * x[1] + Lp * x[0]
        g = np.array([v_fn(a) - x[0], v_fn(b) - x[1]])
        if np.max(np.abs(g)) == 0.0:
            break
        da, db = v_prime(a), v_prime(b)
        jac = np.array([[K * da - 1.0, Lp * da], [Lp * db, K * db - 1.0]])
        try:
            cand = x - np.linalg.solve(jac, g)
        except np.linalg.LinAlgError:
            break
        gc = np.array([v_fn(K * cand[0] + Lp * cand[1]) - cand[0], v_fn(K * cand[1] + Lp * cand[0]) - cand[1]])
        if np.max(np.abs(gc)) >= np.max(np.abs(g)):
            break
        x = cand
    return float(x[0]), float(x[1])


_HALVINGS = 30
_BATCH = 3


def _newton_all(seeds, K, Lp):
    """Vectorised damped Newton on G(r) = V(M r) - r from every seed.

    ``K`` and ``Lp`` are per-seed arrays, so seeds of many couplings can be
    iterated together. A step is halved until the max-norm of G decreases (at
    most 30 times); candidate step lengths are evaluated a few at a time.
    Returns the final iterates and a mask of seeds that converged.
    """
    x1, x2 = seeds[:, 0].copy(), seeds[:, 1].copy()
    n = len(x1)
    alive = np.ones(n, dtype=bool)

    def evaluate(y1, y2, k, lp):
        m = len(y1)
        v, d = _sweep_v_and_prime(np.concatenate([k * y1 + lp * y2, k * y2 + lp * y1]))
        g1, g2 = v[:m] - y1, v[m:] - y2
        return g1, g2, np.maximum(np.abs(g1), np.abs(g2)), d[:m], d[m:]

    G1, G2, norm, da, db = evaluate(x1, x2, K, Lp)
    act = np.flatnonzero(norm > NEWTON_TOL)
    powers = 0.5 ** np.arange(1, _BATCH + 1)
    for _ in range(NEWTON_MAX_ITER):
        if act.size == 0:
            break
        y1, y2, g1, g2, old, k, lp = x1[act], x2[act], G1[act], G2[act], norm[act], K[act], Lp[act]
        j11, j12 = k * da[act] - 1.0, lp * da[act]
        j21, j22 = lp * db[act], k * db[act] - 1.0
        det = j11 * j22 - j12 * j21
        singular = np.abs(det) <= 1e-300
        det[singular] = 1.0
        s1 = (j22 * g1 - j12 * g2) / det
        s2 = (j11 * g2 - j21 * g1) / det
        t1, t2 = y1 - s1, y2 - s2
        n1, n2, newnorm, nda, ndb = evaluate(t1, t2, k, lp)
        lam = np.ones(act.size)
        for _ in range(0, _HALVINGS, _BATCH):
            worse = np.flatnonzero(newnorm >= old)
            if worse.size == 0:
                break
            # try lam/2, lam/4, ... at once and keep the first that improves
            scale = (lam[worse, None] * powers[None, :]).ravel()
            idx = np.repeat(worse, _BATCH)
            c1 = y1[idx] - scale * s1[idx]
            c2 = y2[idx] - scale * s2[idx]
            cg1, cg2, cnorm, cda, cdb = evaluate(c1, c2, k[idx], lp[idx])
            ok = (cnorm < old[idx]).reshape(-1, _BATCH)
            pick = np.where(ok.any(axis=1), ok.argmax(axis=1), _BATCH - 1)
            flat = np.arange(worse.size) * _BATCH + pick
            lam[worse] = scale[flat]
            t1[worse], t2[worse] = c1[flat], c2[flat]
            n1[worse], n2[worse], newnorm[worse] = cg1[flat], cg2[flat], cnorm[flat]
            nda[worse], ndb[worse] = cda[flat], cdb[flat]
        x1[act], x2[act], G1[act], G2[act], norm[act] = t1, t2, n1, n2, newnorm
        da[act], db[act] = nda, ndb
        # iterates that leave the box cannot reach a fixed point in [0, 1)^2
        bad = singular | (newnorm >= old) | (np.abs(t1) > 2.0) | (np.abs(t2) > 2.0)
        bad |= ~(np.isfinite(t1) & np.isfinite(t2))
        alive[act[bad]] = False
        act = act[~bad & (newnorm > NEWTON_TOL)]
    return np.column_stack([x1, x2]), alive & (norm <= NEWTON_TOL)


def _dedup(points, tol=DEDUP_TOL):
    """Cluster points in the max-norm; each cluster is represented by its
    lexicographically smallest member, and representatives are returned sorted."""
    kept = []
    pts = points
    while len(pts):
        near = np.max(np.abs(pts - pts[0]), axis=1) <= tol
        cluster = pts[near]
        kept.append(cluster[np.lexsort((cluster[:, 1], cluster[:, 0]))[0]])
        pts = pts[~near]
    kept.sort(key=lambda p: (p[0], p[1]))
    return kept


def _make_point(r1, r2, c: SymmetricCoupling) -> FixedPoint:
    K, Lp = c.K, c.effective_l
    if max(abs(r1), abs(r2)) <= SYMMETRY_TOL:
        r1 = r2 = 0.0
        kind = UNSYNCHRONIZED
    elif abs(r1 - r2) <= SYMMETRY_TOL:
        r1 = r2 = symmetric_level(c.symmetric_gain)
        kind = SYMMETRIC
    else:
        assert min(r1, r2) > SYMMETRY_TOL, (
            f"fixed point with one vanishing level found at ({r1}, {r2})"
        )
        kind = NON_SYMMETRIC
        r1, r2 = _polish(r1, r2, K, Lp)
    g1, g2 = _rhs(r1, r2, K, Lp)
    residual = max(abs(g1 - r1), abs(g2 - r2))
    eig = np.linalg.eigvals(jacobian(r1, r2, c))
    eig = tuple(sorted(float(e) for e in np.real(eig)))
    return FixedPoint(float(r1), float(r2), kind, eig, float(residual))


def _half_grid(grid):
    ticks = np.linspace(0.0, 1.0, grid)
    a, b = np.meshgrid(ticks, ticks, indexing="ij")
    upper = a >= b
    # the map commutes with the swap (r1, r2) -> (r2, r1): seed one half only
    return np.column_stack([a[upper], b[upper]])


def _assemble(c: SymmetricCoupling, roots, failed, grid, runs) -> SolutionSet:
    roots = np.vstack([roots, roots[:, ::-1]])
    # negative mirror images (-r1, -r2) are fixed points too, but not levels
    roots = roots[np.all(roots >= -SYMMETRY_TOL, axis=1)]
    roots = np.vstack([roots, [[0.0, 0.0]]])
    points = [_make_point(float(a), float(b), c) for a, b in _dedup(roots)]
    # symmetric snapping can merge distinct raw roots; deduplicate again
    unique = []
    for p in points:
        if not any(abs(p.r1 - q.r1) <= DEDUP_TOL and abs(p.r2 - q.r2) <= DEDUP_TOL for q in unique):
            unique.append(p)
    for p in list(unique):
        if p.kind == NON_SYMMETRIC and not any(p.swapped_close(q) for q in unique):
            unique.append(_make_point(p.r2, p.r1, c))
    unique.sort(key=lambda p: (p.r1, p.r2))
    return SolutionSet(c, unique, failed_seeds=failed, diagnostics={"seeds": grid * grid, "newton_runs": runs})


def find_all_solutions_many(couplings, grid: int = 64, chunk: int = 32) -> list:
    """:func:`find_all_solutions` for a sequence of couplings.

    Seeds of up to ``chunk`` couplings are iterated as one array, which
    amortises the per-iteration overhead in parameter sweeps. Results are
    identical to calling :func:`find_all_solutions` on each coupling.
    """
    couplings = list(couplings)
    seeds = _half_grid(grid)
    ns = len(seeds)
    out = []
    for start in range(0, len(couplings), chunk):
        block = couplings[start:start + chunk]
        K = np.repeat([c.K for c in block], ns)
        Lp = np.repeat([c.effective_l for c in block], ns)
        r, ok = _newton_all(np.tile(seeds, (len(block), 1)), K, Lp)
        for i, c in enumerate(block):
            sl = slice(i * ns, (i + 1) * ns)
            good = ok[sl]
            out.append(_assemble(c, r[sl][good], int(np.count_nonzero(~good)), grid, ns))
    return out


def find_all_solutions(c: SymmetricCoupling, grid: int = 64) -> SolutionSet:
    """All fixed points of the self-consistency map in [0, 1)^2.

    Damped Newton runs from a ``grid x grid`` lattice of seeds; converged
    iterates are merged at tolerance 1e-7, classified, and completed under the
    swap symmetry.
    """
    return find_all_solutions_many([c], grid=grid)[0]


def vector_field_grid(c: SymmetricCoupling, n: int = 32) -> np.ndarray:
    """Sample ``(V(K r1 + L' r2) - r1, V(K r2 + L' r1) - r2)`` on an n x n grid.

    Returns an ``(n*n, 4)`` array with columns r1, r2, v1, v2.
    """
    if not (8 <= n <= 512):
        raise DomainError(f"grid size must be in [8, 512], got {n}")
    ticks = np.linspace(0.0, 1.0, n)
    r1, r2 = np.meshgrid(ticks, ticks, indexing="ij")
    r1, r2 = r1.ravel(), r2.ravel()
    g1, g2 = _rhs(r1, r2, c.K, c.effective_l)
    return np.column_stack([r1, r2, g1 - r1, g2 - r2])


def field_at(r1, r2, c: SymmetricCoupling):
    g1, g2 = _rhs(r1, r2, c.K, c.effective_l)
    return g1 - r1, g2 - r2


def verify_ordering(s: SolutionSet) -> bool:
    """Check ``r2 < r_sym < r1`` for every non-symmetric point with ``r1 > r2``.

    Raises NotApplicable unless the set holds a symmetric point and at least
    one non-symmetric pair.
    """
    sym = s.of_kind(SYMMETRIC)
    nonsym = s.of_kind(NON_SYMMETRIC)
    if not sym or len(nonsym) < 2:
        raise NotApplicable("ordering needs a symmetric point and a non-symmetric pair")
    r = sym[0].r1
    for p in nonsym:
        hi, lo = max(p.r1, p.r2), min(p.r1, p.r2)
        if not (lo < r < hi):
            return False
    return True


def solution_rows(s: SolutionSet):
    """Rows (r1, r2, kind, eig1, eig2, residual) for CSV output."""
    return [
        (p.r1, p.r2, p.kind, p.jacobian_eigenvalues[0], p.jacobian_eigenvalues[1], p.residual)
        for p in s.points
    ]
