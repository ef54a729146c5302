"""Brute-force references for the closed-form junction results.

Nothing here calls into the prefix algorithm of :mod:`junction_flux` or into
:func:`riemann.solve`; the two routes only meet in tests.

* :func:`g_exhaustive` enumerates every non-empty upstream subset for every
  downstream link and returns both the min-max and the max-min value.  With
  ``exact=True`` it works in rational arithmetic.
* :func:`stationary_exhaustive` grids the feasible stationary densities of
  every link and keeps the tuples that conserve flow at the junction and can
  be produced by the local flux function from some admissible interior state.

The module also holds the seeded random-instance generators shared by the
test-suite and the ``validate`` command.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import CapacityError, DomainError
from .fundamental_diagram import FundamentalDiagram, ABS_TOL, REL_TOL, Greenshields, TrafficState, Triangular
from .junction_flux import JunctionSpec
from .riemann import RiemannInput

MAX_EXHAUSTIVE_M = 20
MAX_GRID_LINKS = 4
MAX_GRID_POINTS = 200
ENTROPY_TOL = 1e-9
INTERIOR_SAMPLES = 8


@dataclass(frozen=True)
class ExhaustiveG:
    min_max: float
    max_min: float
    argmin_b: int
    arg_subset: frozenset[int]


@lru_cache(maxsize=None)
def subset_masks(m: int) -> np.ndarray:
    """All 2^m - 1 non-empty subsets of range(m) as a boolean (2^m - 1, m) array."""
    codes = np.arange(1, 2**m, dtype=np.int64)
    return ((codes[:, None] >> np.arange(m)) & 1).astype(bool)


def _exact(x) -> Fraction:
    # decimal inputs are taken at face value: 0.8 means 4/5
    return x if isinstance(x, Fraction) else Fraction(str(x))


def _g_exact(j: JunctionSpec, mu, nu) -> ExhaustiveG:
    m, n = j.m, j.n
    cap_up = [_exact(c) for c in j.up_capacity]
    cap_down = [_exact(c) for c in j.down_capacity]
    cab = [[cap_up[a] * _exact(j.xi[a][b]) for b in range(n)] for a in range(m)]
    mu = [_exact(v) for v in mu]
    nu = [_exact(v) for v in nu]
    subsets = [frozenset(s) for r in range(1, m + 1) for s in itertools.combinations(range(m), r)]

    def gamma(b, A1):
        num = cap_down[b] * nu[b] - sum((cab[a][b] * mu[a] for a in range(m) if a not in A1), Fraction(0))
        return num / sum((cab[a][b] for a in A1), Fraction(0))

    table = {(b, A1): gamma(b, A1) for b in range(n) for A1 in subsets}
    per_b = [max(table[b, A1] for A1 in subsets) for b in range(n)]
    min_max = min(per_b)
    per_set = {A1: min(table[b, A1] for b in range(n)) for A1 in subsets}
    max_min = max(per_set.values())
    best = min((A1 for A1 in subsets if per_set[A1] == max_min), key=lambda s: (len(s), sorted(s)))
    return ExhaustiveG(min_max, max_min, per_b.index(min_max), best)


def gamma_table(j: JunctionSpec, mu, nu) -> np.ndarray:
    """gamma_b(A1) for every subset (rows, in :func:`subset_masks` order) and b (columns)."""
    masks = subset_masks(j.m)
    cab = j.directed_capacity()
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    outside = (~masks).astype(float) @ (cab * mu[:, None])
    num = np.asarray(j.down_capacity) * nu - outside
    return num / (masks.astype(float) @ cab)


def g_exhaustive(j: JunctionSpec, mu, nu, exact: bool = False) -> ExhaustiveG:
    """min_b max_A1 gamma_b(A1) and max_A1 min_b gamma_b(A1) by full enumeration."""
    if j.m > MAX_EXHAUSTIVE_M:
        raise CapacityError(f"exhaustive enumeration capped at m <= {MAX_EXHAUSTIVE_M}, got m={j.m}")
    if len(mu) != j.m or len(nu) != j.n:
        raise DomainError("level vectors do not match the junction")
    if exact:
        return _g_exact(j, mu, nu)
    table = gamma_table(j, mu, nu)
    per_b = table.max(axis=0)
    argmin_b = int(np.argmin(per_b))
    per_set = table.min(axis=1)
    max_min = float(per_set.max())
    masks = subset_masks(j.m)
    tied = np.flatnonzero(per_set >= max_min - 1e-12 * max(1.0, abs(max_min)))
    pick = tied[np.argmin(masks[tied].sum(axis=1))]
    return ExhaustiveG(float(per_b[argmin_b]), max_min, argmin_b, frozenset(np.flatnonzero(masks[pick]).tolist()))


def theta_exhaustive_batch(j: JunctionSpec, mu: np.ndarray, nu: np.ndarray) -> np.ndarray:
    """Critical demand level for K level vectors at once (mu: K x m, nu: K x n)."""
    masks = subset_masks(j.m).astype(float)
    cab = j.directed_capacity()
    mu = np.atleast_2d(mu)
    nu = np.atleast_2d(nu)
    den = masks @ cab  # (S, n)
    # outside[k, s, b] = sum over a not in subset s of cab[a, b] mu[k, a]
    outside = np.einsum("sa,ab,ka->ksb", 1.0 - masks, cab, mu)
    num = (np.asarray(j.down_capacity) * nu)[:, None, :] - outside
    g = (num / den[None]).max(axis=1).min(axis=1)
    return np.minimum(mu.max(axis=1), g)


# -- stationary-state grid search -------------------------------------------------
#
# Each grid point stands for its cell [k - h/2, k + h/2] clipped to the link's
# feasible stationary region.  Over such a piece the flow is monotone, so the
# candidate carries a flux interval; the strict inequalities of the feasible
# regions make that interval open on one side.  The two exact feasible points
# (the unthrottled states) are added as zero-width candidates.


@dataclass(frozen=True)
class _Candidate:
    density: float
    lo: float
    hi: float
    interior: tuple[float, ...]  # admissible interior demand (upstream) / supply (downstream) values

    @property
    def flow(self) -> float:
        return 0.5 * (self.lo + self.hi)


@dataclass(frozen=True)
class StationarySearch:
    """Survivors of the grid search.

    ``survivors`` holds density tuples (link order as in the input) and
    ``residuals`` the worst entropy-condition mismatch of each; ``spacing``
    is the density grid step per link.
    """

    survivors: tuple[tuple[float, ...], ...]
    residuals: tuple[float, ...]
    spacing: tuple[float, ...]

    def best(self) -> tuple[float, ...]:
        return self.survivors[int(np.argmin(self.residuals))]

    def spread(self, reference: Sequence[float]) -> float:
        """Largest distance, in grid cells, from ``reference`` to any survivor."""
        return max(
            (max(abs(a - b) / h for a, b, h in zip(sv, reference, self.spacing)) for sv in self.survivors),
            default=math.inf,
        )


def _strict_below(bound: float) -> float:
    return bound - max(ABS_TOL, REL_TOL * abs(bound))


def _interior_values(stationary: float, grid_values: np.ndarray, admits: np.ndarray) -> tuple[float, ...]:
    # the admissible family is an interval of values; a handful of evenly
    # spread samples plus the stationary value keeps the product small
    pool = np.unique(grid_values[admits])
    if len(pool) > INTERIOR_SAMPLES:
        pool = pool[np.linspace(0, len(pool) - 1, INTERIOR_SAMPLES).round().astype(int)]
    return tuple(sorted({stationary} | {float(v) for v in pool}))


def _link_candidates(fd: FundamentalDiagram, k0: float, grid: np.ndarray, upstream: bool) -> list[_Candidate]:
    c, kc, kj = fd.capacity, fd.critical_density, fd.jam_density
    h = grid[1] - grid[0]
    dem, sup = fd.demand(grid), fd.supply(grid)
    out = []
    if upstream:
        d0 = float(fd.demand(k0))
        # unthrottled: (d0, C); throttled: k > kb, i.e. (C, s) with s < d0
        k_ex = fd.density_from_state(TrafficState(d0, c))
        out.append(_Candidate(k_ex, d0, d0, _interior_values(d0, dem, sup >= d0)))
        kb = fd._inverse_supply(d0) if d0 < c else kc
        for k in grid:
            lo_k, hi_k = max(k - h / 2, kb, kc), min(k + h / 2, kj)
            if lo_k >= hi_k:
                continue
            q_lo, q_hi = float(fd.flow(hi_k)), float(fd.flow(lo_k))
            if lo_k == max(kb, kc):
                q_hi = min(q_hi, _strict_below(d0))
            if q_lo <= q_hi:
                out.append(_Candidate(float(k), q_lo, q_hi, (c,)))
    else:
        s0 = float(fd.supply(k0))
        # unthrottled: (C, s0); throttled: k < kb, i.e. (d, C) with d < s0
        k_ex = fd.density_from_state(TrafficState(c, s0))
        out.append(_Candidate(k_ex, s0, s0, _interior_values(s0, sup, dem >= s0)))
        kb = fd._inverse_demand(s0) if s0 < c else kc
        for k in grid:
            lo_k, hi_k = max(k - h / 2, 0.0), min(k + h / 2, kb, kc)
            if lo_k >= hi_k:
                continue
            q_lo, q_hi = float(fd.flow(lo_k)), float(fd.flow(hi_k))
            if hi_k == min(kb, kc):
                q_hi = min(q_hi, _strict_below(s0))
            if q_lo <= q_hi:
                out.append(_Candidate(float(k), q_lo, q_hi, (c,)))
    return out


def _box_feasible(lo: np.ndarray, hi: np.ndarray, xi: np.ndarray, lo_b: np.ndarray, hi_b: np.ndarray,
                  slack: float = 1e-12) -> bool:
    """Is there f with lo <= f <= hi and lo_b <= f @ xi <= hi_b?  Fourier-Motzkin."""
    m = len(lo)
    rows = []  # a . f <= c
    for a in range(m):
        e = np.zeros(m)
        e[a] = 1.0
        rows += [(e, hi[a]), (-e, -lo[a])]
    for b in range(xi.shape[1]):
        rows += [(xi[:, b].copy(), hi_b[b]), (-xi[:, b], -lo_b[b])]
    for v in range(m):
        pos = [r for r in rows if r[0][v] > 0]
        neg = [r for r in rows if r[0][v] < 0]
        keep = [r for r in rows if r[0][v] == 0]
        for ap, cp in pos:
            for an, cn in neg:
                wp, wn = -an[v], ap[v]
                keep.append((wp * ap + wn * an, wp * cp + wn * cn))
        rows = keep
    return all(c >= -slack for _, c in rows)


def stationary_exhaustive(inp: RiemannInput, grid: int = MAX_GRID_POINTS) -> StationarySearch:
    """Grid search over stationary states; see module docstring."""
    m, n = inp.m, inp.n
    if m + n > MAX_GRID_LINKS:
        raise CapacityError(f"grid search capped at m + n <= {MAX_GRID_LINKS}, got {m + n}")
    if not 2 <= grid <= MAX_GRID_POINTS:
        raise CapacityError(f"grid must have between 2 and {MAX_GRID_POINTS} points, got {grid}")
    j = inp.junction
    grids = [np.linspace(0.0, fd.jam_density, grid) for fd in inp.fds]
    cands = [
        _link_candidates(fd, k0, g, i < m)
        for i, (fd, k0, g) in enumerate(zip(inp.fds, inp.k0, grids))
    ]
    xi = np.asarray(j.xi)
    cap_up = np.asarray(j.up_capacity)
    cap_down = np.asarray(j.down_capacity)

    survivors, residuals = [], []
    for ups in itertools.product(*cands[:m]):
        lo = np.array([u.lo for u in ups])
        hi = np.array([u.hi for u in ups])
        r_lo, r_hi = lo @ xi, hi @ xi
        matches = [[c for c in cands[m + b] if c.lo <= r_hi[b] + 1e-12 and c.hi >= r_lo[b] - 1e-12]
                   for b in range(n)]
        for downs in itertools.product(*matches):
            lo_b = np.array([d.lo for d in downs])
            hi_b = np.array([d.hi for d in downs])
            if not _box_feasible(lo, hi, xi, lo_b, hi_b):
                continue
            links = ups + downs
            # interior values are exact, so produced fluxes must land in the
            # upstream intervals up to roundoff
            slack = ENTROPY_TOL * max(1.0, float(hi.max()))
            values = np.array(list(itertools.product(*(c.interior for c in links))))
            theta0 = theta_exhaustive_batch(j, values[:, :m] / cap_up, values[:, m:] / cap_down)
            produced = np.minimum(values[:, :m], theta0[:, None] * cap_up)
            miss = float(np.maximum(lo - produced, produced - hi).clip(min=0.0).max(axis=1).min())
            if miss <= slack:
                survivors.append(tuple(c.density for c in links))
                residuals.append(miss)
    return StationarySearch(tuple(survivors), tuple(residuals),
                            tuple(float(g[1] - g[0]) for g in grids))


# -- random instances ------------------------------------------------------------


def random_junction(rng: np.random.Generator, m: int, n: int) -> JunctionSpec:
    up = rng.uniform(0.5, 2.0, m)
    down = rng.uniform(0.5, 2.0, n)
    xi = rng.dirichlet(np.ones(n), size=m) if n > 1 else np.ones((m, 1))
    xi = np.maximum(xi, 1e-3)
    xi /= xi.sum(axis=1, keepdims=True)
    return JunctionSpec(up.tolist(), down.tolist(), xi.tolist())


def random_levels(rng: np.random.Generator, j: JunctionSpec) -> tuple[list[float], list[float]]:
    """Demand and supply levels in [0, 1]; a quarter of draws are snapped to
    tenths so ties and boundary values get exercised."""
    mu = rng.uniform(0.0, 1.0, j.m)
    nu = rng.uniform(0.0, 1.0, j.n)
    if rng.uniform() < 0.25:
        mu = np.round(mu, 1)
        nu = np.round(nu, 1)
    return mu.tolist(), nu.tolist()


def random_fd(rng: np.random.Generator) -> FundamentalDiagram:
    vf = float(rng.uniform(0.5, 2.0))
    kj = float(rng.uniform(1.0, 5.0))
    if rng.uniform() < 0.5:
        return Greenshields(vf, kj)
    return Triangular(vf, kj, float(kj * rng.uniform(0.15, 0.6)))


def random_riemann_input(rng: np.random.Generator, m: int, n: int) -> RiemannInput:
    fds = [random_fd(rng) for _ in range(m + n)]
    xi = rng.dirichlet(np.ones(n), size=m) if n > 1 else np.ones((m, 1))
    xi = np.maximum(xi, 1e-3)
    xi /= xi.sum(axis=1, keepdims=True)
    k0 = [float(rng.uniform(0.0, fd.jam_density)) for fd in fds]
    return RiemannInput.from_links(fds[:m], fds[m:], xi.tolist(), k0)


def levels_of(j: JunctionSpec, d_up: Sequence[float], s_down: Sequence[float]) -> tuple[list[float], list[float]]:
    return ([d / c for d, c in zip(d_up, j.up_capacity)], [s / c for s, c in zip(s_down, j.down_capacity)])


# -- closed forms for the two classical special cases ------------------------------


def fair_merge(c_up: Sequence[float], d: Sequence[float], s: float) -> tuple[float, float]:
    """Two-into-one merge sharing the supply in proportion to capacity.

    Each upstream link gets its demand if it fits in its capacity share,
    otherwise its share plus whatever the other link leaves unused.
    """
    (c1, c2), (d1, d2) = c_up, d
    if d1 + d2 <= s:
        return d1, d2
    a1 = c1 / (c1 + c2)
    f1 = min(d1, max(s - d2, a1 * s))
    f2 = min(d2, max(s - d1, (1.0 - a1) * s))
    return f1, f2


def fifo_diverge(d: float, xi: Sequence[float], s: Sequence[float]) -> float:
    """One-into-many diverge where a blocked branch holds back all traffic."""
    return min([d] + [sb / x for sb, x in zip(s, xi)])
