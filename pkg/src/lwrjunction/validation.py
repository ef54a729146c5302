"""Seeded self-check suite comparing the solver with the brute-force oracles.

Every check returns a plain dict (name, passed, cases, worst) so the report
is JSON-ready and byte-identical for a given seed and instance count.
"""
from __future__ import annotations

from typing import Any

import numpy as np

from . import cases, oracle
from .junction_flux import critical_demand_level, flux, noninvariant_flux
from .riemann import RiemannInput, interior_reevaluation, solve

EQUIV_TOL = 1e-12
CONSISTENCY_TOL = 1e-10
WAVE_ZERO_TOL = 1e-12


def _check(name: str, passed: bool, cases_run: int, worst: float, **extra) -> dict[str, Any]:
    return {"name": name, "passed": bool(passed), "cases": cases_run, "worst": float(worst), **extra}


def check_operator_order() -> dict[str, Any]:
    j, d, s = cases.order_counterexample()
    ex = oracle.g_exhaustive(j, d, s, exact=True)
    res = flux(j, d, s)
    ok = ex.min_max == 1.5 and ex.max_min == 0.75 and res.f_up == (0.5, 0.5)
    return _check("operator_order_counterexample", ok, 1, 0.0,
                  min_max=str(ex.min_max), max_min=str(ex.max_min), f_up=list(res.f_up))


def check_prefix_vs_exhaustive(rng: np.random.Generator, per_shape: int, max_m: int = 8, max_n: int = 4
                               ) -> tuple[dict[str, Any], dict[str, Any]]:
    """Prefix algorithm against full enumeration, plus the structure of the congested set."""
    worst_g, worst_sep = 0.0, 0.0
    count, congested, bad_sep = 0, 0, 0
    for m in range(1, max_m + 1):
        for n in range(1, max_n + 1):
            for _ in range(per_shape):
                j = oracle.random_junction(rng, m, n)
                mu, nu = oracle.random_levels(rng, j)
                br = critical_demand_level(j, mu, nu)
                ex = oracle.g_exhaustive(j, mu, nu)
                worst_g = max(worst_g, abs(br.g - ex.min_max))
                count += 1
                if min(br.residue) < 0:
                    congested += 1
                    worst_sep = max(worst_sep, abs(ex.min_max - ex.max_min))
                    inside = [mu[a] for a in br.A_star]
                    outside = [mu[a] for a in range(m) if a not in br.A_star]
                    if not inside or min(inside) <= br.theta or (outside and max(outside) > br.theta):
                        bad_sep += 1
    return (
        _check("prefix_equals_exhaustive", worst_g <= EQUIV_TOL, count, worst_g),
        _check("congested_set_structure", worst_sep <= EQUIV_TOL and bad_sep == 0, congested, worst_sep,
               separation_failures=bad_sep),
    )


def check_special_cases(rng: np.random.Generator, instances: int) -> list[dict[str, Any]]:
    worst_merge = 0.0
    for _ in range(instances):
        j = oracle.random_junction(rng, 2, 1)
        (d1, d2), (s,) = [rng.uniform(0, c) for c in j.up_capacity], [rng.uniform(0, j.down_capacity[0])]
        got = flux(j, [d1, d2], [s]).f_up
        want = oracle.fair_merge(j.up_capacity, (d1, d2), s)
        worst_merge = max(worst_merge, max(abs(a - b) for a, b in zip(got, want)))
    worst_div = 0.0
    for _ in range(instances):
        n = int(rng.integers(1, 6))
        j = oracle.random_junction(rng, 1, n)
        d = rng.uniform(0, j.up_capacity[0])
        s = [rng.uniform(0, c) for c in j.down_capacity]
        got = flux(j, [d], s).f_up[0]
        worst_div = max(worst_div, abs(got - oracle.fifo_diverge(d, j.xi[0], s)))
    return [
        _check("fair_merge_closed_form", worst_merge <= EQUIV_TOL, instances, worst_merge),
        _check("fifo_diverge_closed_form", worst_div <= EQUIV_TOL, instances, worst_div),
    ]


def riemann_property_worst(inp) -> dict[str, float]:
    """Worst violations of the solution-level properties on one input."""
    sol = solve(inp)
    again = solve(inp.with_densities(sol.stationary_density))
    cons = max(abs(a - b) for a, b in zip(sol.fluxes, again.fluxes))
    for u, v in zip(sol.stationary, again.stationary):
        cons = max(cons, abs(u.d - v.d), abs(u.s - v.s))
    first, second = interior_reevaluation(inp)
    interior = max(abs(a - b) for a, b in zip(first.fluxes, second.fluxes))
    m = inp.m
    wave = 0.0
    for i, w in enumerate(sol.waves):
        for v in w.speeds:
            wave = max(wave, v if i < m else -v)
    qflux = max(abs(u.flow - f) for u, f in zip(sol.stationary, sol.fluxes))
    return {"consistency": cons, "interior": interior, "wave": wave, "stationary_flux": qflux}


def check_riemann(rng: np.random.Generator, instances: int) -> list[dict[str, Any]]:
    worst = {"consistency": 0.0, "interior": 0.0, "wave": 0.0, "stationary_flux": 0.0}
    for _ in range(instances):
        inp = oracle.random_riemann_input(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)))
        for k, v in riemann_property_worst(inp).items():
            worst[k] = max(worst[k], v)
    first, second = interior_reevaluation(noninvariant_counterexample(), noninvariant_flux)
    gap = max(abs(a - b) for a, b in zip(first.fluxes, second.fluxes))
    return [
        _check("riemann_consistency", worst["consistency"] <= CONSISTENCY_TOL, instances, worst["consistency"]),
        _check("interior_reevaluation_exact", worst["interior"] == 0.0, instances, worst["interior"]),
        _check("noninvariant_flux_fails_reevaluation", gap > 1e-3, 1, gap),
        _check("wave_directions", worst["wave"] <= WAVE_ZERO_TOL, instances, worst["wave"]),
        _check("stationary_flow_equals_flux", worst["stationary_flux"] == 0.0, instances, worst["stationary_flux"]),
    ]


def noninvariant_counterexample():
    """Merge with d = [0.9, 0.3] into supply 0.8: proportional-to-demand
    sharing gives (0.6, 0.2) but (0.4, 0.4) once re-evaluated at the
    junction states it creates."""
    u = cases.UNIT
    return RiemannInput.from_links([u, u], [u], [[1.0], [1.0]], [0.9, 0.3, u.kj - 0.8 * (u.kj - u.kc)])


def check_grid_uniqueness(grid: int = oracle.MAX_GRID_POINTS) -> dict[str, Any]:
    worst, failures = 0.0, []
    for name in cases.UNIQUE_CASES:
        inp = cases.RIEMANN_CASES[name]()
        search = oracle.stationary_exhaustive(inp, grid)
        spread = search.spread(solve(inp).stationary_density)
        worst = max(worst, spread)
        if len(search.survivors) != 1 or spread > 1.0:
            failures.append(name)
    return _check("grid_stationary_unique", not failures, len(cases.UNIQUE_CASES), worst, failures=failures)


def run_suite(seed: int = 0, instances: int = 100, grid: int = oracle.MAX_GRID_POINTS) -> dict[str, Any]:
    rng = np.random.default_rng(seed)
    checks: list[dict[str, Any]] = [check_operator_order()]
    checks += check_prefix_vs_exhaustive(rng, instances)
    checks += check_special_cases(rng, instances)
    checks += check_riemann(rng, instances)
    checks.append(check_grid_uniqueness(grid))
    return {
        "seed": seed,
        "instances": instances,
        "grid": grid,
        "passed": all(c["passed"] for c in checks),
        "checks": checks,
    }
