from fractions import Fraction

import numpy as np
import pytest

from lwrjunction import cases, oracle
from lwrjunction.errors import CapacityError
from lwrjunction.junction_flux import JunctionSpec, critical_demand_level
from lwrjunction.riemann import solve

MERGE = JunctionSpec([1.0, 1.0], [2.0], [[1.0], [1.0]])


def test_subset_masks():
    masks = oracle.subset_masks(3)
    assert masks.shape == (7, 3)
    assert len({tuple(r) for r in masks}) == 7
    assert masks.any(axis=1).all()


def test_exact_counterexample():
    j, d, s = cases.order_counterexample()
    ex = oracle.g_exhaustive(j, d, s, exact=True)
    assert ex.min_max == Fraction(3, 2)
    assert ex.max_min == Fraction(3, 4)
    assert ex.arg_subset == frozenset({0})


def test_float_counterexample():
    j, d, s = cases.order_counterexample()
    ex = oracle.g_exhaustive(j, d, s)
    assert ex.min_max == pytest.approx(1.5, abs=1e-12)
    assert ex.max_min == pytest.approx(0.75, abs=1e-12)


def test_merge_orders_agree():
    # subsets {1}, {2}, {1,2} with mu = [0.6, 0.8], nu = 0.5
    ex = oracle.g_exhaustive(MERGE, [0.6, 0.8], [0.5], exact=True)
    assert ex.min_max == ex.max_min == Fraction(1, 2)


def test_zero_demand_reduces_to_supply_term():
    # every gamma is C_b nu_b / sum over A1 of C_ab, largest for a single link
    j = JunctionSpec([1.0, 2.0], [1.5, 1.0], [[0.5, 0.5], [0.25, 0.75]])
    ex = oracle.g_exhaustive(j, [0.0, 0.0], [0.4, 0.6], exact=True)
    assert ex.min_max == Fraction(6, 5)
    assert critical_demand_level(j, [0.0, 0.0], [0.4, 0.6]).theta == 0.0
    one = JunctionSpec([2.0], [1.5, 1.0], [[0.25, 0.75]])
    assert oracle.g_exhaustive(one, [0.0], [0.4, 0.6], exact=True).min_max == Fraction(2, 5)


def test_size_caps():
    j = oracle.random_junction(np.random.default_rng(0), 21, 1)
    with pytest.raises(CapacityError):
        oracle.g_exhaustive(j, [0.5] * 21, [0.5])
    inp = oracle.random_riemann_input(np.random.default_rng(0), 3, 2)
    with pytest.raises(CapacityError):
        oracle.stationary_exhaustive(inp)
    with pytest.raises(CapacityError):
        oracle.stationary_exhaustive(cases.merge(), grid=201)


def test_batch_theta_matches_single():
    rng = np.random.default_rng(3)
    j = oracle.random_junction(rng, 4, 3)
    mu = rng.uniform(size=(50, 4))
    nu = rng.uniform(size=(50, 3))
    got = oracle.theta_exhaustive_batch(j, mu, nu)
    want = [critical_demand_level(j, list(a), list(b)).theta for a, b in zip(mu, nu)]
    assert np.max(np.abs(got - want)) <= 1e-12


@pytest.mark.parametrize("name", cases.UNIQUE_CASES)
def test_grid_survivor_is_unique(name):
    inp = cases.RIEMANN_CASES[name]()
    search = oracle.stationary_exhaustive(inp, 200)
    assert len(search.survivors) == 1
    assert search.spread(solve(inp).stationary_density) <= 1.0


def test_linear_congested_survivor():
    search = oracle.stationary_exhaustive(cases.linear_congested(), 200)
    # SOC upstream and OC downstream, both at flow 0.5 (density 2.5)
    assert search.best() == pytest.approx((2.5, 2.5), abs=search.spacing[0])


def test_all_critical_survivors_stay_near_capacity():
    inp = cases.all_critical()
    search = oracle.stationary_exhaustive(inp, 100)
    assert search.survivors
    assert search.spread(solve(inp).stationary_density) <= 1.0
    assert solve(inp).stationary_density == (1.0,) * 4


def test_survivors_collapse_as_grid_refines():
    inp = cases.merge()
    ref = solve(inp).stationary_density
    coarse = oracle.stationary_exhaustive(inp, 50)
    fine = oracle.stationary_exhaustive(inp, 200)
    width = lambda s: max(max(abs(a - b) for a, b in zip(sv, ref)) for sv in s.survivors)
    assert width(fine) <= width(coarse)


def test_closed_forms():
    assert oracle.fair_merge([1.0, 1.0], [0.6, 0.8], 1.0) == (0.5, 0.5)
    assert oracle.fair_merge([1.0, 1.0], [0.2, 0.8], 1.0) == (0.2, 0.8)
    assert oracle.fair_merge([1.0, 1.0], [0.2, 0.9], 0.8) == pytest.approx((0.2, 0.6))
    assert oracle.fifo_diverge(0.9, [0.5, 0.5], [0.3, 0.5]) == pytest.approx(0.6)


def test_generators_are_seeded():
    a = oracle.random_riemann_input(np.random.default_rng(7), 2, 2)
    b = oracle.random_riemann_input(np.random.default_rng(7), 2, 2)
    assert a == b
    j = oracle.random_junction(np.random.default_rng(1), 3, 3)
    assert all(abs(sum(r) - 1.0) <= 1e-12 for r in j.xi)
