import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lwrjunction.errors import DomainError, ValidationError
from lwrjunction.fundamental_diagram import (
    Greenshields,
    Regime,
    TrafficState,
    Triangular,
    demand,
    density_from_state,
    fd_from_dict,
    flow,
    supply,
)

T = Triangular(1.0, 4.0, 1.0)


@pytest.mark.parametrize("k, q", [(0.0, 0.0), (1.0, 1.0), (4.0, 0.0)])
def test_triangular_flow_examples(k, q):
    assert flow(T, k) == q


@pytest.mark.parametrize("k, d, s", [(0.5, 0.5, 1.0), (1.0, 1.0, 1.0), (2.0, 1.0, 2 / 3)])
def test_demand_supply_examples(k, d, s):
    assert demand(T, k) == d
    assert supply(T, k) == pytest.approx(s, abs=1e-15)


@pytest.mark.parametrize("state, k", [((0.5, 1.0), 0.5), ((1.0, 1.0), 1.0), ((1.0, 2 / 3), 2.0)])
def test_density_from_state_examples(state, k):
    assert density_from_state(T, TrafficState(*state)) == pytest.approx(k, abs=1e-12)


def test_derived_quantities():
    assert T.capacity == 1.0
    assert T.wave_speed == pytest.approx(1 / 3)
    g = Greenshields(2.0, 4.0)
    assert g.critical_density == 2.0
    assert g.capacity == 2.0
    assert g.flow(g.critical_density) == g.capacity


@pytest.mark.parametrize("k", [-0.1, 4.1, math.nan, math.inf])
def test_density_outside_domain(k):
    with pytest.raises(DomainError):
        flow(T, k)
    with pytest.raises(DomainError):
        demand(T, k)


def test_inconsistent_state_rejected():
    with pytest.raises(ValidationError):
        density_from_state(T, TrafficState(0.5, 0.6))


def test_invalid_parameters_report_every_problem():
    with pytest.raises(ValidationError) as exc:
        Triangular(-1.0, 0.0, 2.0)
    assert len(exc.value.errors) == 3


def test_triangular_kink_needs_a_side():
    assert T.derivative(1.0, side=-1) == 1.0
    assert T.derivative(1.0, side=+1) == pytest.approx(-1 / 3)
    with pytest.raises(DomainError):
        T.derivative(1.0)


def test_regimes():
    assert TrafficState(0.5, 1.0).regime is Regime.SUC
    assert TrafficState(1.0, 0.5).regime is Regime.SOC
    assert TrafficState(1.0, 1.0 - 1e-12).regime is Regime.C
    assert TrafficState(1.0, 1.0).is_uc and TrafficState(1.0, 1.0).is_oc


def test_fd_dict_round_trip():
    for fd in (T, Greenshields(1.3, 2.7)):
        assert fd_from_dict(fd.to_dict()) == fd
    with pytest.raises(ValidationError):
        fd_from_dict({"kind": "plateau"})


def test_greenshields_inverse_accurate_at_tiny_demand():
    g = Greenshields(1.0, 4.0)
    k = 1e-9
    assert density_from_state(g, g.state(k)) == pytest.approx(k, rel=1e-12)


def test_near_critical_state_maps_to_critical_density():
    g = Greenshields(1.4325, 2.7915)
    c = g.capacity
    below = math.nextafter(c, 0.0)
    assert density_from_state(g, TrafficState(c, below)) == g.critical_density


def test_array_evaluation_matches_scalar():
    ks = np.linspace(0.0, 4.0, 41)
    assert np.array_equal(T.demand(ks), np.array([T.demand(float(k)) for k in ks]))
    assert np.array_equal(T.supply(ks), np.array([T.supply(float(k)) for k in ks]))


fds = st.one_of(
    st.builds(
        lambda vf, kj, r: Triangular(vf, kj, kj * r),
        st.floats(0.2, 5.0), st.floats(0.5, 10.0), st.floats(0.05, 0.95),
    ),
    st.builds(Greenshields, st.floats(0.2, 5.0), st.floats(0.5, 10.0)),
)


@given(fds, st.floats(0.0, 1.0))
def test_state_structure(fd, r):
    k = r * fd.jam_density
    d, s = fd.demand(k), fd.supply(k)
    assert max(d, s) == fd.capacity
    assert min(d, s) == fd.flow(k)


@given(fds, st.floats(0.0, 1.0))
def test_round_trip(fd, r):
    k = r * fd.jam_density
    back = fd.density_from_state(fd.state(k))
    assert back == pytest.approx(k, rel=1e-10, abs=1e-10 * fd.jam_density)


@given(fds)
def test_monotone_demand_and_supply(fd):
    ks = np.linspace(0.0, fd.jam_density, 257)
    d, s = fd.demand(ks), fd.supply(ks)
    assert np.all(np.diff(d) >= 0.0)
    assert np.all(np.diff(s) <= 0.0)
    q = fd.flow(ks)
    assert q[0] == 0.0 and abs(q[-1]) <= 1e-12 * fd.capacity


@given(fds, st.floats(0.001, 0.999), st.floats(0.001, 0.999))
def test_demand_supply_ratio_strictly_increasing(fd, r1, r2):
    if r1 == r2:
        return
    lo, hi = sorted((r1, r2))
    k1, k2 = lo * fd.jam_density, hi * fd.jam_density
    if k2 - k1 < 1e-9 * fd.jam_density:
        return
    assert fd.demand(k1) / fd.supply(k1) < fd.demand(k2) / fd.supply(k2)
