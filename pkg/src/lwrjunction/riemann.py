"""Riemann problem at a junction: stationary states, interior states and waves.

Given constant initial densities on every link, the solution consists of a
stationary state next to the junction on each link, joined to the initial
state by a single shock or rarefaction that travels away from the junction.
The boundary fluxes come from :func:`lwrjunction.junction_flux.flux`; the
stationary states follow from whether each link's flux is limited:

* upstream a:   f_a < d_a  ->  U* = (C_a, f_a)  (strictly over-critical)
                f_a = d_a  ->  U* = (f_a, C_a)  (under-critical)
* downstream b: f_b < s_b  ->  U* = (f_b, C_b)  (strictly under-critical)
                f_b = s_b  ->  U* = (C_b, f_b)  (over-critical)

Interior states (measure-zero states at the junction itself) are reported as
the canonical choice U0 = U*, which is always admissible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Callable, Sequence

from .errors import ValidationError
from .fundamental_diagram import (
    FundamentalDiagram,
    TrafficState,
    fd_from_dict,
    nearly_equal,
)
from .junction_flux import FluxResult, JunctionSpec, flux

CONSISTENCY_TOL = 1e-10
WAVE_TOL = 1e-12


class WaveKind(str, Enum):
    NONE = "none"
    SHOCK = "shock"
    RAREFACTION = "rarefaction"


@dataclass(frozen=True)
class WaveDescription:
    """The wave joining ``k_left`` to ``k_right`` on one link.

    ``speeds`` is empty for no wave, (speed,) for a shock and (slowest,
    fastest) characteristic speeds for a rarefaction fan.
    """

    kind: WaveKind
    k_left: float
    k_right: float
    speeds: tuple[float, ...] = ()

    @property
    def speed_range(self) -> tuple[float, float] | None:
        if not self.speeds:
            return None
        return min(self.speeds), max(self.speeds)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "k_left": self.k_left,
            "k_right": self.k_right,
            "speeds": list(self.speeds),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "WaveDescription":
        return cls(
            WaveKind(data["kind"]),
            float(data["k_left"]),
            float(data["k_right"]),
            tuple(float(v) for v in data["speeds"]),
        )


@dataclass(frozen=True)
class RiemannInput:
    """Junction plus one fundamental diagram and initial density per link.

    Links are ordered upstream first (m of them), then downstream (n).
    """

    junction: JunctionSpec
    fds: tuple[FundamentalDiagram, ...]
    k0: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "fds", tuple(self.fds))
        object.__setattr__(self, "k0", tuple(float(k) for k in self.k0))
        j = self.junction
        errors = []
        if len(self.fds) != j.m + j.n:
            errors.append(f"need {j.m + j.n} fundamental diagrams, got {len(self.fds)}")
        if len(self.k0) != j.m + j.n:
            errors.append(f"need {j.m + j.n} initial densities, got {len(self.k0)}")
        if errors:
            raise ValidationError(errors)
        caps = j.up_capacity + j.down_capacity
        for i, (fd, k, c) in enumerate(zip(self.fds, self.k0, caps)):
            if not nearly_equal(fd.capacity, c):
                errors.append(f"link {i}: junction capacity {c} != fundamental diagram capacity {fd.capacity}")
            if not (math.isfinite(k) and 0.0 <= k <= fd.jam_density):
                errors.append(f"link {i}: initial density {k} outside [0, {fd.jam_density}]")
        if errors:
            raise ValidationError(errors)

    @classmethod
    def from_links(cls, upstream: Sequence[FundamentalDiagram], downstream: Sequence[FundamentalDiagram],
                   xi, k0) -> "RiemannInput":
        """Build the junction from the links' own capacities."""
        j = JunctionSpec([fd.capacity for fd in upstream], [fd.capacity for fd in downstream], xi)
        return cls(j, tuple(upstream) + tuple(downstream), k0)

    @property
    def m(self) -> int:
        return self.junction.m

    @property
    def n(self) -> int:
        return self.junction.n

    def with_densities(self, k: Sequence[float]) -> "RiemannInput":
        return RiemannInput(self.junction, self.fds, k)

    def to_dict(self) -> dict[str, Any]:
        m = self.m
        return {
            "upstream": [fd.to_dict() for fd in self.fds[:m]],
            "downstream": [fd.to_dict() for fd in self.fds[m:]],
            "xi": [list(r) for r in self.junction.xi],
            "k0": list(self.k0),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RiemannInput":
        return cls.from_links(
            [fd_from_dict(f) for f in data["upstream"]],
            [fd_from_dict(f) for f in data["downstream"]],
            data["xi"],
            data["k0"],
        )


@dataclass(frozen=True)
class RiemannSolution:
    """Solution of the junction Riemann problem, per link in input order.

    ``interior_nonunique[i]`` marks links on which other interior states
    (besides the reported canonical U0 = U*) are also admissible.
    """

    flux: FluxResult
    stationary: tuple[TrafficState, ...]
    stationary_density: tuple[float, ...]
    interior: tuple[TrafficState, ...]
    interior_density: tuple[float, ...]
    waves: tuple[WaveDescription, ...]
    interior_nonunique: tuple[bool, ...]
    consistent: bool | None = None

    @property
    def fluxes(self) -> tuple[float, ...]:
        return self.flux.fluxes

    def to_dict(self) -> dict[str, Any]:
        return {
            "flux": self.flux.to_dict(),
            "stationary": [u.to_dict() for u in self.stationary],
            "stationary_density": list(self.stationary_density),
            "interior": [u.to_dict() for u in self.interior],
            "interior_density": list(self.interior_density),
            "waves": [w.to_dict() for w in self.waves],
            "interior_nonunique": list(self.interior_nonunique),
            "consistent": self.consistent,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RiemannSolution":
        return cls(
            flux=FluxResult.from_dict(data["flux"]),
            stationary=tuple(TrafficState.from_dict(u) for u in data["stationary"]),
            stationary_density=tuple(float(v) for v in data["stationary_density"]),
            interior=tuple(TrafficState.from_dict(u) for u in data["interior"]),
            interior_density=tuple(float(v) for v in data["interior_density"]),
            waves=tuple(WaveDescription.from_dict(w) for w in data["waves"]),
            interior_nonunique=tuple(bool(v) for v in data["interior_nonunique"]),
            consistent=data.get("consistent"),
        )


def link_wave(fd: FundamentalDiagram, k_left: float, k_right: float) -> WaveDescription:
    """Entropy solution of the single-link Riemann problem (k_left | k_right)."""
    fd._check_density(k_left)
    fd._check_density(k_right)
    if math.isclose(k_left, k_right, rel_tol=WAVE_TOL, abs_tol=WAVE_TOL * fd.jam_density):
        return WaveDescription(WaveKind.NONE, k_left, k_right)
    if k_left < k_right:
        speed = (fd.flow(k_right) - fd.flow(k_left)) / (k_right - k_left)
        return WaveDescription(WaveKind.SHOCK, k_left, k_right, (speed,))
    # fan over [k_right, k_left]: take one-sided slopes from inside the fan
    slow = fd.derivative(k_left, side=-1)
    fast = fd.derivative(k_right, side=+1)
    return WaveDescription(WaveKind.RAREFACTION, k_left, k_right, (slow, fast))


def stationary_states(j: JunctionSpec, d_up: Sequence[float], s_down: Sequence[float],
                      result: FluxResult) -> tuple[list[TrafficState], list[bool]]:
    """Stationary states in demand-supply form and the interior non-uniqueness flags."""
    states, nonunique = [], []
    for a in range(j.m):
        c, d, f = j.up_capacity[a], d_up[a], result.f_up[a]
        if f < d and not nearly_equal(f, d):
            states.append(TrafficState(c, f))
            nonunique.append(False)
        else:
            # f = d here; building U* from f keeps q(U*) == f bit-for-bit
            states.append(TrafficState(f, c))
            nonunique.append(result.s_plus is not None and nearly_equal(d, result.s_plus[a]))
    for b in range(j.n):
        c, s, f = j.down_capacity[b], s_down[b], result.f_down[b]
        if f < s and not nearly_equal(f, s):
            states.append(TrafficState(f, c))
            nonunique.append(False)
        else:
            states.append(TrafficState(c, f))
            nonunique.append(result.d_minus is not None and nearly_equal(s, result.d_minus[b]))
    return states, nonunique


def _solve(inp: RiemannInput) -> RiemannSolution:
    j, m = inp.junction, inp.m
    d_up = [float(fd.demand(k)) for fd, k in zip(inp.fds[:m], inp.k0[:m])]
    s_down = [float(fd.supply(k)) for fd, k in zip(inp.fds[m:], inp.k0[m:])]
    result = flux(j, d_up, s_down)
    states, nonunique = stationary_states(j, d_up, s_down, result)
    densities = tuple(fd.density_from_state(u) for fd, u in zip(inp.fds, states))
    waves = []
    for i, (fd, k0, ks) in enumerate(zip(inp.fds, inp.k0, densities)):
        waves.append(link_wave(fd, k0, ks) if i < m else link_wave(fd, ks, k0))
    return RiemannSolution(
        flux=result,
        stationary=tuple(states),
        stationary_density=densities,
        interior=tuple(states),
        interior_density=densities,
        waves=tuple(waves),
        interior_nonunique=tuple(nonunique),
    )


def _same(first: RiemannSolution, second: RiemannSolution, tol: float) -> bool:
    def close(x, y):
        return all(abs(a - b) <= tol * max(1.0, abs(a), abs(b)) for a, b in zip(x, y))

    if not close(first.fluxes, second.fluxes):
        return False
    for u, v in zip(first.stationary, second.stationary):
        if not close((u.d, u.s), (v.d, v.s)):
            return False
    return True


def solve(inp: RiemannInput) -> RiemannSolution:
    """Solve the junction Riemann problem and record whether RS(RS(k)) = RS(k)."""
    sol = _solve(inp)
    again = _solve(inp.with_densities(sol.stationary_density))
    return replace(sol, consistent=_same(sol, again, CONSISTENCY_TOL))


def check_consistency(inp: RiemannInput, tol: float = CONSISTENCY_TOL) -> bool:
    sol = _solve(inp)
    return _same(sol, _solve(inp.with_densities(sol.stationary_density)), tol)


def interior_reevaluation(inp: RiemannInput, flux_fn: Callable[..., FluxResult] = flux
                          ) -> tuple[FluxResult, FluxResult]:
    """Evaluate ``flux_fn`` on the initial data, build the canonical interior
    states it implies and evaluate ``flux_fn`` again on those.

    An invariant flux function returns the same fluxes both times.
    """
    j, m = inp.junction, inp.m
    d_up = [float(fd.demand(k)) for fd, k in zip(inp.fds[:m], inp.k0[:m])]
    s_down = [float(fd.supply(k)) for fd, k in zip(inp.fds[m:], inp.k0[m:])]
    first = flux_fn(j, d_up, s_down)
    states, _ = stationary_states(j, d_up, s_down, first)
    second = flux_fn(j, [u.d for u in states[:m]], [u.s for u in states[m:]])
    return first, second
