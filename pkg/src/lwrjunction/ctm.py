"""Cell Transmission Model on link networks joined by junctions.

Each link is split into equal cells.  Every step has two phases: first all
interface fluxes are fixed from the current densities, then every cell is
updated by the net flux.  Interfaces are

* inside a link:       min(D(upwind), S(downwind))
* at a junction:       :func:`lwrjunction.junction_flux.flux` on the boundary
                       cells' demands and supplies
* at an origin:        min(d_origin(t), S(first cell))
* at a destination:    min(D(last cell), s_dest(t))

Origins and destinations are reservoirs: an origin holds an unbounded queue
that offers the given demand, a destination accepts up to the given supply.
With demand D(k0) at an origin and supply S(k0) at a destination a finite
link behaves exactly like an infinite one carrying k0 beyond its end.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import ConfigurationError, InvariantError, ValidationError
from .fundamental_diagram import FundamentalDiagram, fd_from_dict
from .junction_flux import JunctionSpec, flux
from .riemann import RiemannInput, solve

CFL_MARGIN = 1e-9
CLAMP_TOL = 1e-9


@dataclass(frozen=True)
class Profile:
    """Piecewise-constant function of time: ``values[i]`` holds on [times[i], times[i+1])."""

    times: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        errors = []
        if not self.times or len(self.times) != len(self.values):
            errors.append("profile needs matching, non-empty times and values")
        elif self.times[0] != 0.0:
            errors.append("profile must start at t = 0")
        elif any(b <= a for a, b in zip(self.times, self.times[1:])):
            errors.append("profile times must increase strictly")
        if any(not (math.isfinite(v) and v >= 0.0) for v in self.values):
            errors.append("profile values must be finite and non-negative")
        if errors:
            raise ValidationError(errors)

    @classmethod
    def constant(cls, value: float) -> "Profile":
        return cls((0.0,), (value,))

    def __call__(self, t: float) -> float:
        return self.values[bisect.bisect_right(self.times, t) - 1]

    def to_json(self):
        if len(self.times) == 1:
            return self.values[0]
        return [[t, v] for t, v in zip(self.times, self.values)]

    @classmethod
    def from_json(cls, data) -> "Profile":
        if isinstance(data, (int, float)):
            return cls.constant(float(data))
        return cls(tuple(p[0] for p in data), tuple(p[1] for p in data))


@dataclass(frozen=True)
class Link:
    id: str
    fd: FundamentalDiagram
    length: float
    cells: int
    initial: tuple[float, ...]  # one density per cell

    def __post_init__(self):
        init = self.initial
        if isinstance(init, (int, float)):
            init = (float(init),) * self.cells
        object.__setattr__(self, "initial", tuple(float(k) for k in init))

    @property
    def dx(self) -> float:
        return self.length / self.cells

    def to_dict(self) -> dict[str, Any]:
        init: Any = self.initial[0] if len(set(self.initial)) == 1 else list(self.initial)
        return {"id": self.id, "fd": self.fd.to_dict(), "length": self.length, "cells": self.cells, "initial": init}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Link":
        return cls(str(data["id"]), fd_from_dict(data["fd"]), float(data["length"]), int(data["cells"]),
                   data["initial"])


@dataclass(frozen=True)
class Junction:
    upstream: tuple[str, ...]
    downstream: tuple[str, ...]
    xi: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "upstream", tuple(str(i) for i in self.upstream))
        object.__setattr__(self, "downstream", tuple(str(i) for i in self.downstream))
        object.__setattr__(self, "xi", tuple(tuple(float(v) for v in row) for row in self.xi))

    def to_dict(self) -> dict[str, Any]:
        return {"upstream": list(self.upstream), "downstream": list(self.downstream),
                "xi": [list(r) for r in self.xi]}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Junction":
        return cls(data["upstream"], data["downstream"], data["xi"])


@dataclass(frozen=True)
class Boundary:
    """An origin (profile = demand) or destination (profile = supply) on a link end."""

    link: str
    profile: Profile


@dataclass(frozen=True)
class NetworkScenario:
    links: tuple[Link, ...]
    junctions: tuple[Junction, ...]
    origins: tuple[Boundary, ...]
    destinations: tuple[Boundary, ...]
    dt: float
    horizon: float
    snapshot_every: int = 0  # 0 keeps only the initial and final snapshots

    def __post_init__(self):
        for name in ("links", "junctions", "origins", "destinations"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        self.validate()

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def link_index(self) -> dict[str, int]:
        return {link.id: i for i, link in enumerate(self.links)}

    def validate(self) -> None:
        errors = []
        if not (math.isfinite(self.dt) and self.dt > 0):
            errors.append(f"dt must be positive, got {self.dt}")
        if not (math.isfinite(self.horizon) and self.horizon >= 0):
            errors.append(f"horizon must be non-negative, got {self.horizon}")
        if self.snapshot_every < 0:
            errors.append("snapshot_every must be non-negative")
        index = {}
        for i, link in enumerate(self.links):
            if link.id in index:
                errors.append(f"duplicate link id {link.id!r}")
            index[link.id] = i
            if link.cells < 1 or not link.length > 0:
                errors.append(f"link {link.id}: needs a positive length and at least one cell")
                continue
            if len(link.initial) != link.cells:
                errors.append(f"link {link.id}: {len(link.initial)} initial densities for {link.cells} cells")
            bad = [k for k in link.initial if not (math.isfinite(k) and 0.0 <= k <= link.fd.jam_density)]
            if bad:
                errors.append(f"link {link.id}: initial density {bad[0]} outside [0, {link.fd.jam_density}]")
        # every link end attaches exactly once
        heads = {i: [] for i in index}
        tails = {i: [] for i in index}
        for n, jn in enumerate(self.junctions):
            for lid in jn.upstream:
                tails.setdefault(lid, []).append(f"junction {n}")
            for lid in jn.downstream:
                heads.setdefault(lid, []).append(f"junction {n}")
            try:
                JunctionSpec([1.0] * len(jn.upstream), [1.0] * len(jn.downstream), jn.xi)
            except ValidationError as exc:
                errors += [f"junction {n}: {e}" for e in exc.errors]
        for o in self.origins:
            heads.setdefault(o.link, []).append("origin")
        for d in self.destinations:
            tails.setdefault(d.link, []).append("destination")
        for lid in sorted(set(heads) | set(tails)):
            if lid not in index:
                errors.append(f"unknown link id {lid!r}")
                continue
            for end, owners in (("upstream end", heads[lid]), ("downstream end", tails[lid])):
                if len(owners) != 1:
                    errors.append(f"link {lid}: {end} attached to {len(owners)} elements ({', '.join(owners) or 'none'})")
        if errors:
            raise ConfigurationError(errors)
        cfl = []
        for link in self.links:
            ratio = link.fd.max_wave_speed * self.dt / link.dx
            if ratio > 1.0 + CFL_MARGIN:
                cfl.append(f"link {link.id}: CFL number {ratio:.6g} > 1 (v_max dt / dx)")
        if cfl:
            raise ConfigurationError(cfl)

    def to_dict(self) -> dict[str, Any]:
        return {
            "links": [link.to_dict() for link in self.links],
            "junctions": [j.to_dict() for j in self.junctions],
            "origins": [{"link": o.link, "demand": o.profile.to_json()} for o in self.origins],
            "destinations": [{"link": d.link, "supply": d.profile.to_json()} for d in self.destinations],
            "dt": self.dt,
            "horizon": self.horizon,
            "snapshot_every": self.snapshot_every,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "NetworkScenario":
        return cls(
            links=tuple(Link.from_dict(d) for d in data["links"]),
            junctions=tuple(Junction.from_dict(d) for d in data.get("junctions", [])),
            origins=tuple(Boundary(str(o["link"]), Profile.from_json(o["demand"])) for o in data.get("origins", [])),
            destinations=tuple(Boundary(str(d["link"]), Profile.from_json(d["supply"]))
                               for d in data.get("destinations", [])),
            dt=float(data["dt"]),
            horizon=float(data["horizon"]),
            snapshot_every=int(data.get("snapshot_every", 0)),
        )


@dataclass
class SimState:
    densities: list[np.ndarray]
    inflow: float = 0.0  # cumulative vehicles entered at origins
    outflow: float = 0.0  # cumulative vehicles left at destinations
    step: int = 0
    time: float = 0.0

    def vehicles(self, scenario: NetworkScenario) -> float:
        return math.fsum(math.fsum(k) * link.dx for k, link in zip(self.densities, scenario.links))

    def copy(self) -> "SimState":
        return SimState([k.copy() for k in self.densities], self.inflow, self.outflow, self.step, self.time)


@dataclass
class Snapshot:
    time: float
    densities: list[np.ndarray]


@dataclass
class RunResult:
    scenario: NetworkScenario
    final: SimState
    snapshots: list[Snapshot]
    junction_flux: list[np.ndarray]  # per junction: steps x (m + n)
    conservation_residual: float  # worst |vehicles - initial - inflow + outflow| over the run
    boundary_density: list[np.ndarray] = field(default_factory=list)  # per junction: steps+1 x (m + n)

    def summary(self) -> dict[str, Any]:
        final_flux = [h[-1].tolist() if len(h) else [] for h in self.junction_flux]
        settle = []
        for h in self.junction_flux:
            tail = h[len(h) // 2:] if len(h) else h
            settle.append(float(np.abs(tail - tail[-1]).max()) if len(tail) else 0.0)
        return {
            "steps": self.final.step,
            "time": self.final.time,
            "vehicles": self.final.vehicles(self.scenario),
            "inflow": self.final.inflow,
            "outflow": self.final.outflow,
            "conservation_residual": self.conservation_residual,
            "final_junction_flux": final_flux,
            "junction_flux_variation_second_half": settle,
            "final_boundary_density": [b[-1].tolist() for b in self.boundary_density],
        }

    def csv_rows(self):
        yield ("t", "link", "cell", "density", "flow")
        for snap in self.snapshots:
            for link, k in zip(self.scenario.links, snap.densities):
                q = link.fd.flow(k)
                for i in range(len(k)):
                    yield (snap.time, link.id, i, float(k[i]), float(q[i]))


class Simulator:
    """Precomputed topology for stepping one scenario."""

    def __init__(self, scenario: NetworkScenario):
        self.scenario = scenario
        idx = scenario.link_index()
        links = scenario.links
        self.lam = [scenario.dt / link.dx for link in links]
        self.junctions = []
        for jn in scenario.junctions:
            ups = [idx[i] for i in jn.upstream]
            downs = [idx[i] for i in jn.downstream]
            spec = JunctionSpec([links[i].fd.capacity for i in ups], [links[i].fd.capacity for i in downs], jn.xi)
            self.junctions.append((spec, ups, downs))
        self.origins = [(idx[o.link], o.profile) for o in scenario.origins]
        self.destinations = [(idx[d.link], d.profile) for d in scenario.destinations]

    def initial_state(self) -> SimState:
        return SimState([np.array(link.initial, dtype=float) for link in self.scenario.links])

    def boundary_densities(self, state: SimState) -> list[np.ndarray]:
        return [np.array([state.densities[i][-1] for i in ups] + [state.densities[i][0] for i in downs])
                for _, ups, downs in self.junctions]

    def fluxes(self, state: SimState) -> tuple[list[float], list[float], list[np.ndarray], list[tuple[float, ...]]]:
        """Phase one: in-flux and out-flux of every link, interior fluxes, junction fluxes."""
        links = self.scenario.links
        t = state.time
        dem = [link.fd.demand(k) for link, k in zip(links, state.densities)]
        sup = [link.fd.supply(k) for link, k in zip(links, state.densities)]
        interior = [np.minimum(d[:-1], s[1:]) for d, s in zip(dem, sup)]
        f_in = [math.nan] * len(links)
        f_out = [math.nan] * len(links)
        at_junction = []
        for spec, ups, downs in self.junctions:
            res = flux(spec, [float(dem[i][-1]) for i in ups], [float(sup[i][0]) for i in downs])
            for i, f in zip(ups, res.f_up):
                f_out[i] = f
            for i, f in zip(downs, res.f_down):
                f_in[i] = f
            at_junction.append(res.fluxes)
        for i, prof in self.origins:
            f_in[i] = min(prof(t), float(sup[i][0]))
        for i, prof in self.destinations:
            f_out[i] = min(float(dem[i][-1]), prof(t))
        return f_in, f_out, interior, at_junction

    def step(self, state: SimState) -> tuple[SimState, list[tuple[float, ...]]]:
        sc = self.scenario
        f_in, f_out, interior, at_junction = self.fluxes(state)
        new = []
        for link, k, lam, fi, fo, fint in zip(sc.links, state.densities, self.lam, f_in, f_out, interior):
            flows = np.concatenate(([fi], fint, [fo]))
            k_new = k + lam * (flows[:-1] - flows[1:])
            kj = link.fd.jam_density
            low, high = k_new < 0.0, k_new > kj
            if low.any() or high.any():
                if (k_new < -CLAMP_TOL * kj).any() or (k_new > kj * (1 + CLAMP_TOL)).any():
                    raise InvariantError(f"link {link.id}: density left [0, {kj}] at step {state.step + 1}")
                k_new = np.clip(k_new, 0.0, kj)
            new.append(k_new)
        dt = sc.dt
        inflow = state.inflow + dt * math.fsum(f_in[i] for i, _ in self.origins)
        outflow = state.outflow + dt * math.fsum(f_out[i] for i, _ in self.destinations)
        step = state.step + 1
        return SimState(new, inflow, outflow, step, step * dt), at_junction

    def run(self) -> RunResult:
        sc = self.scenario
        state = self.initial_state()
        v0 = state.vehicles(sc)
        snaps = [Snapshot(0.0, [k.copy() for k in state.densities])]
        history: list[list[tuple[float, ...]]] = [[] for _ in self.junctions]
        boundary = [[b] for b in self.boundary_densities(state)]
        worst = 0.0
        steps = sc.steps
        for _ in range(steps):
            state, at_junction = self.step(state)
            for h, f in zip(history, at_junction):
                h.append(f)
            for acc, b in zip(boundary, self.boundary_densities(state)):
                acc.append(b)
            worst = max(worst, abs(state.vehicles(sc) - v0 - state.inflow + state.outflow))
            if (sc.snapshot_every and state.step % sc.snapshot_every == 0) or state.step == steps:
                snaps.append(Snapshot(state.time, [k.copy() for k in state.densities]))
        return RunResult(
            scenario=sc,
            final=state,
            snapshots=snaps,
            junction_flux=[np.array(h, dtype=float).reshape(len(h), -1) for h in history],
            conservation_residual=worst,
            boundary_density=[np.array(b) for b in boundary],
        )


def step(state: SimState, scenario: NetworkScenario) -> SimState:
    return Simulator(scenario).step(state)[0]


def run(scenario: NetworkScenario) -> RunResult:
    return Simulator(scenario).run()


def riemann_network(inp: RiemannInput, cells: int, dx: float, horizon: float,
                    init: str = "initial", snapshot_every: int = 0) -> NetworkScenario:
    """Single-junction network realizing a Riemann problem on finite links.

    Every link gets ``cells`` cells of width ``dx``; reservoirs at the far
    ends are matched to the initial densities, and dt is the largest step
    the CFL condition allows.  ``init="stationary"`` starts every link at
    the solved stationary density instead.
    """
    if init == "initial":
        k = inp.k0
    elif init == "stationary":
        k = solve(inp).stationary_density
    else:
        raise ValidationError(f"init must be 'initial' or 'stationary', got {init!r}")
    m = inp.m
    ids = [str(i + 1) for i in range(m + inp.n)]
    links = tuple(Link(i, fd, cells * dx, cells, kk) for i, fd, kk in zip(ids, inp.fds, k))
    dt = dx / max(fd.max_wave_speed for fd in inp.fds)
    origins = tuple(Boundary(ids[a], Profile.constant(float(inp.fds[a].demand(inp.k0[a])))) for a in range(m))
    dests = tuple(Boundary(ids[b], Profile.constant(float(inp.fds[b].supply(inp.k0[b]))))
                  for b in range(m, m + inp.n))
    return NetworkScenario(links, (Junction(ids[:m], ids[m:], inp.junction.xi),), origins, dests,
                           dt, horizon, snapshot_every)


def stationary_profile_check(result: RunResult) -> float:
    """Largest change of any cell density between the first and any later snapshot."""
    first = result.snapshots[0].densities
    return max(
        (float(np.abs(a - b).max()) for s in result.snapshots[1:] for a, b in zip(s.densities, first)),
        default=0.0,
    )
