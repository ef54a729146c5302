"""Invariant junction flux function for an m-upstream, n-downstream junction.

Work happens in level space: upstream demand levels mu_a = d_a / C_a and
downstream supply levels nu_b = s_b / C_b.  With directed capacities
C_ab = C_a * xi_ab the average demand level of a non-empty upstream set A1
for downstream link b is

    gamma_b(A1) = (C_b nu_b - sum_{alpha not in A1} C_alpha,b mu_alpha) / sum_{a in A1} C_ab

and the critical demand level is theta = min(max_a mu_a, min_b max_A1 gamma_b(A1)).
Upstream out-fluxes are f_a = min(d_a, theta C_a) and downstream in-fluxes
follow from the turning proportions.

The inner maximisation over the 2^m - 1 subsets is evaluated on the m prefixes
of the upstream links sorted by decreasing demand level (plus the singletons
when the residual supply is positive), which is exact; :mod:`lwrjunction.oracle`
checks it against full enumeration.

Sums go through :func:`math.fsum` so that the result depends on the set of
terms and not on their order; re-evaluating the flux from stationary states
then reproduces the original fluxes bit for bit in non-degenerate cases.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .errors import DomainError, InvariantError, ValidationError
from .fundamental_diagram import ABS_TOL, REL_TOL

XI_SUM_TOL = 1e-9
CHECK_TOL = 1e-9


def _tol(scale: float) -> float:
    return max(ABS_TOL, CHECK_TOL * scale)


@dataclass(frozen=True)
class JunctionSpec:
    """Capacities and turning proportions of a junction.

    Lists are converted to tuples so instances are hashable and comparable.
    """

    up_capacity: tuple[float, ...]
    down_capacity: tuple[float, ...]
    xi: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        up = tuple(float(c) for c in self.up_capacity)
        down = tuple(float(c) for c in self.down_capacity)
        xi = tuple(tuple(float(v) for v in row) for row in self.xi)
        object.__setattr__(self, "up_capacity", up)
        object.__setattr__(self, "down_capacity", down)
        object.__setattr__(self, "xi", xi)
        errors = validate_junction(up, down, xi)
        if errors:
            raise ValidationError(errors)

    @property
    def m(self) -> int:
        return len(self.up_capacity)

    @property
    def n(self) -> int:
        return len(self.down_capacity)

    def directed_capacity(self) -> np.ndarray:
        """C_ab = C_a xi_ab as an (m, n) array."""
        return np.asarray(self.up_capacity)[:, None] * np.asarray(self.xi)

    def to_dict(self) -> dict[str, Any]:
        return {
            "up_capacity": list(self.up_capacity),
            "down_capacity": list(self.down_capacity),
            "xi": [list(row) for row in self.xi],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "JunctionSpec":
        return cls(data["up_capacity"], data["down_capacity"], data["xi"])


def validate_junction(up: Sequence[float], down: Sequence[float], xi: Sequence[Sequence[float]]) -> list[str]:
    """Return every problem with a junction description (empty list if valid)."""
    errors = []
    if len(up) == 0:
        errors.append("junction needs at least one upstream link")
    if len(down) == 0:
        errors.append("junction needs at least one downstream link")
    for a, c in enumerate(up):
        if not (math.isfinite(c) and c > 0):
            errors.append(f"upstream capacity {a} must be positive, got {c}")
    for b, c in enumerate(down):
        if not (math.isfinite(c) and c > 0):
            errors.append(f"downstream capacity {b} must be positive, got {c}")
    if len(xi) != len(up):
        errors.append(f"xi has {len(xi)} rows, expected {len(up)}")
    for a, row in enumerate(xi):
        if len(row) != len(down):
            errors.append(f"xi row {a} has {len(row)} entries, expected {len(down)}")
            continue
        for b, v in enumerate(row):
            if not (math.isfinite(v) and v > 0):
                errors.append(f"xi[{a}][{b}] must be positive, got {v}")
        total = math.fsum(row)
        if abs(total - 1.0) > XI_SUM_TOL:
            errors.append(f"xi row {a} sums to {total!r}, expected 1")
    return errors


@dataclass(frozen=True)
class CriticalLevelBreakdown:
    """Everything computed on the way to theta.

    ``order`` is the upstream permutation by decreasing demand level (ties by
    index) under which ``gamma_prefix[b][l]`` = gamma_b(first l+1 links).
    ``binding_b`` is a downstream link attaining the minimum of Gamma_b when
    the supply constraint binds (A_star non-empty), else None.
    """

    theta: float
    g: float
    residue: tuple[float, ...]
    gamma_max: tuple[float, ...]
    binding_b: int | None
    A_star: tuple[int, ...]
    order: tuple[int, ...]
    gamma_prefix: tuple[tuple[float, ...], ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "theta": self.theta,
            "g": self.g,
            "residue": list(self.residue),
            "gamma_max": list(self.gamma_max),
            "binding_b": self.binding_b,
            "A_star": list(self.A_star),
            "order": list(self.order),
            "gamma_prefix": [list(r) for r in self.gamma_prefix],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CriticalLevelBreakdown":
        return cls(
            theta=float(data["theta"]),
            g=float(data["g"]),
            residue=tuple(float(v) for v in data["residue"]),
            gamma_max=tuple(float(v) for v in data["gamma_max"]),
            binding_b=None if data["binding_b"] is None else int(data["binding_b"]),
            A_star=tuple(int(v) for v in data["A_star"]),
            order=tuple(int(v) for v in data["order"]),
            gamma_prefix=tuple(tuple(float(v) for v in r) for r in data["gamma_prefix"]),
        )


@dataclass(frozen=True)
class FluxResult:
    """Boundary fluxes plus the effective supplies/demands behind them.

    ``breakdown``, ``s_plus`` and ``d_minus`` are None for flux functions that
    do not go through the critical demand level.
    """

    f_up: tuple[float, ...]
    f_down: tuple[float, ...]
    breakdown: CriticalLevelBreakdown | None = None
    s_plus: tuple[float, ...] | None = None
    d_minus: tuple[float, ...] | None = None

    @property
    def fluxes(self) -> tuple[float, ...]:
        return self.f_up + self.f_down

    def to_dict(self) -> dict[str, Any]:
        return {
            "f_up": list(self.f_up),
            "f_down": list(self.f_down),
            "breakdown": None if self.breakdown is None else self.breakdown.to_dict(),
            "s_plus": None if self.s_plus is None else list(self.s_plus),
            "d_minus": None if self.d_minus is None else list(self.d_minus),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "FluxResult":
        def vec(key):
            v = data.get(key)
            return None if v is None else tuple(float(x) for x in v)

        bd = data.get("breakdown")
        return cls(
            f_up=vec("f_up"),
            f_down=vec("f_down"),
            breakdown=None if bd is None else CriticalLevelBreakdown.from_dict(bd),
            s_plus=vec("s_plus"),
            d_minus=vec("d_minus"),
        )


def _check_levels(j: JunctionSpec, mu: Sequence[float], nu: Sequence[float]) -> None:
    errors = []
    if len(mu) != j.m:
        errors.append(f"expected {j.m} demand levels, got {len(mu)}")
    if len(nu) != j.n:
        errors.append(f"expected {j.n} supply levels, got {len(nu)}")
    for name, vals in (("demand", mu), ("supply", nu)):
        for i, v in enumerate(vals):
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                errors.append(f"{name} level {i} must lie in [0, 1], got {v}")
    if errors:
        raise DomainError(errors)


def _gamma(cab: np.ndarray, cb: float, nu_b: float, mu: Sequence[float], b: int, members: Sequence[int]) -> float:
    inside = set(members)
    num = math.fsum([cb * nu_b] + [-cab[a, b] * mu[a] for a in range(len(mu)) if a not in inside])
    den = math.fsum(cab[a, b] for a in inside)
    return num / den


def average_demand_level(j: JunctionSpec, mu, nu, b: int, A1) -> float:
    """gamma_b(A1); indices are 0-based.  Not clamped: may exceed 1 or be negative."""
    members = sorted(set(int(a) for a in A1))
    if not members:
        raise DomainError("average demand level needs a non-empty upstream set")
    if any(a < 0 or a >= j.m for a in members):
        raise DomainError(f"upstream indices {members} out of range for m={j.m}")
    if not 0 <= b < j.n:
        raise DomainError(f"downstream index {b} out of range for n={j.n}")
    mu = [float(v) for v in mu]
    nu = [float(v) for v in nu]
    _check_levels(j, mu, nu)
    return _gamma(j.directed_capacity(), j.down_capacity[b], nu[b], mu, b, members)


def _demand_order(mu: Sequence[float]) -> list[int]:
    return sorted(range(len(mu)), key=lambda a: (-mu[a], a))


def _residue(cab: np.ndarray, cb: float, nu_b: float, mu: Sequence[float], b: int) -> float:
    return math.fsum([cb * nu_b] + [-cab[a, b] * mu[a] for a in range(len(mu))])


def _gamma_star(cab, cb, nu_b, mu, b, order) -> tuple[float, tuple[float, ...], float]:
    pi_b = _residue(cab, cb, nu_b, mu, b)
    prefix = tuple(_gamma(cab, cb, nu_b, mu, b, order[: l + 1]) for l in range(len(order)))
    if pi_b > 0:
        best = max(_gamma(cab, cb, nu_b, mu, b, [a]) for a in range(len(mu)))
    elif pi_b == 0:
        best = max(mu)
    else:
        best = max(prefix)
    return best, prefix, pi_b


def gamma_star(j: JunctionSpec, mu, nu, b: int) -> tuple[float, tuple[float, ...]]:
    """Gamma_b = max over non-empty A1 of gamma_b(A1), and the prefix averages.

    Positive residual supply: the best set is a singleton.  Zero: Gamma_b is
    the largest demand level.  Negative: the best set is a prefix of the
    demand-sorted order and the prefix averages rise then fall.
    """
    mu = [float(v) for v in mu]
    nu = [float(v) for v in nu]
    _check_levels(j, mu, nu)
    if not 0 <= b < j.n:
        raise DomainError(f"downstream index {b} out of range for n={j.n}")
    best, prefix, _ = _gamma_star(j.directed_capacity(), j.down_capacity[b], nu[b], mu, b, _demand_order(mu))
    return best, prefix


def critical_demand_level(j: JunctionSpec, mu, nu) -> CriticalLevelBreakdown:
    mu = [float(v) for v in mu]
    nu = [float(v) for v in nu]
    _check_levels(j, mu, nu)
    cab = j.directed_capacity()
    order = _demand_order(mu)
    gammas, prefixes, residues = [], [], []
    for b in range(j.n):
        best, prefix, pi_b = _gamma_star(cab, j.down_capacity[b], nu[b], mu, b, order)
        gammas.append(best)
        prefixes.append(prefix)
        residues.append(pi_b)
    g = min(gammas)
    theta = min(max(mu), g)
    a_star = tuple(a for a in range(j.m) if mu[a] > theta)
    binding = None
    if a_star:
        binding = min(range(j.n), key=lambda b: (gammas[b], b))
        # supply binds: the min-max over subsets is attained at A_star
        attained = min(_gamma(cab, j.down_capacity[b], nu[b], mu, b, a_star) for b in range(j.n))
        if abs(attained - g) > _tol(max(1.0, abs(g))):
            raise InvariantError(
                f"min_b gamma_b(A_star) = {attained!r} differs from g = {g!r} for A_star={a_star}"
            )
        inside = min(mu[a] for a in a_star)
        outside = max((mu[a] for a in range(j.m) if a not in a_star), default=-math.inf)
        if not inside > theta >= outside:
            raise InvariantError(f"A_star={a_star} does not separate demand levels at theta={theta!r}")
    return CriticalLevelBreakdown(
        theta=theta,
        g=g,
        residue=tuple(residues),
        gamma_max=tuple(gammas),
        binding_b=binding,
        A_star=a_star,
        order=tuple(order),
        gamma_prefix=tuple(prefixes),
    )


def _validated_inputs(j: JunctionSpec, d_up, s_down) -> tuple[list[float], list[float]]:
    d_up = [float(v) for v in d_up]
    s_down = [float(v) for v in s_down]
    errors = []
    if len(d_up) != j.m:
        errors.append(f"expected {j.m} upstream demands, got {len(d_up)}")
    if len(s_down) != j.n:
        errors.append(f"expected {j.n} downstream supplies, got {len(s_down)}")
    if errors:
        raise ValidationError(errors)
    for name, vals, caps in (("demand", d_up, j.up_capacity), ("supply", s_down, j.down_capacity)):
        for i, (v, c) in enumerate(zip(vals, caps)):
            if not math.isfinite(v) or v < 0.0:
                errors.append(f"{name} {i} must be non-negative, got {v}")
            elif v > c + _tol(c):
                errors.append(f"{name} {i} = {v} exceeds capacity {c}")
    if errors:
        raise ValidationError(errors)
    # absorb round-off above capacity
    d_up = [min(v, c) for v, c in zip(d_up, j.up_capacity)]
    s_down = [min(v, c) for v, c in zip(s_down, j.down_capacity)]
    return d_up, s_down


def _downstream_fluxes(j: JunctionSpec, f_up: Sequence[float]) -> tuple[float, ...]:
    return tuple(math.fsum(f_up[a] * j.xi[a][b] for a in range(j.m)) for b in range(j.n))


def flux(j: JunctionSpec, d_up, s_down) -> FluxResult:
    """Boundary fluxes from upstream demands and downstream supplies."""
    d_up, s_down = _validated_inputs(j, d_up, s_down)
    mu = [d / c for d, c in zip(d_up, j.up_capacity)]
    nu = [s / c for s, c in zip(s_down, j.down_capacity)]
    bd = critical_demand_level(j, mu, nu)
    f_up = tuple(min(d, bd.theta * c) for d, c in zip(d_up, j.up_capacity))
    f_down = list(_downstream_fluxes(j, f_up))
    if bd.A_star:
        # supply-bound links receive exactly their supply; the recomputed sum
        # can be off by an ulp, which would leak into the stationary states
        for b in range(j.n):
            if bd.gamma_max[b] == bd.g:
                if abs(f_down[b] - s_down[b]) > _tol(j.down_capacity[b]):
                    raise InvariantError(f"supply-bound link {b} receives {f_down[b]!r} != supply {s_down[b]!r}")
                f_down[b] = s_down[b]
    f_down = tuple(f_down)

    s_plus = tuple(bd.g * c for c in j.up_capacity)
    d_minus = []
    for b in range(j.n):
        others = [bd.gamma_max[beta] for beta in range(j.n) if beta != b]
        theta_minus_b = min(others) if others else 1.0
        d_minus.append(
            math.fsum(min(d_up[a], theta_minus_b * j.up_capacity[a]) * j.xi[a][b] for a in range(j.m))
        )
        expected = min(d_minus[b], s_down[b])
        if abs(f_down[b] - expected) > _tol(j.down_capacity[b]):
            raise InvariantError(
                f"in-flux {f_down[b]!r} of downstream link {b} != min(d_minus, s) = {expected!r}"
            )
    total_in, total_out = math.fsum(f_up), math.fsum(f_down)
    if abs(total_in - total_out) > _tol(max(1.0, total_in)):
        raise InvariantError(f"junction does not conserve flow: {total_in!r} in, {total_out!r} out")
    return FluxResult(f_up=f_up, f_down=f_down, breakdown=bd, s_plus=s_plus, d_minus=tuple(d_minus))


def noninvariant_flux(j: JunctionSpec, d, s) -> FluxResult:
    """Proportional-priority flux f_a = min(d_a, min_b d_a s_b / sum_alpha d_alpha xi_alpha,b).

    Kept for comparison only: it agrees with :func:`flux` on initial data but
    not when re-evaluated on stationary states.  A downstream link that
    receives no demand imposes no restriction.
    """
    d, s = _validated_inputs(j, d, s)
    f_up = []
    for a in range(j.m):
        limit = d[a]
        for b in range(j.n):
            load = math.fsum(d[alpha] * j.xi[alpha][b] for alpha in range(j.m))
            if load > 0.0:
                limit = min(limit, d[a] / load * s[b])
        f_up.append(limit)
    f_up = tuple(f_up)
    return FluxResult(f_up=f_up, f_down=_downstream_fluxes(j, f_up))
