"""Flow-density laws and the demand/supply decomposition.

Every link carries a concave fundamental diagram Q(k) with capacity C reached
at the critical density k_c.  The junction solver never looks at densities
directly; it works with the pair

    d = D(k) = Q(min(k, k_c))      (demand, sending flow)
    s = S(k) = Q(max(k, k_c))      (supply, receiving flow)

which satisfies min(d, s) = Q(k) and max(d, s) = C.  Because d/s is strictly
increasing in k the pair identifies the density uniquely, and
:func:`density_from_state` inverts it in closed form.

All functions accept scalars or numpy arrays.
"""
from __future__ import annotations

import math
import sys
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Any, ClassVar

import numpy as np

from .errors import DomainError, ValidationError

REL_TOL = 1e-9
ABS_TOL = 1e-12
# states this close to critical (relative to C) invert to k_c; the concave
# inverses have infinite slope at capacity and would amplify the roundoff
CRITICAL_SNAP = 8 * sys.float_info.epsilon


def nearly_equal(a: float, b: float, rel: float = REL_TOL, abs_: float = ABS_TOL) -> bool:
    """Equality test used wherever the theory branches on d == s or f == d."""
    return abs(a - b) <= max(abs_, rel * max(abs(a), abs(b)))


class Regime(str, Enum):
    SUC = "SUC"  # strictly under-critical, d < s = C
    C = "C"  # critical, d = s = C
    SOC = "SOC"  # strictly over-critical, s < d = C


@dataclass(frozen=True)
class TrafficState:
    """A traffic state in demand-supply form, U = (d, s)."""

    d: float
    s: float

    @property
    def flow(self) -> float:
        return min(self.d, self.s)

    @property
    def regime(self) -> Regime:
        if nearly_equal(self.d, self.s):
            return Regime.C
        return Regime.SUC if self.d < self.s else Regime.SOC

    @property
    def is_uc(self) -> bool:
        return self.regime is not Regime.SOC

    @property
    def is_oc(self) -> bool:
        return self.regime is not Regime.SUC

    def to_dict(self) -> dict[str, Any]:
        return {"d": self.d, "s": self.s, "regime": self.regime.value}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TrafficState":
        return cls(float(data["d"]), float(data["s"]))


class FundamentalDiagram(ABC):
    """Interface every flow-density law implements.

    Subclasses are frozen dataclasses; equality and hashing are by value.
    """

    kind: ClassVar[str]

    @property
    @abstractmethod
    def capacity(self) -> float: ...

    @property
    @abstractmethod
    def critical_density(self) -> float: ...

    @property
    @abstractmethod
    def jam_density(self) -> float: ...

    @property
    @abstractmethod
    def max_wave_speed(self) -> float:
        """Largest |Q'(k)| over [0, k_j]; governs the CFL condition."""

    @abstractmethod
    def _flow(self, k): ...

    @abstractmethod
    def _inverse_demand(self, d: float) -> float: ...

    @abstractmethod
    def _inverse_supply(self, s: float) -> float: ...

    @abstractmethod
    def derivative(self, k: float, side: int = 0) -> float:
        """Q'(k).  ``side`` selects the one-sided limit at kinks: -1 from
        below, +1 from above, 0 only where Q is differentiable."""

    @abstractmethod
    def to_dict(self) -> dict[str, Any]: ...

    def _check_density(self, k) -> None:
        arr = np.asarray(k, dtype=float)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > self.jam_density):
            raise DomainError(f"density {k!r} outside [0, {self.jam_density}]")

    def flow(self, k):
        self._check_density(k)
        return self._flow(k)

    def demand(self, k):
        self._check_density(k)
        return self._flow(np.minimum(k, self.critical_density)) if isinstance(k, np.ndarray) \
            else self._flow(min(k, self.critical_density))

    def supply(self, k):
        self._check_density(k)
        return self._flow(np.maximum(k, self.critical_density)) if isinstance(k, np.ndarray) \
            else self._flow(max(k, self.critical_density))

    def state(self, k: float) -> TrafficState:
        return TrafficState(float(self.demand(k)), float(self.supply(k)))

    def check_state(self, state: TrafficState) -> None:
        c = self.capacity
        d, s = state.d, state.s
        if not (math.isfinite(d) and math.isfinite(s)):
            raise ValidationError(f"non-finite state {state}")
        if d < -ABS_TOL or s < -ABS_TOL or not nearly_equal(max(d, s), c):
            raise ValidationError(
                f"state (d={d}, s={s}) inconsistent with capacity {c}: max(d, s) must equal C"
            )

    def density_from_state(self, state: TrafficState) -> float:
        self.check_state(state)
        c = self.capacity
        if abs(state.d - state.s) <= CRITICAL_SNAP * c:
            return self.critical_density
        if state.d < state.s:
            return self._inverse_demand(min(max(state.d, 0.0), c))
        return self._inverse_supply(min(max(state.s, 0.0), c))


@dataclass(frozen=True)
class Triangular(FundamentalDiagram):
    """Q(k) = v_f k below k_c, linear decay to zero at k_j above it."""

    vf: float
    kj: float
    kc: float
    kind: ClassVar[str] = "triangular"

    def __post_init__(self):
        errors = []
        if not self.vf > 0:
            errors.append(f"vf must be positive, got {self.vf}")
        if not self.kj > 0:
            errors.append(f"kj must be positive, got {self.kj}")
        if not 0 < self.kc < self.kj:
            errors.append(f"kc must lie strictly inside (0, kj), got {self.kc}")
        if errors:
            raise ValidationError(errors)

    @property
    def capacity(self) -> float:
        return self.vf * self.kc

    @property
    def critical_density(self) -> float:
        return self.kc

    @property
    def jam_density(self) -> float:
        return self.kj

    @property
    def wave_speed(self) -> float:
        """Magnitude of the congested-branch slope."""
        return self.capacity / (self.kj - self.kc)

    @property
    def max_wave_speed(self) -> float:
        return max(self.vf, self.wave_speed)

    def _flow(self, k):
        if isinstance(k, np.ndarray):
            return np.where(k <= self.kc, self.vf * k, self.wave_speed * (self.kj - k))
        return self.vf * k if k <= self.kc else self.wave_speed * (self.kj - k)

    def _inverse_demand(self, d: float) -> float:
        return d / self.vf

    def _inverse_supply(self, s: float) -> float:
        return self.kj - s / self.wave_speed

    def derivative(self, k: float, side: int = 0) -> float:
        self._check_density(k)
        if k < self.kc or (k == self.kc and side < 0):
            return self.vf
        if k > self.kc or side > 0:
            return -self.wave_speed
        raise DomainError("triangular Q is not differentiable at k_c; pass side=-1 or +1")

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "vf": self.vf, "kj": self.kj, "kc": self.kc}


@dataclass(frozen=True)
class Greenshields(FundamentalDiagram):
    """Q(k) = v_f k (1 - k / k_j); k_c = k_j / 2, C = v_f k_j / 4."""

    vf: float
    kj: float
    kind: ClassVar[str] = "greenshields"

    def __post_init__(self):
        errors = []
        if not self.vf > 0:
            errors.append(f"vf must be positive, got {self.vf}")
        if not self.kj > 0:
            errors.append(f"kj must be positive, got {self.kj}")
        if errors:
            raise ValidationError(errors)

    @property
    def capacity(self) -> float:
        return self.vf * self.kj / 4.0

    @property
    def critical_density(self) -> float:
        return self.kj / 2.0

    @property
    def jam_density(self) -> float:
        return self.kj

    @property
    def max_wave_speed(self) -> float:
        return self.vf

    def _flow(self, k):
        return self.vf * k * (1.0 - k / self.kj)

    # Q(k) = C (1 - r^2) with r = |1 - 2k/kj|, so r = sqrt(1 - q/C).

    def _inverse_demand(self, d: float) -> float:
        x = d / self.capacity
        # k_c (1 - r) rewritten to avoid cancellation at small d
        return self.critical_density * x / (1.0 + math.sqrt(max(0.0, 1.0 - x)))

    def _inverse_supply(self, s: float) -> float:
        return self.critical_density * (1.0 + math.sqrt(max(0.0, 1.0 - s / self.capacity)))

    def derivative(self, k: float, side: int = 0) -> float:
        self._check_density(k)
        return self.vf * (1.0 - 2.0 * k / self.kj)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "vf": self.vf, "kj": self.kj}


def fd_from_dict(data: dict[str, Any]) -> FundamentalDiagram:
    kind = data.get("kind")
    if kind == Triangular.kind:
        return Triangular(float(data["vf"]), float(data["kj"]), float(data["kc"]))
    if kind == Greenshields.kind:
        return Greenshields(float(data["vf"]), float(data["kj"]))
    raise ValidationError(f"unknown fundamental diagram kind {kind!r}")


def flow(fd: FundamentalDiagram, k):
    return fd.flow(k)


def demand(fd: FundamentalDiagram, k):
    return fd.demand(k)


def supply(fd: FundamentalDiagram, k):
    return fd.supply(k)


def density_from_state(fd: FundamentalDiagram, state: TrafficState) -> float:
    return fd.density_from_state(state)
