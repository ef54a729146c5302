"""Canonical small instances with hand-checkable answers.

These back the files under ``fixtures/``, the grid-oracle checks of the
``validate`` command and the acceptance tests.  All links use
Triangular(vf=1, kj=4, kc=1) (capacity 1, congested wave speed 1/3) unless
stated; the merge's downstream link has twice the capacity.
"""
from __future__ import annotations

from .fundamental_diagram import Triangular
from .junction_flux import JunctionSpec
from .riemann import RiemannInput

UNIT = Triangular(1.0, 4.0, 1.0)
WIDE = Triangular(1.0, 8.0, 2.0)


def _supply_density(fd: Triangular, s: float) -> float:
    # congested density with supply s (s < C); kept separate from the FD
    # inverse so fixtures do not depend on the code they test
    return fd.kj - s * (fd.kj - fd.kc) / (fd.vf * fd.kc)


def linear_free() -> RiemannInput:
    """d1 = 0.4 < s2 = 0.9: nothing throttled."""
    return RiemannInput.from_links([UNIT], [UNIT], [[1.0]], [0.4, _supply_density(UNIT, 0.9)])


def linear_congested() -> RiemannInput:
    """d1 = 0.9 > s2 = 0.5: a queue forms upstream."""
    return RiemannInput.from_links([UNIT], [UNIT], [[1.0]], [0.9, _supply_density(UNIT, 0.5)])


def linear_critical() -> RiemannInput:
    """d1 = s2 = 0.7."""
    return RiemannInput.from_links([UNIT], [UNIT], [[1.0]], [0.7, _supply_density(UNIT, 0.7)])


def merge() -> RiemannInput:
    """d = [0.6, 0.8] into a capacity-2 link with supply 1: each gets 0.5."""
    return RiemannInput.from_links([UNIT, UNIT], [WIDE], [[1.0], [1.0]], [0.6, 0.8, _supply_density(WIDE, 1.0)])


def diverge() -> RiemannInput:
    """d1 = 0.9 split evenly into supplies [0.3, 0.5]: the first branch blocks, f1 = 0.6."""
    return RiemannInput.from_links(
        [UNIT], [UNIT, UNIT], [[0.5, 0.5]],
        [0.9, _supply_density(UNIT, 0.3), _supply_density(UNIT, 0.5)],
    )


def two_by_two() -> RiemannInput:
    """d = [0.8, 0.6], s = [0.5, 0.9], xi = [[0.7, 0.3], [0.4, 0.6]]: theta = 5/11."""
    return RiemannInput.from_links(
        [UNIT, UNIT], [UNIT, UNIT], [[0.7, 0.3], [0.4, 0.6]],
        [0.8, 0.6, _supply_density(UNIT, 0.5), _supply_density(UNIT, 0.9)],
    )


def all_critical() -> RiemannInput:
    """d = s = C everywhere."""
    return RiemannInput.from_links([UNIT, UNIT], [UNIT, UNIT], [[0.5, 0.5], [0.5, 0.5]], [1.0] * 4)


RIEMANN_CASES = {
    "linear_free": linear_free,
    "linear_congested": linear_congested,
    "linear_critical": linear_critical,
    "merge": merge,
    "diverge": diverge,
    "two_by_two": two_by_two,
    "all_critical": all_critical,
}

# the cases whose stationary state is unique
UNIQUE_CASES = ("linear_free", "linear_congested", "linear_critical", "merge", "diverge", "two_by_two")


def order_counterexample() -> tuple[JunctionSpec, list[float], list[float]]:
    """Merge-diverge instance where the two operator orders of the min-max differ."""
    return JunctionSpec([1.0, 1.0], [1.0, 1.0], [[0.8, 0.2], [0.2, 0.8]]), [0.5, 0.5], [0.7, 0.7]
