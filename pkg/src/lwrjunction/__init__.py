"""Junction fluxes, Riemann solutions and cell-transmission simulation for
kinematic-wave traffic networks."""
from .errors import CapacityError, ConfigurationError, DomainError, InvariantError, ValidationError
from .fundamental_diagram import FundamentalDiagram, Greenshields, Regime, TrafficState, Triangular
from .junction_flux import (
    CriticalLevelBreakdown,
    FluxResult,
    JunctionSpec,
    average_demand_level,
    critical_demand_level,
    flux,
    gamma_star,
    noninvariant_flux,
)
from .riemann import RiemannInput, RiemannSolution, WaveDescription, WaveKind, check_consistency, link_wave, solve

__all__ = [
    "CapacityError", "ConfigurationError", "DomainError", "InvariantError", "ValidationError",
    "FundamentalDiagram", "Greenshields", "Regime", "TrafficState", "Triangular",
    "CriticalLevelBreakdown", "FluxResult", "JunctionSpec", "average_demand_level",
    "critical_demand_level", "flux", "gamma_star", "noninvariant_flux",
    "RiemannInput", "RiemannSolution", "WaveDescription", "WaveKind", "check_consistency", "link_wave", "solve",
]
