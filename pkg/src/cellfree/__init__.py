"""Uplink cell-free massive MIMO simulator with four levels of AP cooperation."""

from .fronthaul import FronthaulReport, fronthaul_table
from .geometry import ConfigurationError, LayoutConfig, NetworkRealization, place_network
from .harness import CDFSummary, PropagationConfig, Scenario, SimulationPlan, aggregate, run_drop, run_simulation
from .se import SEResult

__version__ = "0.1.0"

__all__ = [
    "CDFSummary",
    "ConfigurationError",
    "FronthaulReport",
    "LayoutConfig",
    "NetworkRealization",
    "PropagationConfig",
    "SEResult",
    "Scenario",
    "SimulationPlan",
    "aggregate",
    "fronthaul_table",
    "place_network",
    "run_drop",
    "run_simulation",
]
