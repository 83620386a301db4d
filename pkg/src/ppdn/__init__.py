"""Loss-aware routing and slot simulation for power packet dispatching networks."""

__version__ = "0.1.0"

from .circuit import EnergyTriple, LineParams
from .engine import CapPolicy, Demand, FailurePolicy, SlotParams, run_simulation, run_slot, simulate
from .network import Network, NodeKind, VoltageState, build_lattice, build_network
from .routing import CostMetric, WeightMatrix, best_source, enumerate_paths, shortest_path
from .scenario import ScenarioConfig, load_scenario, preset

__all__ = [
    "CapPolicy", "CostMetric", "Demand", "EnergyTriple", "FailurePolicy", "LineParams",
    "Network", "NodeKind", "ScenarioConfig", "SlotParams", "VoltageState", "WeightMatrix",
    "best_source", "build_lattice", "build_network", "enumerate_paths", "load_scenario",
    "preset", "run_simulation", "run_slot", "shortest_path", "simulate",
]
