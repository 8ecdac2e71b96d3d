"""Transistor-level simulation and benchmarking of dynamic latch comparators."""
from .analytic import DelayModelInputs, OffsetModelInputs, average_power, offset_voltage, total_delay
from .devmodel import DEFAULT_NMOS, DEFAULT_PMOS, ModelCard, evaluate_mosfet
from .engine import NonConvergence, SolverOptions, dc_operating_point, transient, transient_batch
from .metrics import ComparatorMetrics, TestbenchSpec, characterize
from .netlist import Netlist, NetlistError, parse, to_text
from .topologies import TopologyId, generate_topology
from .variation import MismatchSpec, corners, monte_carlo, sweep

__version__ = "0.1.0"

__all__ = [
    "ComparatorMetrics", "DEFAULT_NMOS", "DEFAULT_PMOS", "DelayModelInputs", "MismatchSpec", "ModelCard",
    "Netlist", "NetlistError", "NonConvergence", "OffsetModelInputs", "SolverOptions", "TestbenchSpec",
    "TopologyId", "average_power", "characterize", "corners", "dc_operating_point", "evaluate_mosfet",
    "generate_topology", "monte_carlo", "offset_voltage", "parse", "sweep", "to_text", "total_delay",
    "transient", "transient_batch",
]
