"""Density-matrix simulation of entanglement swapping along a cluster-state bus."""
from .bus import BellDiagonal, BusSpec, TimeModel, bus_fast_path, fidelity_closed_form, simulate_bus_exact
from .noise import ErrorModel, NoiseModel
from .qmat import DensityMatrix

__all__ = [
    "BellDiagonal",
    "BusSpec",
    "DensityMatrix",
    "ErrorModel",
    "NoiseModel",
    "TimeModel",
    "bus_fast_path",
    "fidelity_closed_form",
    "simulate_bus_exact",
]
__version__ = "0.1.0"
