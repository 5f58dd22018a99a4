"""Pump-probe wave-packet interferometry signals for a vibronic dimer."""

__version__ = "0.1.0"

from .pulse_propagators import PulseParams, build_block
from .signal_engine import (
    SignalEngine, duration_sweep, parse_pathway, pump_probe, pump_probe_difference,
)
from .special_functions import complex_erf, nested_gaussian_integral
from .vibronic_model import DimerModel, ModelParams, VibronicBasis

__all__ = [
    "__version__", "PulseParams", "build_block", "SignalEngine", "duration_sweep",
    "parse_pathway", "pump_probe", "pump_probe_difference", "complex_erf",
    "nested_gaussian_integral", "DimerModel", "ModelParams", "VibronicBasis",
]
