"""Simulation and design toolkit for electro-optic frequency-bin beamsplitters."""

__version__ = "0.1.0"

from .core import (
    ModulatorSpec,
    ShaperSpec,
    SpecificationError,
    TransferMatrix,
    build_transfer,
    canonical_device,
    canonical_transfer,
    computational_submatrix,
    closed_form_transfer,
)
from .metrics import HADAMARD, GateMetrics, SplitterRatios, fidelity, gate_metrics, splitter_ratios, success
from .specfun import BesselRow, bessel_j, truncation_order

__all__ = [
    "HADAMARD", "BesselRow", "GateMetrics", "ModulatorSpec", "ShaperSpec", "SpecificationError",
    "SplitterRatios", "TransferMatrix", "bessel_j", "build_transfer", "canonical_device",
    "canonical_transfer", "computational_submatrix", "closed_form_transfer", "fidelity", "gate_metrics",
    "splitter_ratios", "success", "truncation_order",
]
