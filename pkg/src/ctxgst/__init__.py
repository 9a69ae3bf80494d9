"""Context-aware gate set tomography for a trapped-ion light-shift gate set."""
from .circuits import Circuit, Design, design_last_depth, design_log_spaced, parse_circuit
from .datagen import Dataset, exact_dataset, sample
from .estimator import FitConfig, FitResult, fit
from .fisher import FisherMatrix, crb_bounds, fisher_design
from .gateset import GateSet, ThetaLayout, ThetaVector, build_gateset, nominal_theta
from .lsgate import LsParams, Mode, amplification_factor
from .metrics import avg_gate_distance, diamond_distance
from .spectra import PhysicalConfig

__version__ = "0.1.0"

__all__ = [
    "Circuit", "Dataset", "Design", "FisherMatrix", "FitConfig", "FitResult", "GateSet", "LsParams", "Mode",
    "PhysicalConfig", "ThetaLayout", "ThetaVector", "amplification_factor", "avg_gate_distance", "build_gateset",
    "crb_bounds", "design_last_depth", "design_log_spaced", "diamond_distance", "exact_dataset", "fisher_design",
    "fit", "nominal_theta", "parse_circuit", "sample",
]
