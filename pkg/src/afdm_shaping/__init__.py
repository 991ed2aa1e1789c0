"""AFDM waveform design by reserved-subcarrier and pre-chirp optimization."""

from .baselines import BaselineSpec, conventional_afdm, gps_sweep, random_symbols
from .core import (
    AfdmConfig,
    DesignVector,
    ModulationMatrices,
    SubcarrierPartition,
    build_prechirp_alphabet,
    design_from_symbols,
    effective_spectral_efficiency,
    synthesize,
    synthesize_oversampled,
    wrap_index,
)
from .metrics import (
    AfGrid,
    LazSpec,
    QuadFormCache,
    ambiguity,
    ambiguity_grid,
    build_quadform_cache,
    ccdf,
    papr,
    weighted_isl,
)
from .estimator import AfdmWaveformDesigner
from .optimizer import DesignResult, OptimizerOptions, run_jipd_mm

__version__ = "0.1.0"

__all__ = [
    "AfdmConfig", "AfdmWaveformDesigner", "AfGrid", "BaselineSpec", "DesignResult", "DesignVector", "LazSpec",
    "ModulationMatrices", "OptimizerOptions", "QuadFormCache", "SubcarrierPartition",
    "ambiguity", "ambiguity_grid", "build_prechirp_alphabet", "build_quadform_cache", "ccdf",
    "conventional_afdm", "design_from_symbols", "effective_spectral_efficiency", "gps_sweep",
    "papr", "random_symbols", "run_jipd_mm", "synthesize", "synthesize_oversampled",
    "weighted_isl", "wrap_index",
]
