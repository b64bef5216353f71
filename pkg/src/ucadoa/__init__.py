"""Wideband-dictionary DOA estimation with mutual coupling for uniform circular arrays."""

from .array import (ArrayConfig, CouplingVector, GroundTruth, ModelError, Source, SourceSet,
                    coupling_matrix, reference_array, reference_coupling, reference_sources, steering_matrix,
                    steering_vector, synthesize)
from .coupling import CouplingCost, coupling_cost, estimate_coupling, f_transform
from .dictionary import Band, BandGrid, build_dictionary, refine, uniform_grid
from .lasso import StackedSystem, solve_lasso
from .pipeline import EstimationResult, PipelineConfig, match_estimates, run
from .subspace import reduce, select_model_order

__version__ = "0.1.0"

__all__ = [
    "ArrayConfig", "Band", "BandGrid", "CouplingCost", "CouplingVector", "EstimationResult",
    "GroundTruth", "ModelError", "PipelineConfig", "Source", "SourceSet", "StackedSystem",
    "build_dictionary", "coupling_cost", "coupling_matrix", "estimate_coupling", "f_transform",
    "match_estimates", "reference_array", "reference_coupling", "reference_sources", "reduce", "refine",
    "run", "select_model_order", "solve_lasso", "steering_matrix", "steering_vector",
    "synthesize", "uniform_grid",
]
