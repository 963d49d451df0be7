"""Conditional simulation of categorical rasters with transiogram models."""

from .errors import (
    ConfigError,
    DataError,
    EmptyInputError,
    McrfsimError,
    ParseError,
    SchemaError,
    UnreliableEntriesError,
)
from .engine import (
    UNSIMULATED,
    simulate_ensemble,
    simulate_realization,
)
from .estimator import MCRFSimulator
from .grid import (
    NODATA,
    ClassInfo,
    Raster,
    SampleSet,
    cell_center,
    class_proportions,
    generate_blob_reference,
    random_sample,
    snap_to_cell,
)
from .models import (
    ModelDescriptor,
    TransiogramModelSet,
    build_model_set,
    validate_model_set,
)
from .postprocess import (
    Ensemble,
    ProbabilityCube,
    accuracy,
    occurrence_probability,
    optimal_map,
    proportion_report,
)
from .transiograms import (
    ExperimentalTransiogramMatrix,
    LagBinSpec,
    estimate_experimental,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "EmptyInputError",
    "McrfsimError",
    "ParseError",
    "SchemaError",
    "UnreliableEntriesError",
    "NODATA",
    "UNSIMULATED",
    "ClassInfo",
    "Raster",
    "SampleSet",
    "cell_center",
    "class_proportions",
    "generate_blob_reference",
    "random_sample",
    "snap_to_cell",
    "LagBinSpec",
    "ExperimentalTransiogramMatrix",
    "estimate_experimental",
    "ModelDescriptor",
    "TransiogramModelSet",
    "build_model_set",
    "validate_model_set",
    "Ensemble",
    "ProbabilityCube",
    "occurrence_probability",
    "optimal_map",
    "accuracy",
    "proportion_report",
    "simulate_realization",
    "simulate_ensemble",
    "MCRFSimulator",
    "__version__",
]
