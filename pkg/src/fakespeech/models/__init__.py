from .base import (
    SWEEP_PARAM,
    CorruptModelFile,
    DegenerateTraining,
    Family,
    InvalidHyperparameter,
    ModelError,
    ModelSpec,
    Standardizer,
    TrainedModel,
    VersionMismatch,
    fit,
    hyperparameter_ranges,
    load,
    save,
)

__all__ = [
    "SWEEP_PARAM", "CorruptModelFile", "DegenerateTraining", "Family", "InvalidHyperparameter",
    "ModelError", "ModelSpec", "Standardizer", "TrainedModel", "VersionMismatch", "fit",
    "hyperparameter_ranges", "load", "save",
]
