"""Physiological emotion classification pipeline.

Butterworth band-pass filter bank, windowed Hjorth features, and a bagging
ensemble (KNN + random forest + CART, majority vote) evaluated with
stratified cross-validation on two-class (valence, arousal) and four-class
(quadrant) tasks.
"""

__version__ = "0.1.0"

from .errors import (
    ComputationError,
    CorruptionError,
    DataError,
    EmopipeError,
    FormatError,
    ValidationError,
)
from .model import (
    CANONICAL_BANDS,
    Band,
    ChannelGroup,
    ColumnMeta,
    FeatureMatrix,
    Ratings,
    Recording,
    SignalKind,
    Task,
    binarize_rating,
    label_for_task,
    quadrant_label,
    standard_groups,
)

__all__ = [
    "__version__",
    "EmopipeError",
    "ValidationError",
    "DataError",
    "FormatError",
    "CorruptionError",
    "ComputationError",
    "Band",
    "CANONICAL_BANDS",
    "ChannelGroup",
    "ColumnMeta",
    "FeatureMatrix",
    "Ratings",
    "Recording",
    "SignalKind",
    "Task",
    "binarize_rating",
    "quadrant_label",
    "label_for_task",
    "standard_groups",
]
