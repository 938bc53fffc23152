"""GAN-assisted intrusion detection training.

A classifier is trained on an imbalanced multiclass dataset; for every
class whose validation F1 falls below a threshold, a per-class GAN
proposes synthetic training samples that a controller admits only when
they measurably improve performance.
"""

from .controller import Controller, ControllerConfig, RoundLog, decide, weak_labels
from .detector import IdsClassifier
from .errors import ConfigError, DataError, GidsError
from .metrics import MetricsReport, class_metrics, confusion, evaluate_predictions, macro_f1
from .neural import Mlp, SgdOptimizer, TrainConfig, backprop_grads, init_mlp
from .pipeline import (
    LabeledMatrix,
    PreprocessingPipeline,
    RawTable,
    Schema,
    load_dataset,
    sparsity,
    stratified_split,
    stratified_split_indices,
)
from .store import Flag, FlaggedSample, SampleStore
from .synthesizer import GanConfig, GanPair, GanSynthesizer, generate, train_gan

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "Controller",
    "ControllerConfig",
    "DataError",
    "Flag",
    "FlaggedSample",
    "GanConfig",
    "GanPair",
    "GanSynthesizer",
    "GidsError",
    "IdsClassifier",
    "LabeledMatrix",
    "MetricsReport",
    "Mlp",
    "PreprocessingPipeline",
    "RawTable",
    "RoundLog",
    "SampleStore",
    "Schema",
    "SgdOptimizer",
    "TrainConfig",
    "backprop_grads",
    "class_metrics",
    "confusion",
    "decide",
    "evaluate_predictions",
    "generate",
    "init_mlp",
    "load_dataset",
    "macro_f1",
    "sparsity",
    "stratified_split",
    "stratified_split_indices",
    "train_gan",
    "weak_labels",
]
