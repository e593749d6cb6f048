from .config import (
    ConfigError,
    DataSpec,
    Distribution,
    EpsilonSchedule,
    ExperimentConfig,
    RewardWeights,
    load_config,
    validate_config,
)
from .data import TEST, TRAIN, VAL, Dataset, make_blobs, split_train_val_test
from .metrics import Metrics, classification_metrics, minmax_normalize
from .records import CSV_HEADER, RoundRecord
from .rng import stream

__all__ = [
    "CSV_HEADER", "ConfigError", "DataSpec", "Dataset", "Distribution", "EpsilonSchedule",
    "ExperimentConfig", "Metrics", "RewardWeights", "RoundRecord", "TEST", "TRAIN", "VAL",
    "classification_metrics", "load_config", "make_blobs", "minmax_normalize",
    "split_train_val_test", "stream", "validate_config",
]
