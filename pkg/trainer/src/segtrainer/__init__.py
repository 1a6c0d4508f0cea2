"""Fine-tune encoder-decoder segmentation models on thermal frame/mask
catalogs and export predictions in the catalog's indexed-PNG mask format."""

from .data import (
    FrameItem,
    SegDataset,
    SplitManifests,
    read_manifest,
    read_split,
    split,
    write_split,
)
from .errors import (
    ConfigError,
    DataError,
    ScoringError,
    TrainerError,
    TrainingDiverged,
)
from .models import SegModel, build_model
from .predict import export_predictions, load_checkpoint, predict_array, predict_files
from .spec import MODEL_FAMILIES, TrainSpec
from .train import TrainResult, evaluate, read_curves, train

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "FrameItem",
    "MODEL_FAMILIES",
    "ScoringError",
    "SegDataset",
    "SegModel",
    "SplitManifests",
    "TrainerError",
    "TrainingDiverged",
    "TrainResult",
    "TrainSpec",
    "build_model",
    "evaluate",
    "export_predictions",
    "load_checkpoint",
    "predict_array",
    "predict_files",
    "read_curves",
    "read_manifest",
    "read_split",
    "split",
    "train",
    "write_split",
]
