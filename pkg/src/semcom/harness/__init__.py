from .config import (CodecConfig, ConfigError, DatasetConfig, ExperimentConfig,
                     RefinerTrainConfig, config_from_dict, load_config, save_config)
from .data import batch_iterator, load_dataset, synthetic_images
from .evaluate import EvalResult, ablate, evaluate
from .manifest import RunManifest, file_sha256
from .training import (build_codec, build_refiner, codec_from_checkpoint, derived_seed,
                       refiner_from_checkpoint, train_codec, train_refiner)

__all__ = [
    "CodecConfig", "ConfigError", "DatasetConfig", "EvalResult", "ExperimentConfig",
    "RefinerTrainConfig", "RunManifest", "ablate", "batch_iterator", "build_codec",
    "build_refiner", "codec_from_checkpoint", "config_from_dict", "derived_seed",
    "evaluate", "file_sha256", "load_config", "load_dataset",
    "refiner_from_checkpoint", "save_config", "synthetic_images", "train_codec",
    "train_refiner",
]
