from .settings import (
    AEConfig,
    PipelineConfig,
    SegmentationConfig,
    SpectralConfig,
    TrainConfig,
    load_pipeline_config,
    pipeline_config_from_dict,
)

__all__ = [
    "AEConfig",
    "PipelineConfig",
    "SegmentationConfig",
    "SpectralConfig",
    "TrainConfig",
    "load_pipeline_config",
    "pipeline_config_from_dict",
]
