import os
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml
from dotenv import load_dotenv

load_dotenv()

FEATURES = ("chroma", "mel", "log_mel", "mfcc")
MODES = ("latent", "raw_feature")


@dataclass
class SpectralConfig:
    n_fft: int = 2048
    hop: int = 32  # samples
    n_mels: int = 80
    f_min: float = 80.0
    f_max: float = 16000.0
    n_mfcc: int = 32
    log_floor_ratio: float = 1e-10  # relative to the song's max Mel power


@dataclass
class AEConfig:
    d_ls: int = 32
    feature_dim: int = 80
    seed: int = 0

    def __post_init__(self):
        if self.d_ls < 1:
            raise ValueError(f"d_ls must be >= 1, got {self.d_ls}")
        if self.feature_dim < 4 or self.feature_dim % 4:
            raise ValueError(f"feature_dim must be a positive multiple of 4, got {self.feature_dim}")


@dataclass
class TrainConfig:
    lr0: float = 1e-3
    lr_min: float = 1e-5
    plateau_patience: int = 20  # epochs
    lr_divisor: float = 10.0
    early_stop_patience: int = 100  # epochs
    max_epochs: int = 1000
    batch_size: int = 8
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        positive = ("lr0", "lr_min", "plateau_patience", "lr_divisor", "early_stop_patience", "max_epochs", "batch_size")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.lr_min > self.lr0:
            raise ValueError(f"lr_min ({self.lr_min}) must not exceed lr0 ({self.lr0})")


@dataclass
class SegmentationConfig:
    max_segment_bars: int = 36
    min_segment_bars: int = 1
    penalty_weight: float = 0.5  # lambda of the regularity cost
    target_size: int = 8  # bars
    length_exponent: float = 1.0  # kernel sum divided by n ** exponent

    def __post_init__(self):
        if not 1 <= self.min_segment_bars <= self.max_segment_bars:
            raise ValueError(
                f"Need 1 <= min_segment_bars <= max_segment_bars, got {self.min_segment_bars}, {self.max_segment_bars}"
            )
        if self.penalty_weight < 0:
            raise ValueError(f"penalty_weight must be >= 0, got {self.penalty_weight}")
        if self.target_size < 1:
            raise ValueError(f"target_size must be >= 1, got {self.target_size}")


@dataclass
class PipelineConfig:
    feature: str = "log_mel"
    mode: str = "latent"  # 'latent' or 'raw_feature'
    seed: int = 0
    windows: tuple[float, ...] = (0.5, 3.0)  # seconds
    trim: bool = False
    best_of_refs: bool = False
    jobs: int | None = None  # None: SONGAE_JOBS or all cores
    spectral: SpectralConfig = field(default_factory=SpectralConfig)
    ae: AEConfig = field(default_factory=AEConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)

    def __post_init__(self):
        if self.feature not in FEATURES:
            raise ValueError(f"Unknown feature '{self.feature}', expected one of {FEATURES}")
        if self.mode not in MODES:
            raise ValueError(f"Unknown mode '{self.mode}', expected one of {MODES}")
        self.windows = tuple(float(w) for w in self.windows)
        if not self.windows or any(w <= 0 for w in self.windows):
            raise ValueError(f"Tolerance windows must be positive, got {self.windows}")

    @property
    def worker_count(self) -> int:
        if self.jobs:
            return self.jobs
        env_jobs = os.getenv("SONGAE_JOBS")
        if env_jobs:
            return int(env_jobs)
        return os.cpu_count() or 1

    @property
    def log_level(self) -> str:
        return os.getenv("SONGAE_LOG_LEVEL", "INFO").upper()


_SECTIONS = {
    "spectral": SpectralConfig,
    "ae": AEConfig,
    "train": TrainConfig,
    "segmentation": SegmentationConfig,
}


def _build_section(cls, data: dict | None):
    data = data or {}
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"Unknown {cls.__name__} keys: {sorted(unknown)}")
    return cls(**data)


def pipeline_config_from_dict(config_data: dict) -> PipelineConfig:
    """Build a PipelineConfig from a nested dict, sections falling back to defaults"""
    config_data = dict(config_data or {})
    sections = {name: _build_section(cls, config_data.pop(name, None)) for name, cls in _SECTIONS.items()}
    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(config_data) - known
    if unknown:
        raise ValueError(f"Unknown pipeline keys: {sorted(unknown)}")
    if "windows" in config_data:
        config_data["windows"] = tuple(config_data["windows"])
    return PipelineConfig(**config_data, **sections)


def load_pipeline_config(config_path: str | Path) -> PipelineConfig:
    """Load pipeline configuration from YAML"""
    with open(config_path) as f:
        config_data = yaml.safe_load(f) or {}
    return pipeline_config_from_dict(config_data)
