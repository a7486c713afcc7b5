from dataclasses import dataclass
from enum import Enum

import numpy as np

BAR_FRAMES = 96  # frames kept per bar


class FeatureKind(str, Enum):
    CHROMA = "chroma"
    MEL = "mel"
    LOG_MEL = "log_mel"
    MFCC = "mfcc"
    STFT_POWER = "stft_power"

    @property
    def is_signed(self) -> bool:
        return self is FeatureKind.MFCC


class SimilaritySource(str, Enum):
    LATENT = "latent"
    RAW_FEATURE = "raw_feature"


def _readonly(array: np.ndarray) -> np.ndarray:
    array = np.array(array)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Spectrogram:
    """F x n matrix of feature columns.

    Columns correspond to STFT frames `frame_indices` out of the `num_frames`
    frames that fit in the signal; frame t covers samples [t * hop, t * hop + n_fft).
    """

    values: np.ndarray
    feature_kind: FeatureKind
    hop_samples: int
    sample_rate: int
    n_fft: int
    num_frames: int
    frame_indices: np.ndarray | None = None

    def __post_init__(self):
        values = _readonly(np.asarray(self.values, dtype=np.float64))
        if values.ndim != 2:
            raise ValueError(f"Spectrogram values must be 2-D, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError(f"{self.feature_kind.value} spectrogram contains non-finite values")
        if not FeatureKind(self.feature_kind).is_signed and np.any(values < 0):
            raise ValueError(f"{self.feature_kind.value} spectrogram must be non-negative")
        if self.frame_indices is None:
            indices = np.arange(values.shape[1])
        else:
            indices = np.asarray(self.frame_indices, dtype=np.int64)
        if indices.shape != (values.shape[1],):
            raise ValueError(f"{indices.size} frame indices for {values.shape[1]} columns")
        if indices.size and (indices[0] < 0 or indices[-1] >= self.num_frames or np.any(np.diff(indices) <= 0)):
            raise ValueError("Frame indices must be strictly increasing within [0, num_frames)")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "feature_kind", FeatureKind(self.feature_kind))
        object.__setattr__(self, "frame_indices", _readonly(indices))

    @property
    def num_bins(self) -> int:
        return int(self.values.shape[0])

    @property
    def frame_centers(self) -> np.ndarray:
        """Center time in seconds of each stored column"""
        return (self.frame_indices * self.hop_samples + self.n_fft / 2) / self.sample_rate

    def with_values(self, values: np.ndarray, kind: FeatureKind) -> "Spectrogram":
        return Spectrogram(
            values=values,
            feature_kind=kind,
            hop_samples=self.hop_samples,
            sample_rate=self.sample_rate,
            n_fft=self.n_fft,
            num_frames=self.num_frames,
            frame_indices=self.frame_indices,
        )


@dataclass(frozen=True)
class MelFilterbank:
    weights: np.ndarray  # n_mels x (n_fft // 2 + 1)
    center_frequencies: np.ndarray  # Hz
    sample_rate: int
    n_fft: int
    f_min: float = 80.0
    f_max: float = 16000.0

    def __post_init__(self):
        object.__setattr__(self, "weights", _readonly(self.weights))
        object.__setattr__(self, "center_frequencies", _readonly(self.center_frequencies))

    @property
    def num_filters(self) -> int:
        return int(self.weights.shape[0])


@dataclass(frozen=True)
class BarTensor:
    """B x 96 x F stack of bar matrices, min-max normalized to [0, 1]"""

    bars: np.ndarray
    feature_kind: FeatureKind
    norm_min: float
    norm_max: float
    padded_bins: int = 0  # zero columns appended so F is a multiple of 4

    def __post_init__(self):
        bars = _readonly(np.asarray(self.bars, dtype=np.float64))
        if bars.ndim != 3 or bars.shape[1] != BAR_FRAMES:
            raise ValueError(f"Bar tensor must be B x {BAR_FRAMES} x F, got {bars.shape}")
        if bars.shape[0] < 2:
            raise ValueError(f"Bar tensor needs at least 2 bars, got {bars.shape[0]}")
        object.__setattr__(self, "bars", bars)
        object.__setattr__(self, "feature_kind", FeatureKind(self.feature_kind))

    @property
    def num_bars(self) -> int:
        return int(self.bars.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.bars.shape[2])

    def flattened(self) -> np.ndarray:
        """(96 * F) x B matrix, one column per bar"""
        return self.bars.reshape(self.num_bars, -1).T


@dataclass(frozen=True)
class LatentMatrix:
    Z: np.ndarray  # d_ls x B

    def __post_init__(self):
        Z = _readonly(np.asarray(self.Z, dtype=np.float64))
        if Z.ndim != 2 or Z.shape[1] < 2:
            raise ValueError(f"Latent matrix must be d_ls x B with B >= 2, got {Z.shape}")
        if not np.all(np.isfinite(Z)):
            raise ValueError("Latent matrix contains non-finite values")
        object.__setattr__(self, "Z", Z)

    @property
    def num_bars(self) -> int:
        return int(self.Z.shape[1])

    @property
    def d_ls(self) -> int:
        return int(self.Z.shape[0])


@dataclass(frozen=True)
class Autosimilarity:
    A: np.ndarray  # B x B
    source: SimilaritySource

    def __post_init__(self):
        object.__setattr__(self, "A", _readonly(np.asarray(self.A, dtype=np.float64)))
        object.__setattr__(self, "source", SimilaritySource(self.source))

    @property
    def num_bars(self) -> int:
        return int(self.A.shape[0])
