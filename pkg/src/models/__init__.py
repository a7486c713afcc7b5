from .audio import AudioBuffer, BarGrid, SegmentAnnotation
from .features import (
    BAR_FRAMES,
    Autosimilarity,
    BarTensor,
    FeatureKind,
    LatentMatrix,
    MelFilterbank,
    SimilaritySource,
    Spectrogram,
)
from .results import (
    CorpusReport,
    HitRateScore,
    SegmentationResult,
    SongReport,
    StopReason,
    TrainReport,
    WindowMean,
)

__all__ = [
    "AudioBuffer",
    "BarGrid",
    "SegmentAnnotation",
    "BAR_FRAMES",
    "Autosimilarity",
    "BarTensor",
    "FeatureKind",
    "LatentMatrix",
    "MelFilterbank",
    "SimilaritySource",
    "Spectrogram",
    "CorpusReport",
    "HitRateScore",
    "SegmentationResult",
    "SongReport",
    "StopReason",
    "TrainReport",
    "WindowMean",
]
