from dataclasses import dataclass

import numpy as np

from src.errors import AnnotationFormatError, EmptyAudioError


def _frozen(values, dtype=np.float64) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class AudioBuffer:
    """Mono signal with amplitudes in [-1, 1]"""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = _frozen(self.samples)
        if samples.ndim != 1:
            raise ValueError(f"AudioBuffer must be mono, got shape {samples.shape}")
        if samples.size == 0:
            raise EmptyAudioError("Audio buffer is empty")
        if not np.all(np.isfinite(samples)):
            raise ValueError("Audio buffer contains non-finite samples")
        if self.sample_rate <= 0:
            raise ValueError(f"Sample rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def num_samples(self) -> int:
        return int(self.samples.size)

    @property
    def duration(self) -> float:
        return self.num_samples / self.sample_rate


@dataclass(frozen=True)
class BarGrid:
    bar_starts: np.ndarray  # seconds
    song_end: float

    def __post_init__(self):
        starts = _frozen(self.bar_starts)
        if starts.ndim != 1 or starts.size < 2:
            raise AnnotationFormatError(f"A bar grid needs at least 2 bars, got {starts.size}")
        if starts[0] < 0:
            raise AnnotationFormatError(f"First bar starts before 0: {starts[0]}")
        if np.any(np.diff(starts) <= 0):
            raise AnnotationFormatError("Bar starts must be strictly increasing")
        if not self.song_end > starts[-1]:
            raise AnnotationFormatError(f"Song end {self.song_end} must follow the last bar start {starts[-1]}")
        object.__setattr__(self, "bar_starts", starts)
        object.__setattr__(self, "song_end", float(self.song_end))

    @property
    def num_bars(self) -> int:
        return int(self.bar_starts.size)

    @property
    def bar_ends(self) -> np.ndarray:
        return np.append(self.bar_starts[1:], self.song_end)

    @property
    def edges(self) -> np.ndarray:
        """All bar starts followed by the song end (B + 1 values)"""
        return np.append(self.bar_starts, self.song_end)


@dataclass(frozen=True)
class SegmentAnnotation:
    boundaries: np.ndarray  # seconds, piece start and end included
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        boundaries = _frozen(self.boundaries)
        if boundaries.ndim != 1 or boundaries.size < 2:
            raise AnnotationFormatError(f"An annotation needs at least 2 boundaries, got {boundaries.size}")
        if np.any(np.diff(boundaries) <= 0):
            raise AnnotationFormatError("Segment boundaries must be strictly increasing")
        object.__setattr__(self, "boundaries", boundaries)
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
