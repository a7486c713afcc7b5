import logging
import math
import warnings
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from src.errors import AnnotationFormatError, AudioFileNotFoundError, EmptyAudioError, UnsupportedCodecError
from src.models.audio import AudioBuffer, BarGrid, SegmentAnnotation

logger = logging.getLogger(__name__)

PCM16_SCALE = 32768.0
CONTIGUITY_TOLERANCE = 1e-3  # seconds


def load_wav(path: str | Path) -> AudioBuffer:
    """Load a PCM16 or float32 RIFF/WAVE file as a mono buffer.

    Channels are averaged; 16-bit integers are scaled by 1/32768. No resampling.
    """
    path = Path(path)
    if not path.is_file():
        raise AudioFileNotFoundError(f"Audio file not found: {path}")

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            sample_rate, data = wavfile.read(path)
    except ValueError as e:
        raise UnsupportedCodecError(f"Cannot decode {path.name}: {e}") from e

    if data.dtype == np.int16:
        samples = data.astype(np.float64) / PCM16_SCALE
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise UnsupportedCodecError(f"{path.name}: only 16-bit PCM and 32-bit float are supported, got {data.dtype}")

    if samples.size == 0:
        raise EmptyAudioError(f"{path.name} contains no audio")

    if samples.ndim == 2:
        logger.debug(f"Downmixing {samples.shape[1]} channels of {path.name}")
        samples = samples.mean(axis=1)

    if not np.all(np.isfinite(samples)):
        raise UnsupportedCodecError(f"{path.name} contains non-finite samples")
    if np.any(np.abs(samples) > 1.0):
        logger.warning(f"{path.name}: float samples outside [-1, 1] were clipped")
        samples = np.clip(samples, -1.0, 1.0)

    audio = AudioBuffer(samples=samples, sample_rate=int(sample_rate))
    logger.info(f"Loaded {path.name}: {audio.duration:.2f}s at {audio.sample_rate} Hz")
    return audio


def _content_lines(text: str):
    """Yield (line_number, content) for lines that are not blank or comments"""
    for line_number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if content:
            yield line_number, content


def parse_bar_grid(path: str | Path, song_duration: float) -> BarGrid:
    """Parse a bar-start file (one time per line).

    Two-column downbeat-tracker exports ("time beat_position") are accepted too;
    only the rows at beat position 1 are kept.
    """
    path = Path(path)
    starts: list[float] = []
    for line_number, content in _content_lines(path.read_text()):
        fields = content.split()
        try:
            time = float(fields[0])
            position = float(fields[1]) if len(fields) > 1 else 1.0
        except ValueError as e:
            raise AnnotationFormatError(f"cannot parse '{content}' as a bar time", line_number) from e
        if len(fields) > 2:
            raise AnnotationFormatError(f"expected 1 or 2 columns, got {len(fields)}", line_number)
        if position != 1.0:
            continue
        if not math.isfinite(time) or time < 0 or time >= song_duration:
            raise AnnotationFormatError(f"bar start {time} outside [0, {song_duration})", line_number)
        if starts and time <= starts[-1]:
            raise AnnotationFormatError(f"bar start {time} does not follow {starts[-1]}", line_number)
        starts.append(time)

    if len(starts) < 2:
        raise AnnotationFormatError(f"{path.name}: a bar grid needs at least 2 bars, found {len(starts)}")

    logger.debug(f"Parsed {len(starts)} bars from {path.name}")
    return BarGrid(bar_starts=np.array(starts), song_end=song_duration)


def write_bar_grid(grid: BarGrid, path: str | Path) -> None:
    lines = [f"# {grid.num_bars} bars, song end {grid.song_end!r}"]
    lines.extend(repr(float(t)) for t in grid.bar_starts)
    Path(path).write_text("\n".join(lines) + "\n")


def uniform_bar_grid(duration: float, bar_seconds: float, offset: float = 0.0) -> BarGrid:
    """Constant-tempo grid: bars every `bar_seconds` from `offset` until `duration`"""
    if bar_seconds <= 0:
        raise ValueError(f"bar_seconds must be positive, got {bar_seconds}")
    count = int(np.floor((duration - offset) / bar_seconds - 1e-9)) + 1
    return BarGrid(bar_starts=offset + bar_seconds * np.arange(count), song_end=duration)


def parse_segments(path: str | Path) -> SegmentAnnotation:
    """Parse a `.lab`-style file of contiguous "start<TAB>end<TAB>label" segments"""
    path = Path(path)
    starts: list[float] = []
    labels: list[str] = []
    end = None
    for line_number, content in _content_lines(path.read_text()):
        fields = content.split(maxsplit=2)
        if len(fields) < 2:
            raise AnnotationFormatError(f"expected 'start end label', got '{content}'", line_number)
        try:
            start, stop = float(fields[0]), float(fields[1])
        except ValueError as e:
            raise AnnotationFormatError(f"non-numeric segment times in '{content}'", line_number) from e
        if not (math.isfinite(start) and math.isfinite(stop)) or stop <= start:
            raise AnnotationFormatError(f"segment [{start}, {stop}] is empty or reversed", line_number)
        if end is not None and abs(start - end) > CONTIGUITY_TOLERANCE:
            kind = "gap" if start > end else "overlap"
            raise AnnotationFormatError(f"{kind} of {abs(start - end):.4f}s after the previous segment", line_number)
        starts.append(start)
        labels.append(fields[2] if len(fields) > 2 else "")
        end = stop

    if end is None:
        raise AnnotationFormatError(f"{path.name} contains no segments")

    boundaries = np.unique(np.array([*starts, end]))
    return SegmentAnnotation(boundaries=boundaries, labels=tuple(labels))
