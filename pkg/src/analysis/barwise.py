import logging
import struct
from pathlib import Path

import numpy as np

from src.errors import BarwiseError
from src.models.audio import BarGrid
from src.models.features import BAR_FRAMES, BarTensor, FeatureKind, Spectrogram

logger = logging.getLogger(__name__)

_TENSOR_MAGIC = b"BART"
_TENSOR_HEADER = struct.Struct("<4sIIIIdd16s")


def bar_positions(grid: BarGrid, frames_per_bar: int = BAR_FRAMES) -> np.ndarray:
    """B x 96 sampling times: t_b + k * (t_{b+1} - t_b) / 96"""
    starts = grid.bar_starts[:, None]
    durations = (grid.bar_ends - grid.bar_starts)[:, None]
    return starts + np.arange(frames_per_bar)[None, :] * durations / frames_per_bar


def nearest_frames(times: np.ndarray, hop: int, n_fft: int, sample_rate: int, num_frames: int) -> np.ndarray:
    """Index of the frame whose center is nearest each time; ties go to the earlier frame"""
    position = (np.asarray(times) * sample_rate - n_fft / 2) / hop
    return np.clip(np.ceil(position - 0.5), 0, num_frames - 1).astype(np.int64)


def _check_grid(grid: BarGrid, hop: int, n_fft: int, sample_rate: int, num_frames: int) -> None:
    durations = grid.bar_ends - grid.bar_starts
    short = np.flatnonzero(durations < hop / sample_rate)
    if short.size:
        raise BarwiseError(f"Bar {int(short[0])} lasts {durations[short[0]]:.6f}s, shorter than one hop")
    covered = ((num_frames - 1) * hop + n_fft) / sample_rate
    if grid.song_end > covered + hop / sample_rate:
        raise BarwiseError(f"Bar grid ends at {grid.song_end:.3f}s but the spectrogram covers {covered:.3f}s")


def required_frames(grid: BarGrid, hop: int, n_fft: int, sample_rate: int, num_frames: int) -> np.ndarray:
    """Sorted unique frame indices that barwise_tensor will select for this grid"""
    _check_grid(grid, hop, n_fft, sample_rate, num_frames)
    return np.unique(nearest_frames(bar_positions(grid), hop, n_fft, sample_rate, num_frames))


def barwise_tensor(spec: Spectrogram, grid: BarGrid) -> BarTensor:
    """Stack 96 nearest-frame columns per bar, then min-max normalize the whole song to [0, 1]"""
    _check_grid(grid, spec.hop_samples, spec.n_fft, spec.sample_rate, spec.num_frames)
    wanted = nearest_frames(bar_positions(grid), spec.hop_samples, spec.n_fft, spec.sample_rate, spec.num_frames)

    columns = np.searchsorted(spec.frame_indices, wanted.ravel())
    columns = np.minimum(columns, spec.frame_indices.size - 1)
    if not np.array_equal(spec.frame_indices[columns], wanted.ravel()):
        raise BarwiseError("Spectrogram does not contain every frame the bar grid selects")

    bars = spec.values[:, columns].reshape(spec.num_bins, grid.num_bars, BAR_FRAMES).transpose(1, 2, 0)

    low, high = float(bars.min()), float(bars.max())
    if high > low:
        bars = (bars - low) / (high - low)
    else:
        bars = np.zeros_like(bars)

    padded = (-spec.num_bins) % 4
    if padded:
        logger.debug(f"Padding {spec.num_bins} feature bins with {padded} zero bins")
        bars = np.pad(bars, ((0, 0), (0, 0), (0, padded)))

    logger.debug(f"Bar tensor: {grid.num_bars} bars x {BAR_FRAMES} frames x {bars.shape[2]} bins")
    return BarTensor(bars=bars, feature_kind=spec.feature_kind, norm_min=low, norm_max=high, padded_bins=padded)


def bar_index_of(time: float, grid: BarGrid) -> int:
    """Largest b with bar_starts[b] <= time"""
    if not 0 <= time <= grid.song_end or time < grid.bar_starts[0]:
        raise BarwiseError(f"Time {time} is outside the bar grid [{grid.bar_starts[0]}, {grid.song_end}]")
    return int(np.searchsorted(grid.bar_starts, time, side="right") - 1)


def write_bar_tensor(tensor: BarTensor, path: str | Path) -> None:
    """Header then row-major little-endian float32 values"""
    header = _TENSOR_HEADER.pack(
        _TENSOR_MAGIC,
        tensor.num_bars,
        BAR_FRAMES,
        tensor.feature_dim,
        tensor.padded_bins,
        tensor.norm_min,
        tensor.norm_max,
        tensor.feature_kind.value.encode("ascii"),
    )
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(tensor.bars, dtype="<f4").tobytes())


def read_bar_tensor(path: str | Path) -> BarTensor:
    data = Path(path).read_bytes()
    if len(data) < _TENSOR_HEADER.size:
        raise BarwiseError(f"{path} is too short to be a bar tensor")
    magic, num_bars, frames, num_bins, padded, low, high, kind = _TENSOR_HEADER.unpack_from(data)
    if magic != _TENSOR_MAGIC or frames != BAR_FRAMES:
        raise BarwiseError(f"{path} is not a bar tensor file")
    values = np.frombuffer(data, dtype="<f4", offset=_TENSOR_HEADER.size)
    if values.size != num_bars * frames * num_bins:
        raise BarwiseError(f"{path}: expected {num_bars * frames * num_bins} values, found {values.size}")
    return BarTensor(
        bars=values.reshape(num_bars, frames, num_bins).astype(np.float64),
        feature_kind=FeatureKind(kind.rstrip(b"\0").decode("ascii")),
        norm_min=low,
        norm_max=high,
        padded_bins=padded,
    )
