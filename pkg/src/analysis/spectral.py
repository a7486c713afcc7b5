import logging
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import fft as sp_fft
from scipy.signal import get_window

from src.config.settings import SpectralConfig
from src.errors import FeatureError
from src.models.audio import AudioBuffer
from src.models.features import FeatureKind, MelFilterbank, Spectrogram

logger = logging.getLogger(__name__)

A4_HZ = 440.0
CHROMA_MIN_HZ = 27.5  # A0
PITCH_CLASSES = ("C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B")
_FRAME_CHUNK = 1024


def hz_to_mel(frequencies):
    return 2595.0 * np.log10(1.0 + np.asarray(frequencies, dtype=np.float64) / 700.0)


def mel_to_hz(mels):
    return 700.0 * (10.0 ** (np.asarray(mels, dtype=np.float64) / 2595.0) - 1.0)


def fft_frequencies(sample_rate: int, n_fft: int) -> np.ndarray:
    return np.arange(n_fft // 2 + 1) * sample_rate / n_fft


def frame_count(num_samples: int, n_fft: int, hop: int) -> int:
    """Frames lying fully inside the signal (no centering, no padding)"""
    if n_fft > num_samples:
        return 0
    return 1 + (num_samples - n_fft) // hop


def _require_kind(spec: Spectrogram, kind: FeatureKind) -> None:
    if spec.feature_kind is not kind:
        raise FeatureError(f"Expected a {kind.value} spectrogram, got {spec.feature_kind.value}")


def _power_chunks(audio: AudioBuffer, n_fft: int, hop: int, indices: np.ndarray):
    """Yield (offset, power columns) for `indices`, a bounded number of frames at a time"""
    window = get_window("hann", n_fft, fftbins=True)
    framed = sliding_window_view(audio.samples, n_fft)[::hop]
    for start in range(0, indices.size, _FRAME_CHUNK):
        spectrum = sp_fft.rfft(framed[indices[start : start + _FRAME_CHUNK]] * window, axis=1)
        yield start, (spectrum.real**2 + spectrum.imag**2).T


def stft_power(audio: AudioBuffer, n_fft: int = 2048, hop: int = 32, frames=None) -> Spectrogram:
    """Hann-windowed power spectrogram |DFT|^2, one column per frame.

    `frames` restricts the computation to a subset of frame indices; the
    columns are identical to those of the full spectrogram.
    """
    if n_fft < 2 or hop < 1:
        raise FeatureError(f"Invalid STFT parameters n_fft={n_fft}, hop={hop}")
    total = frame_count(audio.num_samples, n_fft, hop)
    if total == 0:
        raise FeatureError(f"Audio of {audio.num_samples} samples is shorter than one {n_fft}-sample frame")

    if frames is None:
        indices = np.arange(total)
    else:
        indices = np.unique(np.asarray(frames, dtype=np.int64))
        if indices.size == 0 or indices[0] < 0 or indices[-1] >= total:
            raise FeatureError(f"Requested frames fall outside [0, {total})")

    power = np.empty((n_fft // 2 + 1, indices.size))
    for start, chunk_power in _power_chunks(audio, n_fft, hop, indices):
        power[:, start : start + chunk_power.shape[1]] = chunk_power

    logger.debug(f"STFT: {indices.size}/{total} frames, n_fft={n_fft}, hop={hop}")
    return Spectrogram(
        values=power,
        feature_kind=FeatureKind.STFT_POWER,
        hop_samples=hop,
        sample_rate=audio.sample_rate,
        n_fft=n_fft,
        num_frames=total,
        frame_indices=indices,
    )


@lru_cache(maxsize=16)
def build_mel_filterbank(
    sample_rate: int, n_fft: int, n_mels: int = 80, f_min: float = 80.0, f_max: float = 16000.0
) -> MelFilterbank:
    """Triangular filters with unit peaks, centers equally spaced on the Mel scale"""
    if f_max > sample_rate / 2:
        raise FeatureError(f"f_max {f_max} Hz is above the Nyquist frequency of {sample_rate} Hz audio")
    if not 0 <= f_min < f_max:
        raise FeatureError(f"Invalid Mel band [{f_min}, {f_max}]")

    edges = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2))
    freqs = fft_frequencies(sample_rate, n_fft)
    lower, center, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs[None, :] - lower) / (center - lower)
    falling = (upper - freqs[None, :]) / (upper - center)
    weights = np.maximum(0.0, np.minimum(rising, falling))

    empty = np.flatnonzero(weights.sum(axis=1) == 0)
    if empty.size:
        raise FeatureError(f"Mel filters {empty.tolist()} cover no FFT bin; increase n_fft")

    return MelFilterbank(
        weights=weights,
        center_frequencies=edges[1:-1],
        sample_rate=sample_rate,
        n_fft=n_fft,
        f_min=f_min,
        f_max=f_max,
    )


def apply_filterbank(stft: Spectrogram, filterbank: MelFilterbank) -> Spectrogram:
    _require_kind(stft, FeatureKind.STFT_POWER)
    if filterbank.weights.shape[1] != stft.num_bins:
        raise FeatureError(f"Filterbank expects {filterbank.weights.shape[1]} bins, spectrogram has {stft.num_bins}")
    return stft.with_values(filterbank.weights @ stft.values, FeatureKind.MEL)


def mel_spectrogram(
    audio: AudioBuffer,
    n_fft: int = 2048,
    hop: int = 32,
    frames=None,
    n_mels: int = 80,
    f_min: float = 80.0,
    f_max: float = 16000.0,
) -> Spectrogram:
    stft = stft_power(audio, n_fft, hop, frames)
    return apply_filterbank(stft, build_mel_filterbank(audio.sample_rate, n_fft, n_mels, f_min, f_max))


def peak_mel_power(audio: AudioBuffer, filterbank: MelFilterbank, n_fft: int = 2048, hop: int = 32) -> float:
    """Largest Mel power over every frame of the song, without holding the full spectrogram"""
    all_frames = np.arange(frame_count(audio.num_samples, n_fft, hop))
    peak = 0.0
    for _, chunk_power in _power_chunks(audio, n_fft, hop, all_frames):
        peak = max(peak, float((filterbank.weights @ chunk_power).max(initial=0.0)))
    return peak


def relative_floor(mel: Spectrogram, ratio: float = 1e-10, peak: float | None = None) -> float:
    """Log floor as a fraction of the song's maximum Mel power (stays positive on silence).

    `peak` overrides the maximum of `mel`; pass it when `mel` holds only some
    of the song's frames.
    """
    if peak is None:
        peak = float(mel.values.max(initial=0.0))
    return max(ratio * peak, np.finfo(np.float64).tiny)


def log_mel(mel: Spectrogram, floor: float) -> Spectrogram:
    """log10(max(mel, floor)) - log10(floor); zero wherever the power is at or below the floor"""
    _require_kind(mel, FeatureKind.MEL)
    if not floor > 0:
        raise FeatureError(f"Log floor must be positive, got {floor}")
    values = np.log10(np.maximum(mel.values, floor)) - np.log10(floor)
    return mel.with_values(values, FeatureKind.LOG_MEL)


def dct_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Rows of the orthonormal DCT-II"""
    return sp_fft.dct(np.eye(n_in), type=2, norm="ortho", axis=0)[:n_out]


def mfcc(log_mel_spec: Spectrogram, n_mfcc: int = 32) -> Spectrogram:
    _require_kind(log_mel_spec, FeatureKind.LOG_MEL)
    if n_mfcc > log_mel_spec.num_bins:
        raise FeatureError(f"Cannot keep {n_mfcc} coefficients from {log_mel_spec.num_bins} Mel bands")
    coefficients = sp_fft.dct(log_mel_spec.values, type=2, norm="ortho", axis=0)[:n_mfcc]
    return log_mel_spec.with_values(coefficients, FeatureKind.MFCC)


@lru_cache(maxsize=16)
def chroma_assignment(sample_rate: int, n_fft: int) -> np.ndarray:
    """12 x (n_fft/2 + 1) 0/1 matrix mapping each bin to its nearest pitch class (C = 0)"""
    freqs = fft_frequencies(sample_rate, n_fft)
    matrix = np.zeros((12, freqs.size))
    audible = np.flatnonzero(freqs >= CHROMA_MIN_HZ)
    midi = 69.0 + 12.0 * np.log2(freqs[audible] / A4_HZ)
    pitch_class = np.floor(midi + 0.5).astype(np.int64) % 12
    matrix[pitch_class, audible] = 1.0
    matrix.setflags(write=False)
    return matrix


def chromagram(stft: Spectrogram) -> Spectrogram:
    _require_kind(stft, FeatureKind.STFT_POWER)
    return stft.with_values(chroma_assignment(stft.sample_rate, stft.n_fft) @ stft.values, FeatureKind.CHROMA)


def compute_feature(
    audio: AudioBuffer, kind: FeatureKind | str, config: SpectralConfig | None = None, frames=None
) -> Spectrogram:
    """Feature spectrogram of the requested kind (chroma, mel, log_mel, mfcc or stft_power)"""
    config = config or SpectralConfig()
    kind = FeatureKind(kind)
    stft = stft_power(audio, config.n_fft, config.hop, frames)
    if kind is FeatureKind.STFT_POWER:
        return stft
    if kind is FeatureKind.CHROMA:
        return chromagram(stft)

    filterbank = build_mel_filterbank(audio.sample_rate, config.n_fft, config.n_mels, config.f_min, config.f_max)
    mel = apply_filterbank(stft, filterbank)
    if kind is FeatureKind.MEL:
        return mel
    peak = None
    if mel.frame_indices.size < mel.num_frames:
        peak = peak_mel_power(audio, filterbank, config.n_fft, config.hop)
        logger.debug(f"Song-wide Mel peak {peak:.4g} from all {mel.num_frames} frames")
    log_spec = log_mel(mel, relative_floor(mel, config.log_floor_ratio, peak))
    if kind is FeatureKind.LOG_MEL:
        return log_spec
    return mfcc(log_spec, config.n_mfcc)
