import struct
import wave

import numpy as np
import pytest

from src.models.audio import BarGrid
from src.models.features import BarTensor, FeatureKind

SYNTH_RATE = 32000
LOW_TEXTURE = (200.0, 300.0)  # Hz
HIGH_TEXTURE = (4000.0, 6000.0)


def write_pcm16_wav(path, samples, sample_rate: int) -> None:
    """PCM16 file from an (n,) or (n, channels) array of integer sample values"""
    samples = np.asarray(samples, dtype=np.int16)
    if samples.ndim == 1:
        samples = samples[:, None]
    with wave.open(str(path), "wb") as f:
        f.setnchannels(samples.shape[1])
        f.setsampwidth(2)
        f.setframerate(sample_rate)
        f.writeframes(samples.astype("<i2").tobytes())


def write_float32_wav(path, samples, sample_rate: int) -> None:
    """IEEE-float (format tag 3) RIFF file, written field by field"""
    samples = np.asarray(samples, dtype="<f4")
    if samples.ndim == 1:
        samples = samples[:, None]
    channels = samples.shape[1]
    data = samples.tobytes()
    fmt = struct.pack("<HHIIHH", 3, channels, sample_rate, sample_rate * channels * 4, channels * 4, 32)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt + b"data" + struct.pack("<I", len(data)) + data
    with open(path, "wb") as f:
        f.write(b"RIFF" + struct.pack("<I", len(body)) + body)


def texture(frequencies, num_samples: int, sample_rate: int, amplitude: float = 0.3, start: int = 0) -> np.ndarray:
    t = (start + np.arange(num_samples)) / sample_rate
    return amplitude * sum(np.sin(2 * np.pi * f * t) for f in frequencies) / len(frequencies)


def synthetic_song(num_bars: int = 64, bars_per_section: int = 8, bar_seconds: float = 2.0, sample_rate=SYNTH_RATE):
    """Sections of `bars_per_section` bars alternating a low and a high sine chord"""
    section_samples = int(round(bars_per_section * bar_seconds * sample_rate))
    sections = []
    for index in range(num_bars // bars_per_section):
        frequencies = LOW_TEXTURE if index % 2 == 0 else HIGH_TEXTURE
        sections.append(texture(frequencies, section_samples, sample_rate, start=index * section_samples))
    return np.concatenate(sections)


def write_song_files(directory, stem: str, num_bars: int = 64, bars_per_section: int = 8, bar_seconds: float = 2.0):
    """Audio, uniform bar grid and reference annotation of a synthetic song"""
    for sub in ("audio", "bars", "refs"):
        (directory / sub).mkdir(parents=True, exist_ok=True)
    samples = synthetic_song(num_bars, bars_per_section, bar_seconds)
    write_pcm16_wav(directory / "audio" / f"{stem}.wav", np.round(samples * 32767), SYNTH_RATE)
    (directory / "bars" / f"{stem}.txt").write_text(
        "\n".join(repr(b * bar_seconds) for b in range(num_bars)) + "\n"
    )
    section = bars_per_section * bar_seconds
    lines = [
        f"{i * section!r}\t{(i + 1) * section!r}\t{'AB'[i % 2]}" for i in range(num_bars // bars_per_section)
    ]
    (directory / "refs" / f"{stem}.lab").write_text("\n".join(lines) + "\n")
    return directory / "audio" / f"{stem}.wav", directory / "bars" / f"{stem}.txt", directory / "refs" / f"{stem}.lab"


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def uniform_grid():
    """Eight 2-second bars"""
    return BarGrid(bar_starts=np.arange(8) * 2.0, song_end=16.0)


@pytest.fixture
def two_template_tensor():
    """10 bars alternating two complementary 96 x 8 templates"""
    first = np.zeros((96, 8))
    first[:, :4] = 1.0
    second = 1.0 - first
    bars = np.stack([first if b % 2 == 0 else second for b in range(10)])
    return BarTensor(bars=bars, feature_kind=FeatureKind.LOG_MEL, norm_min=0.0, norm_max=1.0)


@pytest.fixture
def song_files(tmp_path):
    """A short synthetic song: 16 bars of 2 s, texture change every 8 bars"""
    return write_song_files(tmp_path / "dataset", "song", num_bars=16)


@pytest.fixture
def block_autosimilarity():
    """Two 8-bar all-ones blocks on the diagonal, zeros elsewhere"""
    A = np.zeros((16, 16))
    A[:8, :8] = 1.0
    A[8:, 8:] = 1.0
    return A
