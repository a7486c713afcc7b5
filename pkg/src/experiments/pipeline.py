import hashlib
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, replace
from pathlib import Path

from src.analysis.barwise import barwise_tensor, required_frames
from src.analysis.evaluation import best_of_references, score_windows
from src.analysis.segmentation import dp_segment
from src.analysis.similarity import autosimilarity, raw_feature_autosimilarity
from src.analysis.spectral import compute_feature, frame_count
from src.autoencoder.network import AEParams
from src.autoencoder.trainer import encode_song, train
from src.config.settings import AEConfig, PipelineConfig
from src.errors import PipelineStageError
from src.experiments.figures import SongArtifacts
from src.models.features import BarTensor, Spectrogram
from src.models.results import SegmentationResult, SongReport, TrainReport
from src.services.audio_io import load_wav, parse_bar_grid, parse_segments

logger = logging.getLogger(__name__)


@contextmanager
def stage(name: str):
    """Tag any failure inside the block with the pipeline stage it came from"""
    try:
        yield
    except PipelineStageError:
        raise
    except Exception as e:
        raise PipelineStageError(name, e) from e


def song_seed(master_seed: int, song_id: str) -> int:
    """Master seed offset by a stable hash of the song id"""
    digest = hashlib.sha256(song_id.encode("utf-8")).digest()
    return (master_seed + int.from_bytes(digest[:4], "little")) % 2**32


@dataclass
class SongAnalysis:
    report: SongReport
    segmentation: SegmentationResult
    artifacts: SongArtifacts
    spectrogram: Spectrogram
    tensor: BarTensor
    params: AEParams | None = None
    train_report: TrainReport | None = None


def analyze_song(
    audio_path: str | Path,
    bars_path: str | Path,
    config: PipelineConfig | None = None,
    reference_paths: list[str | Path] | None = None,
    song_id: str | None = None,
) -> SongAnalysis:
    """Features -> bars -> (train + encode | raw) -> autosimilarity -> segmentation -> scores"""
    config = config or PipelineConfig()
    song_id = song_id or Path(audio_path).stem
    seed = song_seed(config.seed, song_id)
    spectral = config.spectral
    started = time.perf_counter()

    with stage("load_audio"):
        audio = load_wav(audio_path)
    with stage("parse_bars"):
        grid = parse_bar_grid(bars_path, audio.duration)
    with stage("features"):
        total = frame_count(audio.num_samples, spectral.n_fft, spectral.hop)
        frames = required_frames(grid, spectral.hop, spectral.n_fft, audio.sample_rate, total)
        spectrogram = compute_feature(audio, config.feature, spectral, frames)
    with stage("barwise"):
        tensor = barwise_tensor(spectrogram, grid)
    with stage("similarity"):
        raw_similarity = raw_feature_autosimilarity(tensor)

    params = train_report = None
    d_ls = None
    artifacts = SongArtifacts(raw_autosimilarity=raw_similarity.A, title=song_id)
    if config.mode == "latent":
        d_ls = config.ae.d_ls
        with stage("train"):
            ae_config = AEConfig(d_ls=d_ls, feature_dim=tensor.feature_dim, seed=seed)
            params, train_report = train(tensor, ae_config, replace(config.train, seed=seed))
        with stage("encode"):
            latents = encode_song(params, tensor)
        with stage("similarity"):
            similarity = autosimilarity(latents)
        artifacts.latent_autosimilarity = similarity.A
        artifacts.loss_history = list(train_report.loss_history)
    else:
        similarity = raw_similarity

    with stage("segmentation"):
        segmentation = dp_segment(similarity, config.segmentation, grid)

    report = SongReport(
        song=song_id,
        feature=config.feature,
        mode=config.mode,
        d_ls=d_ls,
        seed=seed,
        num_bars=grid.num_bars,
        boundaries_sec=segmentation.boundaries_seconds,
        boundaries_bars=segmentation.boundaries_bars,
        score=segmentation.score,
        stop_reason=train_report.stop_reason if train_report else None,
        epochs_trained=train_report.epochs_trained if train_report else None,
    )

    if reference_paths:
        with stage("evaluation"):
            references = [parse_segments(path) for path in reference_paths]
            chosen = 0
            if config.best_of_refs and len(references) > 1:
                chosen = best_of_references(
                    segmentation.boundaries_seconds, [r.boundaries for r in references], max(config.windows), config.trim
                )
            report.reference = Path(reference_paths[chosen]).name
            report.scores = score_windows(
                segmentation.boundaries_seconds, references[chosen].boundaries, config.windows, config.trim
            )
        summary = ", ".join(f"F@{s.window:g}s={s.f_measure:.3f}" for s in report.scores)
        logger.info(f"{song_id}: {summary}")

    report.runtime_seconds = time.perf_counter() - started
    return SongAnalysis(
        report=report,
        segmentation=segmentation,
        artifacts=artifacts,
        spectrogram=spectrogram,
        tensor=tensor,
        params=params,
        train_report=train_report,
    )
