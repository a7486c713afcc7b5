import logging
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd
from tqdm import tqdm

from src.config.settings import PipelineConfig
from src.errors import EmptyCorpusError
from src.experiments.pipeline import analyze_song, song_seed
from src.models.results import CorpusReport, SongReport, WindowMean

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CorpusEntry:
    song: str
    audio_path: Path
    bars_path: Path
    reference_paths: tuple[Path, ...]


def discover_corpus(dataset_dir: str | Path) -> list[CorpusEntry]:
    """Songs under audio/*.wav, paired by stem with bars/<stem>.txt and refs/<stem>[.N].lab (N numeric)"""
    dataset_dir = Path(dataset_dir)
    audio_files = sorted((dataset_dir / "audio").glob("*.wav"))
    if not audio_files:
        raise EmptyCorpusError(f"No audio/*.wav files under {dataset_dir}")

    ref_files = sorted((dataset_dir / "refs").glob("*.lab"))
    entries = []
    for audio_path in audio_files:
        stem = audio_path.stem
        own_reference = re.compile(rf"{re.escape(stem)}(\.\d+)?\.lab")
        references = [path for path in ref_files if own_reference.fullmatch(path.name)]
        entries.append(
            CorpusEntry(
                song=stem,
                audio_path=audio_path,
                bars_path=dataset_dir / "bars" / f"{stem}.txt",
                reference_paths=tuple(references),
            )
        )
    return entries


def _analyze_entry(entry: CorpusEntry, config: PipelineConfig) -> SongReport:
    """Run one song; failures become a failed report instead of an exception"""
    try:
        analysis = analyze_song(
            entry.audio_path, entry.bars_path, config, list(entry.reference_paths) or None, song_id=entry.song
        )
        return analysis.report
    except Exception as e:
        logger.warning(f"{entry.song} failed: {e}")
        return SongReport(
            song=entry.song,
            status="failed",
            error=str(e),
            feature=config.feature,
            mode=config.mode,
            d_ls=config.ae.d_ls if config.mode == "latent" else None,
            seed=song_seed(config.seed, entry.song),
        )


def window_means(songs: list[SongReport], windows: tuple[float, ...]) -> list[WindowMean]:
    """Unweighted per-song means of P, R and F at each window"""
    means = []
    for window in windows:
        scores = [s.score_at(window) for s in songs if s.status == "ok"]
        scores = [s for s in scores if s is not None]
        if not scores:
            continue
        means.append(
            WindowMean(
                window=window,
                precision=float(np.mean([s.precision for s in scores])),
                recall=float(np.mean([s.recall for s in scores])),
                f_measure=float(np.mean([s.f_measure for s in scores])),
                songs=len(scores),
            )
        )
    return means


def run_corpus(
    dataset_dir: str | Path, config: PipelineConfig | None = None, jobs: int | None = None, progress: bool = True
) -> CorpusReport:
    """Analyze every song of a dataset directory; one song's failure does not stop the run"""
    config = config or PipelineConfig()
    entries = discover_corpus(dataset_dir)
    workers = jobs or config.worker_count
    logger.info(f"Running {config.mode}/{config.feature} on {len(entries)} songs with {workers} worker(s)")

    iterator_kwargs = {"total": len(entries), "desc": f"{config.feature}", "disable": not progress}
    if workers == 1:
        songs = [_analyze_entry(entry, config) for entry in tqdm(entries, **iterator_kwargs)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = executor.map(_analyze_entry, entries, [config] * len(entries))
            songs = list(tqdm(results, **iterator_kwargs))

    songs.sort(key=lambda s: s.song)
    failures = [s.song for s in songs if s.status != "ok"]
    if failures:
        logger.warning(f"{len(failures)} of {len(songs)} songs failed: {failures}")

    return CorpusReport(
        feature=config.feature,
        mode=config.mode,
        d_ls=config.ae.d_ls if config.mode == "latent" else None,
        seed=config.seed,
        songs=songs,
        means=window_means(songs, config.windows),
        failures=failures,
    )


def write_corpus_report(report: CorpusReport, path: str | Path) -> Path:
    """JSON report, plus the per-song runtimes in a sibling timings.csv"""
    path = Path(path)
    path.write_text(report.model_dump_json(indent=2) + "\n")
    timings = pd.DataFrame(
        {"song": list(report.runtimes), "runtime_seconds": list(report.runtimes.values())}
    )
    timings.to_csv(path.with_name(f"{path.stem}_timings.csv"), index=False)
    return path


def sweep_latent(
    dataset_dir: str | Path,
    config: PipelineConfig | None = None,
    dls_values: list[int] | tuple[int, ...] = (16, 32),
    features: list[str] | tuple[str, ...] | None = None,
    include_raw: bool = False,
    jobs: int | None = None,
    progress: bool = True,
) -> pd.DataFrame:
    """Mean F per (feature, d_ls), optionally with the barwise-feature baseline per feature"""
    config = config or PipelineConfig()
    features = tuple(features or (config.feature,))
    rows = []

    def add_row(report: CorpusReport, d_ls):
        row = {"feature": report.feature, "mode": report.mode, "d_ls": d_ls}
        for window in config.windows:
            mean = report.mean_at(window)
            row[f"F_{window:g}"] = mean.f_measure if mean else np.nan
        row["failures"] = len(report.failures)
        rows.append(row)

    for feature in features:
        for d_ls in dls_values:
            run_config = replace(config, feature=feature, mode="latent", ae=replace(config.ae, d_ls=d_ls))
            add_row(run_corpus(dataset_dir, run_config, jobs, progress), d_ls)
        if include_raw:
            add_row(run_corpus(dataset_dir, replace(config, feature=feature, mode="raw_feature"), jobs, progress), None)

    table = pd.DataFrame(rows)
    table["d_ls"] = table["d_ls"].astype("Int64")
    return table
