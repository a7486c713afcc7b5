import functools
import json
import logging
from dataclasses import replace
from pathlib import Path

import click

from src.analysis.barwise import write_bar_tensor
from src.analysis.segmentation import write_boundaries_json, write_segments_tsv
from src.autoencoder.network import save_checkpoint
from src.config.settings import FEATURES, PipelineConfig, load_pipeline_config
from src.errors import PipelineStageError, SongaeError
from src.experiments.corpus import run_corpus, sweep_latent, write_corpus_report
from src.experiments.figures import dump_spectrogram, export_figures, load_artifacts, save_artifacts
from src.experiments.pipeline import analyze_song, stage

logger = logging.getLogger(__name__)

_MODES = {"latent": "latent", "raw": "raw_feature"}


def setup_logging(level: str, debug: bool = False) -> None:
    logging.basicConfig(
        level=logging.DEBUG if debug else level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[logging.FileHandler("songae.log"), logging.StreamHandler()],
        force=True,
    )


def parse_windows(value: str | None) -> tuple[float, ...] | None:
    if value is None:
        return None
    try:
        return tuple(float(part) for part in value.split(",") if part.strip())
    except ValueError:
        raise click.BadParameter(f"Expected comma-separated seconds, got '{value}'") from None


def build_config(
    config_path: str | None,
    feature: str | None = None,
    dls: int | None = None,
    mode: str | None = None,
    penalty: float | None = None,
    max_seg: int | None = None,
    seed: int | None = None,
    jobs: int | None = None,
    window: str | None = None,
    trim: bool | None = None,
    best_of_refs: bool | None = None,
) -> PipelineConfig:
    """YAML preset (or defaults) with any given CLI flag on top"""
    try:
        config = load_pipeline_config(config_path) if config_path else PipelineConfig()
        overrides = {
            "feature": feature,
            "mode": _MODES[mode] if mode else None,
            "seed": seed,
            "jobs": jobs,
            "windows": parse_windows(window),
            "trim": trim,
            "best_of_refs": best_of_refs,
        }
        config = replace(config, **{k: v for k, v in overrides.items() if v is not None})
        if dls is not None:
            config = replace(config, ae=replace(config.ae, d_ls=dls))
        segmentation = {"penalty_weight": penalty, "max_segment_bars": max_seg}
        segmentation = {k: v for k, v in segmentation.items() if v is not None}
        if segmentation:
            config = replace(config, segmentation=replace(config.segmentation, **segmentation))
    except (OSError, ValueError) as e:
        raise click.ClickException(f"[config] {e}") from e
    return config


def pipeline_options(func):
    """Flags shared by analyze, corpus and sweep"""
    options = [
        click.option("--config", "-c", "config_path", type=click.Path(exists=True), help="YAML preset"),
        click.option("--feature", type=click.Choice(FEATURES), help="Input representation"),
        click.option("--lambda", "penalty", type=float, help="Weight of the regularity penalty"),
        click.option("--max-seg", type=int, help="Longest segment in bars"),
        click.option("--seed", type=int, help="Master seed"),
        click.option("--window", help="Tolerance windows in seconds, e.g. 0.5,3"),
        click.option("--trim/--no-trim", default=None, help="Drop first and last boundaries before scoring"),
        click.option("--best-of-refs/--no-best-of-refs", default=None, help="Score against the best reference"),
        click.option("--debug/--no-debug", default=False, help="Enable debug logging"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


mode_option = click.option(
    "--mode", type=click.Choice(list(_MODES)), help="Latent or barwise-feature autosimilarity"
)


def report_errors(stage: str):
    """Turn library errors into a stage-tagged ClickException (exit code 1)"""

    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except PipelineStageError as e:
                logger.error(str(e), exc_info=True)
                raise click.ClickException(str(e)) from e
            except SongaeError as e:
                logger.error(f"[{stage}] {e}", exc_info=True)
                raise click.ClickException(f"[{stage}] {e}") from e

        return wrapper

    return decorator


@click.group()
def cli():
    """Bar-level structure analysis of songs with a per-song convolutional autoencoder"""


@cli.command()
@click.argument("audio", type=click.Path())
@click.argument("bars", type=click.Path())
@click.option("--ref", "references", multiple=True, type=click.Path(), help="Reference .lab annotation(s)")
@pipeline_options
@mode_option
@click.option("--dls", type=int, help="Latent dimension")
@click.option("--out", "-o", type=click.Path(), help="Boundary JSON output")
@click.option("--tsv", type=click.Path(), help="Segment intervals TSV output")
@click.option("--report", type=click.Path(), help="Song report JSON output")
@click.option("--artifacts", type=click.Path(), help="Autosimilarities and loss history (.npz)")
@click.option("--dump-spectrogram", "spectrogram_prefix", type=click.Path(), help="Prefix for spectrogram CSV/PGM")
@click.option("--dump-tensor", type=click.Path(), help="Bar tensor binary output")
@click.option("--checkpoint", type=click.Path(), help="Trained autoencoder weights output")
@click.option("--train-report", type=click.Path(), help="Training history JSON output")
@report_errors("analyze")
def analyze(audio, bars, references, config_path, feature, penalty, max_seg, seed, window, trim, best_of_refs,
            debug, mode, dls, out, tsv, report, artifacts, spectrogram_prefix, dump_tensor, checkpoint,
            train_report):  # fmt: skip
    """Segment one song given its audio and bar grid"""
    config = build_config(config_path, feature, dls, mode, penalty, max_seg, seed, None, window, trim, best_of_refs)
    setup_logging(config.log_level, debug)

    analysis = analyze_song(audio, bars, config, list(references) or None)
    result = analysis.segmentation

    with stage("write_outputs"):
        if out:
            write_boundaries_json(result, out)
        else:
            click.echo(json.dumps(result.boundary_payload()))
        if tsv:
            write_segments_tsv(result, tsv)
        if report:
            Path(report).write_text(analysis.report.model_dump_json(indent=2) + "\n")
        if artifacts:
            save_artifacts(analysis.artifacts, artifacts)
        if spectrogram_prefix:
            written = dump_spectrogram(analysis.spectrogram, spectrogram_prefix)
            logger.info(f"Spectrogram written to {', '.join(map(str, written))}")
        if dump_tensor:
            write_bar_tensor(analysis.tensor, dump_tensor)
        if checkpoint and analysis.params is not None:
            save_checkpoint(analysis.params, checkpoint, analysis.report.seed, analysis.train_report.best_epoch or 0)
        if train_report and analysis.train_report is not None:
            Path(train_report).write_text(analysis.train_report.model_dump_json(indent=2) + "\n")

    for score in analysis.report.scores:
        click.echo(f"F@{score.window:g}s = {score.f_measure:.4f} (P = {score.precision:.4f}, R = {score.recall:.4f})")


@cli.command()
@click.argument("dataset", type=click.Path(exists=True, file_okay=False))
@pipeline_options
@mode_option
@click.option("--dls", type=int, help="Latent dimension")
@click.option("--jobs", "-j", type=int, help="Worker processes (default: SONGAE_JOBS or all cores)")
@click.option("--out", "-o", type=click.Path(), default="corpus_report.json", help="Corpus report JSON")
@click.option("--progress/--no-progress", default=True)
@report_errors("corpus")
def corpus(dataset, config_path, feature, penalty, max_seg, seed, window, trim, best_of_refs, debug, mode, dls,
           jobs, out, progress):  # fmt: skip
    """Analyze every song of DATASET (audio/, bars/, refs/ matched by stem)"""
    config = build_config(config_path, feature, dls, mode, penalty, max_seg, seed, jobs, window, trim, best_of_refs)
    setup_logging(config.log_level, debug)

    report = run_corpus(dataset, config, progress=progress)
    write_corpus_report(report, out)
    for mean in report.means:
        click.echo(
            f"F@{mean.window:g}s = {mean.f_measure:.4f} "
            f"(P = {mean.precision:.4f}, R = {mean.recall:.4f}, {mean.songs} songs)"
        )
    if report.failures:
        click.echo(f"{len(report.failures)} song(s) failed: {', '.join(report.failures)}")


@cli.command()
@click.argument("dataset", type=click.Path(exists=True, file_okay=False))
@pipeline_options
@click.option("--dls", "dls_values", default="16,32", help="Comma-separated latent dimensions")
@click.option("--features", "feature_list", help="Comma-separated features (default: --feature)")
@click.option("--include-raw/--no-include-raw", default=False, help="Add the barwise-feature baseline rows")
@click.option("--jobs", "-j", type=int)
@click.option("--out", "-o", type=click.Path(), default="sweep.csv")
@click.option("--progress/--no-progress", default=True)
@report_errors("sweep")
def sweep(dataset, config_path, feature, penalty, max_seg, seed, window, trim, best_of_refs, debug,
          dls_values, feature_list, include_raw, jobs, out, progress):  # fmt: skip
    """Mean F per feature and latent dimension"""
    config = build_config(config_path, feature, None, None, penalty, max_seg, seed, jobs, window, trim, best_of_refs)
    setup_logging(config.log_level, debug)
    try:
        dls_list = [int(v) for v in dls_values.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"Expected comma-separated integers, got '{dls_values}'") from None
    features = [f.strip() for f in feature_list.split(",")] if feature_list else None
    unknown = set(features or []) - set(FEATURES)
    if unknown:
        raise click.BadParameter(f"Unknown features {sorted(unknown)}")

    table = sweep_latent(dataset, config, dls_list, features, include_raw, progress=progress)
    table.to_csv(out, index=False)
    click.echo(table.to_string(index=False))


@cli.command()
@click.argument("artifacts", type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", "-o", type=click.Path(file_okay=False), default="figures")
@click.option("--debug/--no-debug", default=False)
@report_errors("figures")
def figures(artifacts, out_dir, debug):
    """Heat maps and loss curve from an analyze --artifacts file"""
    setup_logging(PipelineConfig().log_level, debug)
    try:
        written = export_figures(load_artifacts(artifacts), out_dir)
    except OSError as e:
        raise click.ClickException(f"[figures] {e}") from e
    for path in written:
        click.echo(str(path))


if __name__ == "__main__":
    cli()
