import json
import os
from types import SimpleNamespace

import pandas as pd
import pytest
from click.testing import CliRunner

from src.errors import AnnotationFormatError, PipelineStageError
from src.main import build_config, cli, parse_windows
from src.models.results import CorpusReport, HitRateScore, SegmentationResult, SongReport, WindowMean


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture(autouse=True)
def quiet_logging(mocker):
    return mocker.patch("src.main.setup_logging")


def fake_analysis(config):
    segmentation = SegmentationResult(
        boundaries_bars=[0, 8, 16], boundaries_seconds=[0.0, 16.0, 32.0], segment_costs=[12.5, 12.5], score=25.0
    )
    report = SongReport(
        song="song",
        feature=config.feature,
        mode=config.mode,
        d_ls=config.ae.d_ls,
        seed=7,
        scores=[HitRateScore.from_counts(3, 3, 3, w) for w in config.windows],
    )
    return SimpleNamespace(segmentation=segmentation, report=report, params=None, train_report=None)


@pytest.fixture
def mock_analyze(mocker):
    return mocker.patch(
        "src.main.analyze_song", side_effect=lambda audio, bars, config, refs: fake_analysis(config)
    )


def test_analyze_prints_boundaries_and_scores(runner, mock_analyze):
    with runner.isolated_filesystem():
        result = runner.invoke(cli, ["analyze", "song.wav", "song.txt", "--ref", "song.lab"])

    assert result.exit_code == 0, result.output
    payload = json.loads(result.output.splitlines()[0])
    assert payload == {"boundaries_sec": [0.0, 16.0, 32.0], "boundaries_bars": [0, 8, 16], "score": 25.0}
    assert "F@0.5s = 1.0000" in result.output
    assert "F@3s = 1.0000" in result.output
    mock_analyze.assert_called_once()
    assert mock_analyze.call_args.args[3] == ["song.lab"]


def test_analyze_applies_overrides(runner, mock_analyze):
    with runner.isolated_filesystem():
        result = runner.invoke(
            cli,
            ["analyze", "a.wav", "a.txt", "--feature", "mfcc", "--mode", "raw", "--dls", "16", "--lambda", "1.5",
             "--max-seg", "24", "--window", "0.5,1,3", "--trim"],
        )  # fmt: skip

    assert result.exit_code == 0, result.output
    config = mock_analyze.call_args.args[2]
    assert config.feature == "mfcc"
    assert config.mode == "raw_feature"
    assert config.ae.d_ls == 16
    assert config.segmentation.penalty_weight == 1.5
    assert config.segmentation.max_segment_bars == 24
    assert config.windows == (0.5, 1.0, 3.0)
    assert config.trim is True


def test_analyze_writes_outputs(runner, mock_analyze):
    with runner.isolated_filesystem():
        result = runner.invoke(
            cli, ["analyze", "a.wav", "a.txt", "-o", "bounds.json", "--tsv", "segments.tsv", "--report", "report.json"]
        )
        bounds = json.loads(open("bounds.json").read())
        segments = pd.read_csv("segments.tsv", sep="\t", header=None)
        report = SongReport.model_validate_json(open("report.json").read())

    assert result.exit_code == 0, result.output
    assert bounds["boundaries_bars"] == [0, 8, 16]
    assert segments.values.tolist() == [[0.0, 16.0], [16.0, 32.0]]
    assert report.song == "song"
    assert report.d_ls == 32 and report.feature == "log_mel" and report.mode == "latent"


def test_analyze_failure_names_the_stage(runner, mocker):
    mocker.patch(
        "src.main.analyze_song", side_effect=PipelineStageError("parse_bars", AnnotationFormatError("bad", 3))
    )

    with runner.isolated_filesystem():
        result = runner.invoke(cli, ["analyze", "a.wav", "a.txt"])

    assert result.exit_code == 1
    assert "[parse_bars] line 3: bad" in result.output


def test_unwritable_output_names_its_stage(runner, mock_analyze):
    with runner.isolated_filesystem():
        result = runner.invoke(cli, ["analyze", "a.wav", "a.txt", "--tsv", "missing_dir/segments.tsv"])

    assert result.exit_code == 1
    assert "[write_outputs]" in result.output
    assert "Traceback" not in result.output


def test_bad_config_file_is_reported(runner, mock_analyze):
    with runner.isolated_filesystem():
        with open("bad.yml", "w") as f:
            f.write("train:\n  learning_rate: 1\n")
        result = runner.invoke(cli, ["analyze", "a.wav", "a.txt", "-c", "bad.yml"])

    assert result.exit_code == 1
    assert "[config]" in result.output
    mock_analyze.assert_not_called()


def test_corpus_command(runner, mocker):
    report = CorpusReport(
        feature="log_mel",
        mode="latent",
        d_ls=32,
        seed=0,
        songs=[SongReport(song="a", feature="log_mel", mode="latent", seed=1)],
        means=[WindowMean(window=3.0, precision=0.8, recall=0.6, f_measure=0.6857, songs=1)],
        failures=["b"],
    )
    run = mocker.patch("src.main.run_corpus", return_value=report)

    with runner.isolated_filesystem():
        os.mkdir("dataset")
        result = runner.invoke(cli, ["corpus", "dataset", "--jobs", "2", "--out", "out.json", "--no-progress"])
        written = CorpusReport.model_validate_json(open("out.json").read())

    assert result.exit_code == 0, result.output
    assert run.call_args.args[1].jobs == 2
    assert "F@3s = 0.6857" in result.output
    assert "1 song(s) failed: b" in result.output
    assert written.failures == ["b"]


def test_sweep_command(runner, mocker):
    table = pd.DataFrame({"feature": ["mel", "mel"], "mode": ["latent", "latent"], "d_ls": [8, 24],
                          "F_0.5": [0.3, 0.4], "F_3": [0.6, 0.7], "failures": [0, 0]})  # fmt: skip
    sweep = mocker.patch("src.main.sweep_latent", return_value=table)

    with runner.isolated_filesystem():
        os.mkdir("dataset")
        result = runner.invoke(cli, ["sweep", "dataset", "--dls", "8,24", "--features", "mel", "--out", "s.csv"])
        written = pd.read_csv("s.csv")

    assert result.exit_code == 0, result.output
    assert sweep.call_args.args[2] == [8, 24]
    assert sweep.call_args.args[3] == ["mel"]
    assert written["d_ls"].tolist() == [8, 24]


def test_sweep_rejects_unknown_feature(runner, mocker):
    mocker.patch("src.main.sweep_latent")

    with runner.isolated_filesystem():
        os.mkdir("dataset")
        result = runner.invoke(cli, ["sweep", "dataset", "--features", "cqt"])

    assert result.exit_code == 2
    assert "Unknown features" in result.output


def test_sweep_has_no_mode_option(runner, mocker):
    sweep = mocker.patch("src.main.sweep_latent")

    with runner.isolated_filesystem():
        os.mkdir("dataset")
        result = runner.invoke(cli, ["sweep", "dataset", "--mode", "raw"])

    assert result.exit_code == 2
    assert "No such option" in result.output
    sweep.assert_not_called()


def test_parse_windows():
    assert parse_windows("0.5, 3") == (0.5, 3.0)
    assert parse_windows(None) is None


def test_build_config_echoes_settings():
    config = build_config(None, feature="log_mel", dls=32, mode="latent")

    assert (config.feature, config.mode, config.ae.d_ls) == ("log_mel", "latent", 32)
