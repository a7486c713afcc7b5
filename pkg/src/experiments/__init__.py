from .corpus import discover_corpus, run_corpus, sweep_latent, write_corpus_report
from .figures import SongArtifacts, export_figures, load_artifacts, save_artifacts
from .pipeline import SongAnalysis, analyze_song, song_seed

__all__ = [
    "discover_corpus",
    "run_corpus",
    "sweep_latent",
    "write_corpus_report",
    "SongArtifacts",
    "export_figures",
    "load_artifacts",
    "save_artifacts",
    "SongAnalysis",
    "analyze_song",
    "song_seed",
]
