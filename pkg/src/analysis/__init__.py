from .barwise import barwise_tensor, read_bar_tensor, required_frames, write_bar_tensor
from .evaluation import best_of_references, hit_rate, match_boundaries, score_windows
from .segmentation import build_kernel, dp_segment, segment_cost, write_boundaries_json, write_segments_tsv
from .similarity import autosimilarity, raw_feature_autosimilarity
from .spectral import build_mel_filterbank, chromagram, compute_feature, log_mel, mel_spectrogram, mfcc, stft_power

__all__ = [
    "barwise_tensor",
    "read_bar_tensor",
    "required_frames",
    "write_bar_tensor",
    "best_of_references",
    "hit_rate",
    "match_boundaries",
    "score_windows",
    "build_kernel",
    "dp_segment",
    "segment_cost",
    "write_boundaries_json",
    "write_segments_tsv",
    "autosimilarity",
    "raw_feature_autosimilarity",
    "build_mel_filterbank",
    "chromagram",
    "compute_feature",
    "log_mel",
    "mel_spectrogram",
    "mfcc",
    "stft_power",
]
