from enum import Enum

from pydantic import BaseModel, Field, model_validator


class StopReason(str, Enum):
    EARLY_STOP = "early_stop"
    MAX_EPOCHS = "max_epochs"
    DIVERGED = "diverged"


class HitRateScore(BaseModel):
    precision: float = Field(ge=0.0, le=1.0)
    recall: float = Field(ge=0.0, le=1.0)
    f_measure: float = Field(ge=0.0, le=1.0)
    window: float
    matched: int = Field(ge=0)

    @classmethod
    def from_counts(cls, matched: int, n_estimated: int, n_reference: int, window: float) -> "HitRateScore":
        precision = matched / n_estimated if n_estimated else 0.0
        recall = matched / n_reference if n_reference else 0.0
        if precision + recall > 0:
            f_measure = 2 * precision * recall / (precision + recall)
        else:
            f_measure = 0.0
        return cls(precision=precision, recall=recall, f_measure=f_measure, window=window, matched=matched)


class SegmentationResult(BaseModel):
    boundaries_bars: list[int]
    boundaries_seconds: list[float] | None = None
    segment_costs: list[float]
    score: float

    @model_validator(mode="after")
    def _check_consistency(self):
        if len(self.boundaries_bars) < 2 or self.boundaries_bars[0] != 0:
            raise ValueError("Boundaries must start at bar 0 and contain at least one segment")
        if any(b <= a for a, b in zip(self.boundaries_bars, self.boundaries_bars[1:])):
            raise ValueError("Boundaries must be strictly increasing")
        if len(self.segment_costs) != len(self.boundaries_bars) - 1:
            raise ValueError("One cost per segment is required")
        return self

    @property
    def num_bars(self) -> int:
        return self.boundaries_bars[-1]

    @property
    def segment_lengths(self) -> list[int]:
        return [b - a for a, b in zip(self.boundaries_bars, self.boundaries_bars[1:])]

    def boundary_payload(self) -> dict:
        """The boundary output document: seconds, bar indices and total score"""
        return {
            "boundaries_sec": self.boundaries_seconds,
            "boundaries_bars": self.boundaries_bars,
            "score": self.score,
        }


class TrainReport(BaseModel):
    loss_history: list[float] = Field(default_factory=list)
    lr_history: list[float] = Field(default_factory=list)
    stop_reason: StopReason | None = None
    best_epoch: int | None = None  # 1-based
    best_loss: float | None = None
    plateau_epochs: list[int] = Field(default_factory=list)

    @property
    def epochs_trained(self) -> int:
        return len(self.loss_history)


class SongReport(BaseModel):
    song: str
    status: str = "ok"  # 'ok' or 'failed'
    error: str | None = None
    feature: str
    mode: str
    d_ls: int | None = None
    seed: int
    num_bars: int | None = None
    boundaries_sec: list[float] | None = None
    boundaries_bars: list[int] | None = None
    score: float | None = None
    scores: list[HitRateScore] = Field(default_factory=list)
    reference: str | None = None
    stop_reason: StopReason | None = None
    epochs_trained: int | None = None
    runtime_seconds: float | None = Field(default=None, exclude=True)

    def score_at(self, window: float) -> HitRateScore | None:
        return next((s for s in self.scores if s.window == window), None)


class WindowMean(BaseModel):
    window: float
    precision: float
    recall: float
    f_measure: float
    songs: int


class CorpusReport(BaseModel):
    feature: str
    mode: str
    d_ls: int | None = None
    seed: int
    songs: list[SongReport]
    means: list[WindowMean] = Field(default_factory=list)
    failures: list[str] = Field(default_factory=list)

    def mean_at(self, window: float) -> WindowMean | None:
        return next((m for m in self.means if m.window == window), None)

    @property
    def runtimes(self) -> dict[str, float | None]:
        return {song.song: song.runtime_seconds for song in self.songs}
