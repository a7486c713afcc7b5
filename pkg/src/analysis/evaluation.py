import logging
from collections.abc import Sequence

import numpy as np

from src.errors import EvaluationError
from src.models.results import HitRateScore

logger = logging.getLogger(__name__)


def _as_sorted(times: Sequence[float], name: str) -> np.ndarray:
    array = np.asarray(times, dtype=np.float64)
    if array.ndim != 1:
        raise EvaluationError(f"{name} boundaries must be a flat list")
    if np.any(np.diff(array) < 0):
        raise EvaluationError(f"{name} boundaries are not sorted")
    if np.any(array < 0):
        raise EvaluationError(f"{name} boundaries must be non-negative")
    return array


def match_boundaries(estimated: Sequence[float], reference: Sequence[float], window: float) -> int:
    """Size of a maximum one-to-one matching with |e - r| <= window.

    On sorted 1-D lists the greedy two-pointer sweep is optimal: the earliest
    unmatched pair within the window can always be part of a maximum matching.
    """
    est = _as_sorted(estimated, "Estimated")
    ref = _as_sorted(reference, "Reference")
    matched = i = j = 0
    while i < est.size and j < ref.size:
        if abs(est[i] - ref[j]) <= window:
            matched += 1
            i += 1
            j += 1
        elif est[i] < ref[j]:
            i += 1
        else:
            j += 1
    return matched


def hit_rate(
    estimated: Sequence[float], reference: Sequence[float], window: float = 0.5, trim: bool = False
) -> HitRateScore:
    """Precision, recall and F-measure of boundary retrieval within a tolerance window"""
    if len(estimated) == 0 or len(reference) == 0:
        raise EvaluationError("Boundary lists must not be empty")
    est = _as_sorted(estimated, "Estimated")
    ref = _as_sorted(reference, "Reference")
    if trim:
        est, ref = est[1:-1], ref[1:-1]
    matched = match_boundaries(est, ref, window)
    return HitRateScore.from_counts(matched, est.size, ref.size, window)


def score_windows(
    estimated: Sequence[float], reference: Sequence[float], windows: Sequence[float] = (0.5, 3.0), trim: bool = False
) -> list[HitRateScore]:
    return [hit_rate(estimated, reference, window, trim) for window in windows]


def best_of_references(
    estimated: Sequence[float], references: Sequence[Sequence[float]], window: float = 3.0, trim: bool = False
) -> int:
    """Index of the reference annotation giving the best F-measure at `window` (first on ties)"""
    if not references:
        raise EvaluationError("No reference annotations to choose from")
    f_measures = [hit_rate(estimated, ref, window, trim).f_measure for ref in references]
    choice = int(np.argmax(f_measures))
    logger.debug(f"Reference {choice} of {len(references)} kept (F@{window}s = {f_measures[choice]:.3f})")
    return choice
