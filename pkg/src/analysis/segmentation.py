import json
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import pandas as pd

from src.config.settings import SegmentationConfig
from src.errors import SegmentationError
from src.models.audio import BarGrid
from src.models.features import Autosimilarity
from src.models.results import SegmentationResult

logger = logging.getLogger(__name__)

SHORT_TERM_BARS = 4  # kernel weight 2 within this many bars of the diagonal


@dataclass(frozen=True)
class Kernel:
    n: int
    K: np.ndarray

    @property
    def total(self) -> float:
        return float(self.K.sum())


@lru_cache(maxsize=256)
def build_kernel(n: int) -> Kernel:
    """n x n homogeneity kernel: 0 on the diagonal, 2 up to 4 bars away, 1 beyond"""
    if n < 1:
        raise SegmentationError(f"Kernel size must be >= 1, got {n}")
    rows, cols = np.indices((n, n))
    distance = np.abs(rows - cols)
    K = np.where(distance == 0, 0.0, np.where(distance <= SHORT_TERM_BARS, 2.0, 1.0))
    K.setflags(write=False)
    return Kernel(n=n, K=K)


def _matrix(A: Autosimilarity | np.ndarray) -> np.ndarray:
    return A.A if isinstance(A, Autosimilarity) else np.asarray(A, dtype=np.float64)


def regularity_penalty(n: int, target_size: int = 8) -> float:
    """|log2(n / target)|: zero at the target size, symmetric on a log scale"""
    return abs(math.log2(n / target_size))


def segment_cost(A: Autosimilarity | np.ndarray, i: int, j: int, config: SegmentationConfig | None = None) -> float:
    """Kernel-weighted similarity of bars [i, j) minus the regularity penalty"""
    config = config or SegmentationConfig()
    matrix = _matrix(A)
    n = j - i
    if not 0 <= i < j <= matrix.shape[0]:
        raise SegmentationError(f"Invalid segment [{i}, {j}) for {matrix.shape[0]} bars")
    if not config.min_segment_bars <= n <= config.max_segment_bars:
        raise SegmentationError(
            f"Segment of {n} bars outside [{config.min_segment_bars}, {config.max_segment_bars}]"
        )
    kernel_sum = float((build_kernel(n).K * matrix[i:j, i:j]).sum())
    return kernel_sum / n**config.length_exponent - config.penalty_weight * regularity_penalty(n, config.target_size)


def dp_segment(
    A: Autosimilarity | np.ndarray, config: SegmentationConfig | None = None, grid: BarGrid | None = None
) -> SegmentationResult:
    """Segmentation maximizing the sum of segment costs, by dynamic programming.

    best[j] = max over i of best[i] + cost(i, j); among equal candidates the
    smallest i (longest final segment) wins.
    """
    config = config or SegmentationConfig()
    matrix = _matrix(A)
    num_bars = matrix.shape[0]
    if matrix.ndim != 2 or matrix.shape[1] != num_bars:
        raise SegmentationError(f"Autosimilarity must be square, got {matrix.shape}")
    if num_bars < 2 or num_bars < config.min_segment_bars:
        raise SegmentationError(f"Cannot segment {num_bars} bars with min segment {config.min_segment_bars}")

    best = [-math.inf] * (num_bars + 1)
    previous = [-1] * (num_bars + 1)
    best[0] = 0.0
    for j in range(1, num_bars + 1):
        for i in range(max(0, j - config.max_segment_bars), j - config.min_segment_bars + 1):
            if best[i] == -math.inf:
                continue
            candidate = best[i] + segment_cost(matrix, i, j, config)
            if candidate > best[j]:
                best[j] = candidate
                previous[j] = i

    if best[num_bars] == -math.inf:
        raise SegmentationError(f"No segmentation of {num_bars} bars satisfies the segment size limits")

    boundaries = [num_bars]
    while boundaries[-1] > 0:
        boundaries.append(previous[boundaries[-1]])
    boundaries.reverse()
    costs = [segment_cost(matrix, i, j, config) for i, j in zip(boundaries, boundaries[1:])]

    result = SegmentationResult(boundaries_bars=boundaries, segment_costs=costs, score=best[num_bars])
    if grid is not None:
        result.boundaries_seconds = boundaries_to_seconds(result, grid)
    logger.info(f"Segmented {num_bars} bars into {len(costs)} segments (score {result.score:.4f})")
    return result


def boundaries_to_seconds(result: SegmentationResult, grid: BarGrid) -> list[float]:
    """Bar index b -> bar_starts[b]; index B -> song end"""
    edges = grid.edges
    out_of_range = [b for b in result.boundaries_bars if not 0 <= b <= grid.num_bars]
    if out_of_range:
        raise SegmentationError(f"Boundary indices {out_of_range} outside [0, {grid.num_bars}]")
    return [float(edges[b]) for b in result.boundaries_bars]


def write_boundaries_json(result: SegmentationResult, path: str | Path) -> None:
    with open(path, "w") as f:
        json.dump(result.boundary_payload(), f, indent=2)


def write_segments_tsv(result: SegmentationResult, path: str | Path) -> None:
    """Two-column TSV of adjacent segment intervals, in seconds when known, else bars"""
    edges = result.boundaries_seconds if result.boundaries_seconds is not None else result.boundaries_bars
    frame = pd.DataFrame({"start": edges[:-1], "end": edges[1:]})
    frame.to_csv(path, sep="\t", header=False, index=False)
