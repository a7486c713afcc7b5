import logging
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from src.models.features import Spectrogram  # noqa: E402

logger = logging.getLogger(__name__)

_SVG_STYLE = {"svg.hashsalt": "songae", "svg.fonttype": "none"}


@dataclass
class SongArtifacts:
    """Matrices and curves kept from one analysis for later figures"""

    raw_autosimilarity: np.ndarray | None = None
    latent_autosimilarity: np.ndarray | None = None
    loss_history: list[float] = field(default_factory=list)
    title: str = ""


def to_gray_levels(matrix: np.ndarray) -> np.ndarray:
    """Min-max scale to 0..255 (constant matrices map to 0)"""
    matrix = np.asarray(matrix, dtype=np.float64)
    low, high = float(matrix.min()), float(matrix.max())
    if high == low:
        return np.zeros(matrix.shape, dtype=np.uint8)
    return np.rint((matrix - low) / (high - low) * 255.0).astype(np.uint8)


def write_pgm(matrix: np.ndarray, path: str | Path) -> None:
    """Binary 8-bit PGM, one pixel per matrix entry, row 0 at the top"""
    pixels = to_gray_levels(matrix)
    height, width = pixels.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        f.write(pixels.tobytes())


def read_pgm(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    magic, size, maxval, pixels = data.split(b"\n", 3)
    if magic != b"P5" or maxval != b"255":
        raise ValueError(f"{path} is not an 8-bit binary PGM")
    width, height = (int(v) for v in size.split())
    return np.frombuffer(pixels, dtype=np.uint8, count=width * height).reshape(height, width)


def write_matrix_csv(matrix: np.ndarray, path: str | Path) -> None:
    pd.DataFrame(np.asarray(matrix)).to_csv(path, header=False, index=False)


def write_heatmap_svg(matrices: dict[str, np.ndarray], path: str | Path) -> None:
    """Side-by-side grayscale heat maps, one panel per named matrix"""
    with plt.rc_context(_SVG_STYLE):
        fig, axes = plt.subplots(1, len(matrices), figsize=(4.5 * len(matrices), 4.5), squeeze=False)
        for ax, (title, matrix) in zip(axes[0], matrices.items()):
            ax.imshow(matrix, cmap="gray", interpolation="nearest", origin="upper")
            ax.set_title(title)
            ax.set_xlabel("bar")
            ax.set_ylabel("bar")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def write_loss_curve_csv(loss_history: list[float], path: str | Path, lr_history: list[float] | None = None) -> None:
    frame = pd.DataFrame({"epoch": np.arange(1, len(loss_history) + 1), "loss": loss_history})
    if lr_history is not None:
        frame["lr"] = lr_history
    frame.to_csv(path, index=False)


def dump_spectrogram(spec: Spectrogram, out_prefix: str | Path) -> list[Path]:
    """CSV (F rows, one column per frame) and PGM image of a spectrogram"""
    out_prefix = Path(out_prefix)
    csv_path = out_prefix.with_suffix(".csv")
    pgm_path = out_prefix.with_suffix(".pgm")
    pd.DataFrame(spec.values, columns=spec.frame_indices).to_csv(csv_path)
    write_pgm(spec.values[::-1], pgm_path)  # low frequencies at the bottom
    return [csv_path, pgm_path]


def save_artifacts(artifacts: SongArtifacts, path: str | Path) -> None:
    arrays = {"loss_history": np.asarray(artifacts.loss_history, dtype=np.float64), "title": np.array(artifacts.title)}
    if artifacts.raw_autosimilarity is not None:
        arrays["raw_autosimilarity"] = artifacts.raw_autosimilarity
    if artifacts.latent_autosimilarity is not None:
        arrays["latent_autosimilarity"] = artifacts.latent_autosimilarity
    with open(path, "wb") as f:
        np.savez(f, **arrays)


def load_artifacts(path: str | Path) -> SongArtifacts:
    with np.load(path) as data:
        return SongArtifacts(
            raw_autosimilarity=data["raw_autosimilarity"] if "raw_autosimilarity" in data else None,
            latent_autosimilarity=data["latent_autosimilarity"] if "latent_autosimilarity" in data else None,
            loss_history=data["loss_history"].tolist(),
            title=str(data["title"]),
        )


def export_figures(artifacts: SongArtifacts, out_dir: str | Path) -> list[Path]:
    """Heat maps (PGM, SVG, CSV) of the raw and latent autosimilarities, plus the loss curve"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    panels = {}
    for name, matrix in (("raw", artifacts.raw_autosimilarity), ("latent", artifacts.latent_autosimilarity)):
        if matrix is None:
            continue
        stem = out_dir / f"{name}_autosimilarity"
        write_pgm(matrix, stem.with_suffix(".pgm"))
        write_matrix_csv(matrix, stem.with_suffix(".csv"))
        write_heatmap_svg({name: matrix}, stem.with_suffix(".svg"))
        written += [stem.with_suffix(".pgm"), stem.with_suffix(".csv"), stem.with_suffix(".svg")]
        panels[f"{name} ({artifacts.title})" if artifacts.title else name] = matrix

    if len(panels) == 2:
        side_by_side = out_dir / "autosimilarities.svg"
        write_heatmap_svg(panels, side_by_side)
        written.append(side_by_side)

    if artifacts.loss_history:
        curve = out_dir / "loss_curve.csv"
        write_loss_curve_csv(artifacts.loss_history, curve)
        written.append(curve)

    logger.info(f"Wrote {len(written)} figure files to {out_dir}")
    return written
