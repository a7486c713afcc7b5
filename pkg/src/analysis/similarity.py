import logging

import numpy as np

from src.models.features import Autosimilarity, BarTensor, LatentMatrix, SimilaritySource

logger = logging.getLogger(__name__)


def autosimilarity(
    Z: LatentMatrix | np.ndarray, normalize: bool = True, source: SimilaritySource = SimilaritySource.LATENT
) -> Autosimilarity:
    """B x B matrix of dot products between the columns of Z.

    With `normalize`, columns are scaled to unit norm first (cosine similarity);
    zero columns stay zero and get a zero diagonal.
    """
    matrix = Z.Z if isinstance(Z, LatentMatrix) else np.asarray(Z, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] < 2:
        raise ValueError(f"Need a d x B matrix with B >= 2, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("Autosimilarity input contains non-finite values")

    if normalize:
        norms = np.linalg.norm(matrix, axis=0)
        nonzero = norms > 0
        matrix = np.divide(matrix, norms, out=np.zeros_like(matrix), where=nonzero)

    A = matrix.T @ matrix
    A = (A + A.T) / 2
    if normalize:
        A = np.clip(A, -1.0, 1.0)
        np.fill_diagonal(A, nonzero.astype(np.float64))
    return Autosimilarity(A=A, source=source)


def raw_feature_autosimilarity(tensor: BarTensor) -> Autosimilarity:
    """Cosine autosimilarity of the flattened 96 x F bar matrices"""
    return autosimilarity(tensor.flattened(), normalize=True, source=SimilaritySource.RAW_FEATURE)
