"""Block statistics of cross-modal correlation matrices."""

import numpy as np

from polarhe.data.embedding import (
    CorrelationMatrix,
    DecouplingMetrics,
    EmbeddingBatch,
    PartitionConfig,
)
from polarhe.decoupling.correlation import batch_normalize, cross_correlation
from polarhe.exceptions import InvalidArgumentError


def _offdiag_abs_mean(block: np.ndarray) -> float:
    n = block.shape[0]
    if n < 2:
        return 0.0
    off = np.abs(block - np.diag(np.diag(block)))
    return float(off.sum() / (n * (n - 1)))


def block_statistics(c: CorrelationMatrix, part: PartitionConfig) -> dict:
    """Diagonal and off-diagonal summaries of the common and unique blocks."""

    common = c.values[part.common, part.common]
    unique = c.values[part.unique, part.unique]
    return {
        "common_diag_mean": float(np.mean(np.diag(common))),
        "common_offdiag_abs_mean": _offdiag_abs_mean(common),
        "unique_diag_abs_mean": float(np.mean(np.abs(np.diag(unique)))),
        "unique_offdiag_abs_mean": _offdiag_abs_mean(unique),
    }


def decoupling_metrics(
    fh: EmbeddingBatch,
    fp: EmbeddingBatch,
    part: PartitionConfig,
    eps: float = 1e-5,
    collapse_threshold: float = 1e-3,
) -> DecouplingMetrics:
    """Quantify how well an H/P embedding pair is decoupled.

    Args:
        fh (EmbeddingBatch): H-modality embeddings
        fp (EmbeddingBatch): P-modality embeddings of the same samples
        part (PartitionConfig): Common/unique split
        eps (float): Batch-normalisation degeneracy threshold
        collapse_threshold (float): Standard deviation counted as collapse

    Returns:
        DecouplingMetrics: Block statistics and per-dimension deviations
    """

    if fh.values.shape != fp.values.shape:
        raise InvalidArgumentError("H and P embeddings must share one shape.")
    if part.k_total != fh.dim:
        raise InvalidArgumentError(
            f"Partition of {part.k_total} dimensions does not fit K = {fh.dim}."
        )
    c = cross_correlation(batch_normalize(fh, eps), batch_normalize(fp, eps))
    return DecouplingMetrics(
        **block_statistics(c, part),
        std_h=fh.values.std(axis=0),
        std_p=fp.values.std(axis=0),
        collapse_threshold=collapse_threshold,
    )
