"""Batch normalisation and cross-correlation of embedding batches."""

from typing import Tuple

import numpy as np

from polarhe.data.embedding import CorrelationMatrix, EmbeddingBatch
from polarhe.exceptions import InvalidArgumentError


def batch_normalize(e: EmbeddingBatch, eps: float = 1e-5) -> EmbeddingBatch:
    """Standardise every column of a batch.

    Columns are centred and divided by their population standard deviation;
    columns whose deviation is below ``eps`` are only centred and flagged
    degenerate.

    Args:
        e (EmbeddingBatch): Raw batch
        eps (float): Degeneracy threshold on the standard deviation

    Returns:
        EmbeddingBatch: Normalised batch with the same tags and a
        ``degenerate`` flag per column
    """

    if not eps > 0:
        raise InvalidArgumentError("eps must be positive.")
    centered = e.values - e.values.mean(axis=0)
    std = centered.std(axis=0)
    degenerate = std < eps
    scale = np.where(degenerate, 1.0, std)
    return EmbeddingBatch(
        centered / scale, modality=e.modality, view=e.view, degenerate=degenerate
    )


def unit_columns(e: EmbeddingBatch) -> Tuple[np.ndarray, np.ndarray]:
    """Columns scaled to unit Euclidean norm, zero where degenerate.

    Returns:
        tuple: The ``B x K`` unit-column matrix and the boolean degeneracy flags
    """

    norms = np.linalg.norm(e.values, axis=0)
    degenerate = norms == 0
    if e.degenerate is not None:
        degenerate = degenerate | e.degenerate
    safe = np.where(degenerate, 1.0, norms)
    unit = e.values / safe
    unit[:, degenerate] = 0.0
    return unit, degenerate


def cross_correlation(a: EmbeddingBatch, b: EmbeddingBatch) -> CorrelationMatrix:
    """Normalised inner products between the dimensions of two batches.

    ``C[i][j] = sum_b a[b][i] b[b][j] / (||a[:, i]|| ||b[:, j]||)``; entries
    involving a degenerate column are 0.

    Args:
        a (EmbeddingBatch): First batch, normally batch-normalised
        b (EmbeddingBatch): Second batch with the same shape

    Returns:
        CorrelationMatrix: The ``K x K`` matrix tagged with both sources
    """

    if a.values.shape != b.values.shape:
        raise InvalidArgumentError(
            f"Batch shapes differ: {a.values.shape} and {b.values.shape}."
        )
    unit_a, degenerate_a = unit_columns(a)
    unit_b, degenerate_b = unit_columns(b)
    return CorrelationMatrix(
        values=unit_a.T @ unit_b,
        sources=(a.tag, b.tag),
        degenerate_rows=degenerate_a,
        degenerate_cols=degenerate_b,
    )


def correlation_backward(
    grad_c: np.ndarray, unit_a: np.ndarray, unit_b: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Pull ``dL/dC`` back onto the two unit-column matrices."""

    return unit_b @ grad_c.T, unit_a @ grad_c


def normalization_backward(
    grad_unit: np.ndarray, raw: np.ndarray, unit: np.ndarray, degenerate: np.ndarray
) -> np.ndarray:
    """Pull a gradient on the unit columns back onto the raw batch.

    The unit columns are ``(x - mean) / ||x - mean||`` whatever the
    intermediate scaling, so only the centred norm enters the Jacobian.
    """

    centered_norm = np.linalg.norm(raw - raw.mean(axis=0), axis=0)
    centered_norm = np.where(degenerate, 1.0, centered_norm)
    # through the column normalisation
    radial = np.sum(unit * grad_unit, axis=0)
    grad = (grad_unit - unit * radial) / centered_norm
    # through the centring
    grad = grad - grad.mean(axis=0)
    grad[:, degenerate] = 0.0
    return grad
