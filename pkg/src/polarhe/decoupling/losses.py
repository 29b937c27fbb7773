"""Redundancy-reduction loss terms of the decoupled objective."""

from typing import Dict, List, Tuple

import numpy as np
from typing_extensions import Literal

from polarhe.data.embedding import (
    CorrelationMatrix,
    EmbeddingBatch,
    LossReport,
    LossTerm,
    LossWeights,
    PartitionConfig,
)
from polarhe.decoupling.correlation import (
    batch_normalize,
    correlation_backward,
    cross_correlation,
    normalization_backward,
    unit_columns,
)
from polarhe.exceptions import InvalidArgumentError

# tags of the cross-modal view pairs
CROSS_PAIRS = {
    "both": [("H1", "P1"), ("H2", "P2")],
    "first": [("H1", "P1")],
}


def redundancy_term(c: np.ndarray, target: float, lambda_off: float) -> LossTerm:
    """``sum_i (t - C_ii)^2 + lambda_off * sum_{i != j} C_ij^2`` and its gradient."""

    diag = np.diag(c)
    off = c - np.diag(diag)
    value = np.sum((target - diag) ** 2) + lambda_off * np.sum(off**2)
    grad = 2.0 * lambda_off * off + np.diag(-2.0 * (target - diag))
    return LossTerm(value=float(value), grad=grad)


def _check_partition(c: CorrelationMatrix, part: PartitionConfig) -> None:
    if part.k_total > c.order:
        raise InvalidArgumentError(
            f"Partition of {part.k_total} dimensions exceeds a correlation "
            f"matrix of order {c.order}."
        )


def _embed(block_grad: np.ndarray, order: int, block: slice) -> np.ndarray:
    grad = np.zeros((order, order))
    grad[block, block] = block_grad
    return grad


def loss_common(
    c_full: CorrelationMatrix, part: PartitionConfig, lambda_c: float
) -> LossTerm:
    """Alignment loss on the leading ``k_common x k_common`` block.

    Args:
        c_full (CorrelationMatrix): Cross-modal correlation matrix
        part (PartitionConfig): Common/unique split of its dimensions
        lambda_c (float): Off-diagonal weight

    Returns:
        LossTerm: The value and ``dL/dC`` over the full matrix
    """

    _check_partition(c_full, part)
    term = redundancy_term(c_full.values[part.common, part.common], 1.0, lambda_c)
    return LossTerm(term.value, _embed(term.grad, c_full.order, part.common))


def loss_unique(
    c_full: CorrelationMatrix, part: PartitionConfig, lambda_u: float
) -> LossTerm:
    """Decorrelation loss on the trailing ``k_unique x k_unique`` block.

    Args:
        c_full (CorrelationMatrix): Cross-modal correlation matrix
        part (PartitionConfig): Common/unique split of its dimensions
        lambda_u (float): Off-diagonal weight

    Returns:
        LossTerm: The value and ``dL/dC`` over the full matrix
    """

    _check_partition(c_full, part)
    term = redundancy_term(c_full.values[part.unique, part.unique], 0.0, lambda_u)
    return LossTerm(term.value, _embed(term.grad, c_full.order, part.unique))


def loss_intra(c_same: CorrelationMatrix, lambda_m: float) -> LossTerm:
    """Invariance and redundancy reduction over all dimensions of one modality."""

    return redundancy_term(c_same.values, 1.0, lambda_m)


def _mean(values: List[float]) -> float:
    return sum(values) / len(values)


def loss_total(
    fh1: EmbeddingBatch,
    fh2: EmbeddingBatch,
    fp1: EmbeddingBatch,
    fp2: EmbeddingBatch,
    part: PartitionConfig,
    w: LossWeights,
    with_gradients: bool = False,
    intra: bool = True,
    decouple: bool = True,
    cross_pairs: Literal["both", "first"] = "both",
    eps: float = 1e-5,
) -> LossReport:
    """Evaluate the full objective ``l_com + l_uni + l_h + l_p``.

    All four batches are batch-normalised first. The cross-modal terms are
    averaged over the view pairs selected by ``cross_pairs``.

    Args:
        fh1 (EmbeddingBatch): First H view
        fh2 (EmbeddingBatch): Second H view
        fp1 (EmbeddingBatch): First P view
        fp2 (EmbeddingBatch): Second P view
        part (PartitionConfig): Common/unique split, ``k_total = K``
        w (LossWeights): Off-diagonal weights
        with_gradients (bool): Also return ``dl_total`` with respect to each
            raw batch
        intra (bool): Include the intra-modal terms; otherwise they are 0
        decouple (bool): Split the cross-modal term into common and unique
            blocks; otherwise a single full-``K`` alignment term is used and
            ``l_uni`` is 0
        cross_pairs (str): ``"both"`` or ``"first"``
        eps (float): Batch-normalisation degeneracy threshold

    Returns:
        LossReport: The five scalars, optional gradients and the correlation
        matrices used
    """

    raw = {"H1": fh1, "H2": fh2, "P1": fp1, "P2": fp2}
    shapes = {batch.values.shape for batch in raw.values()}
    if len(shapes) != 1:
        raise InvalidArgumentError(
            f"All four batches must share one shape, got {shapes}."
        )
    if fh1.dim != part.k_total:
        raise InvalidArgumentError(
            f"Embedding dimension {fh1.dim} does not match the partition "
            f"({part.k_total})."
        )
    if cross_pairs not in CROSS_PAIRS:
        raise InvalidArgumentError(f"Unknown cross_pairs {cross_pairs!r}.")

    normalized = {tag: batch_normalize(batch, eps) for tag, batch in raw.items()}
    correlations: Dict[str, CorrelationMatrix] = {}
    grad_c: List[Tuple[str, str, np.ndarray]] = []

    # cross-modal terms
    pairs = CROSS_PAIRS[cross_pairs]
    common_values, unique_values = [], []
    for tag_h, tag_p in pairs:
        c = cross_correlation(normalized[tag_h], normalized[tag_p])
        correlations[tag_h + tag_p] = c
        if decouple:
            common = loss_common(c, part, w.lambda_c)
            unique = loss_unique(c, part, w.lambda_u)
            unique_values.append(unique.value)
            grad = common.grad + unique.grad
        else:
            common = loss_intra(c, w.lambda_c)
            unique_values.append(0.0)
            grad = common.grad
        common_values.append(common.value)
        grad_c.append((tag_h, tag_p, grad / len(pairs)))
    l_com = _mean(common_values)
    l_uni = _mean(unique_values)

    # intra-modal terms
    l_h = l_p = 0.0
    if intra:
        intra_pairs = (("H1", "H2", w.lambda_h), ("P1", "P2", w.lambda_p))
        for first, second, lambda_m in intra_pairs:
            c = cross_correlation(normalized[first], normalized[second])
            correlations[first + second] = c
            term = loss_intra(c, lambda_m)
            grad_c.append((first, second, term.grad))
            if first == "H1":
                l_h = term.value
            else:
                l_p = term.value

    l_total = l_com + l_uni + l_h + l_p
    report = LossReport(l_com, l_uni, l_h, l_p, l_total, correlations=correlations)
    if with_gradients:
        report.gradients = _backward(raw, normalized, grad_c)
    return report


def _backward(
    raw: Dict[str, EmbeddingBatch],
    normalized: Dict[str, EmbeddingBatch],
    grad_c: List[Tuple[str, str, np.ndarray]],
) -> Dict[str, np.ndarray]:
    columns = {tag: unit_columns(batch) for tag, batch in normalized.items()}
    grad_unit = {tag: np.zeros_like(batch.values) for tag, batch in raw.items()}
    for first, second, grad in grad_c:
        grad_first, grad_second = correlation_backward(
            grad, columns[first][0], columns[second][0]
        )
        grad_unit[first] += grad_first
        grad_unit[second] += grad_second
    return {
        tag: normalization_backward(
            grad_unit[tag], raw[tag].values, columns[tag][0], columns[tag][1]
        )
        for tag in raw
    }
