"""Embedding and loss dataclass module."""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from typing_extensions import Literal

from polarhe.exceptions import InvalidArgumentError

Modality = Literal["H", "P"]

# default trade-off weight for every redundancy-reduction term
DEFAULT_LAMBDA = 0.0051


@dataclass(frozen=True)
class EmbeddingBatch:
    """A ``B x K`` batch of projected features.

    Attributes:
        values (np.ndarray): Batch matrix, one row per sample
        modality (str): ``"H"`` (H&E) or ``"P"`` (polarization)
        view (int): Augmented view index, 1 or 2
        degenerate (np.ndarray, optional): Columns flagged as zero-variance by
            batch normalisation
    """

    values: np.ndarray
    modality: Modality = "H"
    view: int = 1
    degenerate: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise InvalidArgumentError(
                f"An embedding batch must be a B x K matrix, got shape {values.shape}."
            )
        if values.shape[0] < 2:
            raise InvalidArgumentError("An embedding batch needs at least two samples.")
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("Embedding values must be finite.")
        if self.modality not in ("H", "P"):
            raise InvalidArgumentError(f"Unknown modality tag {self.modality!r}.")
        if self.view not in (1, 2):
            raise InvalidArgumentError(f"View tag must be 1 or 2, got {self.view}.")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.degenerate is not None:
            flags = np.array(self.degenerate, dtype=bool, copy=True)
            flags.setflags(write=False)
            object.__setattr__(self, "degenerate", flags)

    @property
    def batch_size(self) -> int:
        return int(self.values.shape[0])

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])

    @property
    def tag(self) -> str:
        return f"{self.modality}{self.view}"


@dataclass(frozen=True)
class PartitionConfig:
    """Split of the embedding dimensions into common and unique blocks.

    The common block occupies the first ``k_common`` indices.
    """

    k_total: int
    k_common: int
    k_unique: int

    def __post_init__(self) -> None:
        if self.k_common < 1 or self.k_unique < 1:
            raise InvalidArgumentError(
                "Both the common and the unique block need at least one dimension."
            )
        if self.k_common + self.k_unique != self.k_total:
            raise InvalidArgumentError(
                f"k_common + k_unique must equal k_total ({self.k_common} + "
                f"{self.k_unique} != {self.k_total})."
            )

    @classmethod
    def from_ratio(cls, k_total: int, common_ratio: float) -> "PartitionConfig":
        """Partition ``k_total`` dimensions with ``common_ratio`` of them common."""

        k_common = int(round(k_total * common_ratio))
        k_common = min(max(k_common, 1), k_total - 1)
        return cls(k_total=k_total, k_common=k_common, k_unique=k_total - k_common)

    @property
    def common(self) -> slice:
        return slice(0, self.k_common)

    @property
    def unique(self) -> slice:
        return slice(self.k_common, self.k_total)


@dataclass(frozen=True)
class LossWeights:
    """Off-diagonal weights of the four loss terms."""

    lambda_c: float = DEFAULT_LAMBDA
    lambda_u: float = DEFAULT_LAMBDA
    lambda_h: float = DEFAULT_LAMBDA
    lambda_p: float = DEFAULT_LAMBDA

    def __post_init__(self) -> None:
        for name in ("lambda_c", "lambda_u", "lambda_h", "lambda_p"):
            if getattr(self, name) < 0:
                raise InvalidArgumentError(f"{name} must be non-negative.")


@dataclass(frozen=True)
class CorrelationMatrix:
    """Cross-correlation matrix between the dimensions of two batches.

    Attributes:
        values (np.ndarray): Square matrix of normalised inner products
        sources (tuple): Tags of the two source batches, e.g. ``("H1", "P1")``
        degenerate_rows (np.ndarray): Degenerate columns of the first batch
        degenerate_cols (np.ndarray): Degenerate columns of the second batch
    """

    values: np.ndarray
    sources: Tuple[str, str] = ("", "")
    degenerate_rows: Optional[np.ndarray] = field(default=None, repr=False)
    degenerate_cols: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise InvalidArgumentError(
                f"A correlation matrix must be square, got shape {values.shape}."
            )
        object.__setattr__(self, "values", values)

    @property
    def order(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class LossTerm:
    """A scalar loss together with its gradient with respect to ``C``."""

    value: float
    grad: np.ndarray = field(repr=False)


@dataclass
class LossReport:
    """Values (and optionally gradients) of the decoupled objective.

    Attributes:
        l_com (float): Cross-modal common-block loss
        l_uni (float): Cross-modal unique-block loss
        l_h (float): Intra-modal H&E loss
        l_p (float): Intra-modal polarization loss
        l_total (float): ``l_com + l_uni + l_h + l_p``
        gradients (dict, optional): Gradient of ``l_total`` with respect to
            each raw input batch, keyed ``"H1"``, ``"H2"``, ``"P1"``, ``"P2"``
        correlations (dict): The correlation matrices the terms were built from
    """

    l_com: float
    l_uni: float
    l_h: float
    l_p: float
    l_total: float
    gradients: Optional[Dict[str, np.ndarray]] = field(default=None, repr=False)
    correlations: Dict[str, CorrelationMatrix] = field(default_factory=dict, repr=False)

    def as_dict(self) -> Dict[str, float]:
        return {
            "l_com": self.l_com,
            "l_uni": self.l_uni,
            "l_h": self.l_h,
            "l_p": self.l_p,
            "l_total": self.l_total,
        }

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(list(self.as_dict().values()))))


@dataclass(frozen=True)
class DecouplingMetrics:
    """Block statistics of the cross-modal correlation matrix.

    Attributes:
        common_diag_mean (float): Mean diagonal of the common block
        common_offdiag_abs_mean (float): Mean |off-diagonal| of the common block
        unique_diag_abs_mean (float): Mean |diagonal| of the unique block
        unique_offdiag_abs_mean (float): Mean |off-diagonal| of the unique block
        std_h (np.ndarray): Per-dimension standard deviation of the H embedding
        std_p (np.ndarray): Per-dimension standard deviation of the P embedding
        collapse_threshold (float): Standard deviation under which a dimension
            counts as collapsed
    """

    common_diag_mean: float
    common_offdiag_abs_mean: float
    unique_diag_abs_mean: float
    unique_offdiag_abs_mean: float
    std_h: np.ndarray = field(repr=False)
    std_p: np.ndarray = field(repr=False)
    collapse_threshold: float = 1e-3

    @property
    def min_std(self) -> float:
        return float(min(np.min(self.std_h), np.min(self.std_p)))

    @property
    def collapsed(self) -> bool:
        return self.min_std <= self.collapse_threshold

    def as_dict(self) -> Dict[str, float]:
        return {
            "common_diag_mean": self.common_diag_mean,
            "common_offdiag_abs_mean": self.common_offdiag_abs_mean,
            "unique_diag_abs_mean": self.unique_diag_abs_mean,
            "unique_offdiag_abs_mean": self.unique_offdiag_abs_mean,
            "min_std": self.min_std,
        }
