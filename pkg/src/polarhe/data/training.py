"""Training configuration and log dataclass module."""

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple, Type, TypeVar

import numpy as np
import pandas as pd
from typing_extensions import Literal

from polarhe.data.embedding import LossWeights, PartitionConfig
from polarhe.exceptions import InvalidArgumentError

T = TypeVar("T")

LOSS_COLUMNS = ["l_com", "l_uni", "l_h", "l_p", "l_total"]
METRIC_COLUMNS = [
    "common_diag_mean",
    "common_offdiag_abs_mean",
    "unique_diag_abs_mean",
    "unique_offdiag_abs_mean",
    "min_std",
]


def from_mapping(cls: Type[T], values: Mapping[str, Any]) -> T:
    """Build dataclass ``cls`` from a mapping, rejecting unknown keys."""

    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - names
    if unknown:
        raise InvalidArgumentError(
            f"Unknown {cls.__name__} keys: {', '.join(sorted(unknown))}."
        )
    kwargs = {}
    for key, value in values.items():
        # JSON arrays arrive as lists
        kwargs[key] = tuple(value) if isinstance(value, list) else value
    return cls(**kwargs)


@dataclass(frozen=True)
class SyntheticConfig:
    """Generator settings of the synthetic paired-modality dataset.

    Attributes:
        n_shared (int): Latent factors seen by both modalities
        n_unique_h (int): Latent factors seen only by the H modality
        n_unique_p (int): Latent factors seen only by the P modality
        obs_dim_h (int): Observation dimension of the H modality
        obs_dim_p (int): Observation dimension of the P modality
        seed (int): Seed of the mixing matrices and of the samples
        noise_std (float): Observation noise standard deviation
        n_samples (int): Number of paired samples
        n_classes (int): Number of downstream classes
        unique_weight (float): Scale of the unique-factor mixing columns
    """

    n_shared: int = 8
    n_unique_h: int = 8
    n_unique_p: int = 8
    obs_dim_h: int = 32
    obs_dim_p: int = 32
    seed: int = 0
    noise_std: float = 0.05
    n_samples: int = 4096
    n_classes: int = 4
    unique_weight: float = 1.0

    def __post_init__(self) -> None:
        counts = ("n_shared", "n_unique_h", "n_unique_p", "obs_dim_h", "obs_dim_p")
        for name in counts + ("n_samples",):
            if getattr(self, name) < 1:
                raise InvalidArgumentError(f"{name} must be at least 1.")
        if self.n_classes < 2:
            raise InvalidArgumentError("n_classes must be at least 2.")
        if self.noise_std < 0:
            raise InvalidArgumentError("noise_std must be non-negative.")

    @classmethod
    def from_dict(cls, values: Mapping[str, Any]) -> "SyntheticConfig":
        return from_mapping(cls, values)


@dataclass(frozen=True)
class EncoderSpec:
    """Architecture of one modality branch.

    Attributes:
        encoder_widths (tuple): Output widths of the encoder layers; the last
            one is the representation handed to the linear probe
        projector_widths (tuple): Output widths of the three projector layers;
            the last one is the embedding dimension ``K``
        activation (str): ``"tanh"`` or ``"relu"``
        seed (int, optional): Parameter-initialisation seed; derived from the
            training seed when omitted
    """

    encoder_widths: Tuple[int, ...] = (128, 64)
    projector_widths: Tuple[int, int, int] = (128, 128, 64)
    activation: Literal["tanh", "relu"] = "tanh"
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if len(self.projector_widths) != 3:
            raise InvalidArgumentError("The projector must have exactly three layers.")
        if len(self.encoder_widths) < 1:
            raise InvalidArgumentError("The encoder needs at least one layer.")
        if min(self.encoder_widths + tuple(self.projector_widths)) < 1:
            raise InvalidArgumentError("Layer widths must be positive.")
        if self.activation not in ("tanh", "relu"):
            raise InvalidArgumentError(f"Unknown activation {self.activation!r}.")

    @property
    def output_dim(self) -> int:
        return int(self.projector_widths[-1])

    @property
    def representation_dim(self) -> int:
        return int(self.encoder_widths[-1])

    @classmethod
    def from_dict(cls, values: Mapping[str, Any]) -> "EncoderSpec":
        return from_mapping(cls, values)


@dataclass(frozen=True)
class TrainConfig:
    """Optimisation settings of the dual-encoder trainer.

    Attributes:
        batch_size (int): Mini-batch size, at least 2
        steps (int): Number of parameter updates
        learning_rate (float): Step size
        momentum (float): Heavy-ball momentum, 0 for plain gradient descent
        weights (LossWeights): Off-diagonal weights of the loss terms
        common_ratio (float): Fraction of embedding dimensions in the common block
        partition (PartitionConfig, optional): Explicit partition, overrides
            ``common_ratio``
        noise_std (float): Augmentation noise standard deviation
        mask_fraction (float): Fraction of coordinates zeroed by augmentation
        seed (int): Seed of batching, augmentation and derived initialisation
        intra (bool): Whether the intra-modal terms are used
        decouple (bool): Whether the embedding is split into common/unique blocks
        cross_pairs (str): ``"both"`` averages the two cross-modal view pairs,
            ``"first"`` uses only the first views
        log_every (int): Steps between progress log lines
        metrics_every (int): Steps between decoupling-metric evaluations
        eval_size (int): Number of samples of the fixed evaluation subset
    """

    batch_size: int = 256
    steps: int = 2000
    learning_rate: float = 1e-3
    momentum: float = 0.9
    weights: LossWeights = field(default_factory=LossWeights)
    common_ratio: float = 0.75
    partition: Optional[PartitionConfig] = None
    noise_std: float = 0.05
    mask_fraction: float = 0.05
    seed: int = 0
    intra: bool = True
    decouple: bool = True
    cross_pairs: Literal["both", "first"] = "both"
    log_every: int = 100
    metrics_every: int = 100
    eval_size: int = 1024

    def __post_init__(self) -> None:
        if self.batch_size < 2:
            raise InvalidArgumentError("batch_size must be at least 2.")
        if self.steps < 0:
            raise InvalidArgumentError("steps must be non-negative.")
        if not self.learning_rate > 0:
            raise InvalidArgumentError("learning_rate must be positive.")
        if not 0 <= self.momentum < 1:
            raise InvalidArgumentError("momentum must lie in [0, 1).")
        if not 0 < self.common_ratio < 1:
            raise InvalidArgumentError("common_ratio must lie strictly between 0 and 1.")
        if not 0 <= self.mask_fraction <= 1 or self.noise_std < 0:
            raise InvalidArgumentError("Invalid augmentation parameters.")
        if self.cross_pairs not in ("both", "first"):
            raise InvalidArgumentError(f"Unknown cross_pairs {self.cross_pairs!r}.")
        if self.eval_size < 2:
            raise InvalidArgumentError("eval_size must be at least 2.")
        if self.log_every < 1 or self.metrics_every < 1:
            raise InvalidArgumentError("log_every and metrics_every must be at least 1.")

    def partition_for(self, k_total: int) -> PartitionConfig:
        if self.partition is not None:
            if self.partition.k_total != k_total:
                raise InvalidArgumentError(
                    f"Partition covers {self.partition.k_total} dimensions but the "
                    f"embedding has {k_total}."
                )
            return self.partition
        return PartitionConfig.from_ratio(k_total, self.common_ratio)

    @classmethod
    def from_dict(cls, values: Mapping[str, Any]) -> "TrainConfig":
        values = dict(values)
        if "weights" in values and isinstance(values["weights"], Mapping):
            values["weights"] = from_mapping(LossWeights, values["weights"])
        if "partition" in values and isinstance(values["partition"], Mapping):
            values["partition"] = from_mapping(PartitionConfig, values["partition"])
        return from_mapping(cls, values)


@dataclass(frozen=True)
class AugmentParams:
    """Noise and masking applied to produce one augmented view."""

    noise_std: float = 0.05
    mask_fraction: float = 0.05

    def __post_init__(self) -> None:
        if self.noise_std < 0 or not 0 <= self.mask_fraction <= 1:
            raise InvalidArgumentError("Invalid augmentation parameters.")


@dataclass(frozen=True)
class PairedDataset:
    """Synthetic paired observations with their generating factors.

    Attributes:
        h (np.ndarray): ``n x obs_dim_h`` H-modality observations
        p (np.ndarray): ``n x obs_dim_p`` P-modality observations
        z_shared (np.ndarray): Shared latent factors
        z_unique_h (np.ndarray): H-only latent factors
        z_unique_p (np.ndarray): P-only latent factors
        labels (np.ndarray): Downstream class of every sample
    """

    h: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)
    z_shared: np.ndarray = field(repr=False)
    z_unique_h: np.ndarray = field(repr=False)
    z_unique_p: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)

    @property
    def n_samples(self) -> int:
        return int(self.h.shape[0])

    def split_indices(
        self, test_fraction: float = 0.25, seed: int = 0
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Disjoint, seeded train/test index split."""

        if not 0 < test_fraction < 1:
            raise InvalidArgumentError(
                "test_fraction must lie strictly between 0 and 1."
            )
        order = np.random.default_rng(seed).permutation(self.n_samples)
        n_test = max(1, int(round(self.n_samples * test_fraction)))
        return np.sort(order[n_test:]), np.sort(order[:n_test])


@dataclass(frozen=True)
class ProbeSplit:
    """Train and test inputs of a linear probe."""

    train_x: np.ndarray = field(repr=False)
    train_y: np.ndarray = field(repr=False)
    test_x: np.ndarray = field(repr=False)
    test_y: np.ndarray = field(repr=False)

    @classmethod
    def from_arrays(
        cls,
        x: np.ndarray,
        y: np.ndarray,
        train_idx: np.ndarray,
        test_idx: np.ndarray,
    ) -> "ProbeSplit":
        if np.intersect1d(train_idx, test_idx).size:
            raise InvalidArgumentError("Train and test indices must be disjoint.")
        return cls(x[train_idx], y[train_idx], x[test_idx], y[test_idx])


@dataclass(frozen=True)
class ProbeResult:
    """Held-out scores of a linear probe.

    Attributes:
        accuracy (float): Test accuracy in [0, 1]
        f1 (float): Macro-averaged F1 score
        auc (float): One-vs-rest macro ROC AUC
    """

    accuracy: float
    f1: float
    auc: float

    def as_dict(self) -> Dict[str, float]:
        return {"accuracy": self.accuracy, "f1": self.f1, "auc": self.auc}


@dataclass
class TrainLog:
    """Per-step record of a training run.

    Attributes:
        records (list): One row per step with the five loss terms, plus the
            decoupling metrics on evaluation steps
        step_seconds (list): Wall-clock duration of every step
        probe_accuracy (float, optional): Final linear-probe accuracy
    """

    records: List[Dict[str, float]] = field(default_factory=list)
    step_seconds: List[float] = field(default_factory=list, repr=False, compare=False)
    probe_accuracy: Optional[float] = None

    def __len__(self) -> int:
        return len(self.records)

    def add(self, step: int, losses: Mapping[str, float], seconds: float) -> None:
        row: Dict[str, float] = {"step": step}
        row.update({name: float(losses[name]) for name in LOSS_COLUMNS})
        self.records.append(row)
        self.step_seconds.append(seconds)

    def add_metrics(self, metrics: Mapping[str, float]) -> None:
        self.records[-1].update({name: float(metrics[name]) for name in METRIC_COLUMNS})

    def to_frame(self, include_timing: bool = False) -> pd.DataFrame:
        """Tabulate the log; timing is excluded unless asked for."""

        frame = pd.DataFrame.from_records(
            self.records, columns=["step"] + LOSS_COLUMNS + METRIC_COLUMNS
        )
        frame["step"] = frame["step"].astype(int)
        if include_timing:
            frame["seconds"] = self.step_seconds
        return frame

    def final(self, column: str) -> float:
        return float(self.records[-1][column])
