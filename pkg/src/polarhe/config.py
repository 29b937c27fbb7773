"""JSON configuration files for experiments and slide pipelines."""

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from typing_extensions import Literal

from polarhe.data.slide import FRAME_SIZE, PATCH_SIZE, RegistrationBounds
from polarhe.data.training import (
    EncoderSpec,
    SyntheticConfig,
    TrainConfig,
    from_mapping,
)
from polarhe.exceptions import InvalidArgumentError, MalformedInputError
from polarhe.io.manifest import RunManifest
from polarhe.training.ablation import RATIOS, SEEDS, VARIANTS

PathLike = Union[str, Path]

THREADS_ENV = "POLARHE_THREADS"


def load_config(path: PathLike) -> Dict[str, Any]:
    """Read a JSON configuration file.

    A run manifest is accepted in place of a configuration; its resolved
    ``config`` is returned, so a run can be repeated from its manifest.

    Raises:
        MalformedInputError: If the file is not a JSON object
    """

    path = Path(path)
    try:
        values = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise MalformedInputError(f"{path}: invalid JSON ({err})") from err
    if not isinstance(values, dict):
        raise MalformedInputError(f"{path}: a configuration must be a JSON object")
    if RunManifest.is_manifest(values):
        return dict(values["config"])
    return values


def resolve_threads(flag: Optional[int] = None) -> int:
    """Worker count: the command-line flag, else ``POLARHE_THREADS``, else 1."""

    if flag is not None:
        threads = flag
    else:
        raw = os.environ.get(THREADS_ENV)
        if raw is None or not raw.strip():
            return 1
        try:
            threads = int(raw)
        except ValueError as err:
            raise InvalidArgumentError(
                f"{THREADS_ENV} must be an integer, got {raw!r}."
            ) from err
    if threads < 1:
        raise InvalidArgumentError("The thread count must be at least 1.")
    return threads


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a synthetic training, probing or ablation run depends on.

    Attributes:
        synthetic (SyntheticConfig): Paired dataset generator
        encoder (EncoderSpec): Architecture shared by both branches
        train (TrainConfig): Optimisation and loss settings
        test_fraction (float): Held-out fraction of the linear probe
        probe_modality (str): Inputs of the probe, ``"h"``, ``"p"`` or ``"both"``
        ablation_variants (tuple): Loss variants of the ablation grid
        ablation_ratios (tuple): Common ratios of the ablation grid
        ablation_seeds (tuple): Seeds of the ablation grid
    """

    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)
    encoder: EncoderSpec = field(default_factory=EncoderSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    test_fraction: float = 0.25
    probe_modality: Literal["h", "p", "both"] = "h"
    ablation_variants: Tuple[str, ...] = tuple(VARIANTS)
    ablation_ratios: Tuple[float, ...] = RATIOS
    ablation_seeds: Tuple[int, ...] = SEEDS

    def __post_init__(self) -> None:
        if not 0 < self.test_fraction < 1:
            raise InvalidArgumentError(
                "test_fraction must lie strictly between 0 and 1."
            )
        if self.probe_modality not in ("h", "p", "both"):
            raise InvalidArgumentError(
                f"Unknown probe modality {self.probe_modality!r}."
            )
        unknown = set(self.ablation_variants) - set(VARIANTS)
        if unknown:
            raise InvalidArgumentError(
                f"Unknown ablation variants: {', '.join(sorted(unknown))}."
            )
        if not (self.ablation_variants and self.ablation_ratios and self.ablation_seeds):
            raise InvalidArgumentError("The ablation grid must not be empty.")

    @classmethod
    def from_dict(cls, values: Mapping[str, Any]) -> "ExperimentConfig":
        values = dict(values)
        if "synthetic" in values:
            values["synthetic"] = SyntheticConfig.from_dict(values["synthetic"])
        if "encoder" in values:
            values["encoder"] = EncoderSpec.from_dict(values["encoder"])
        if "train" in values:
            values["train"] = TrainConfig.from_dict(values["train"])
        return from_mapping(cls, values)

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        """Reseed training and shift the ablation seeds to start at ``seed``."""

        offsets = range(len(self.ablation_seeds))
        return dataclasses.replace(
            self,
            train=dataclasses.replace(self.train, seed=seed),
            ablation_seeds=tuple(seed + i for i in offsets),
        )

    def seeds(self) -> Dict[str, int]:
        seeds = {"synthetic": self.synthetic.seed, "train": self.train.seed}
        if self.encoder.seed is not None:
            seeds["encoder"] = self.encoder.seed
        return seeds


@dataclass(frozen=True)
class PipelineConfig:
    """Inputs and settings of the slide preparation pipeline.

    Attributes:
        polarization (str): Mueller image (PMM), the registration reference
        he (str): H&E grayscale image (PGM), registered onto the reference
        patch_size (int): Side of the square patches
        stride (int): Sliding-window step
        min_tissue_fraction (float): Minimum tissue fraction of a kept patch
        flat_field_window (int): Local-mean window of the flat-field correction
        out_size (tuple): ``(width, height)`` of the common frame
        bounds (RegistrationBounds): Registration search space
        floor (float): Minimum acceptable registration NCC
    """

    polarization: str
    he: str
    patch_size: int = PATCH_SIZE
    stride: int = PATCH_SIZE
    min_tissue_fraction: float = 0.1
    flat_field_window: int = 64
    out_size: Tuple[int, int] = FRAME_SIZE
    bounds: RegistrationBounds = field(default_factory=RegistrationBounds)
    floor: float = 0.2

    def __post_init__(self) -> None:
        if self.patch_size < 1 or self.stride < 1:
            raise InvalidArgumentError("patch_size and stride must be positive.")
        if not 0 <= self.min_tissue_fraction <= 1:
            raise InvalidArgumentError("min_tissue_fraction must lie in [0, 1].")
        if self.flat_field_window < 1:
            raise InvalidArgumentError("flat_field_window must be positive.")
        if len(self.out_size) != 2 or min(self.out_size) < 1:
            raise InvalidArgumentError("out_size must be a positive (width, height).")
        object.__setattr__(self, "out_size", tuple(map(int, self.out_size)))

    @classmethod
    def from_dict(
        cls, values: Mapping[str, Any], base_dir: Optional[PathLike] = None
    ) -> "PipelineConfig":
        """Build from a mapping; relative input paths resolve against ``base_dir``."""

        values = dict(values)
        for key in ("polarization", "he"):
            if key not in values:
                raise InvalidArgumentError(f"Pipeline configuration needs {key!r}.")
            path = Path(values[key])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            values[key] = str(path)
        if "bounds" in values and isinstance(values["bounds"], Mapping):
            values["bounds"] = from_mapping(RegistrationBounds, values["bounds"])
        return from_mapping(cls, values)

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)
