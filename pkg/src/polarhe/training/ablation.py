"""Loss-component and common-ratio ablation suite."""

import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import pandas as pd

from polarhe.data.training import (
    LOSS_COLUMNS,
    EncoderSpec,
    PairedDataset,
    ProbeSplit,
    SyntheticConfig,
    TrainConfig,
)
from polarhe.exceptions import InvalidArgumentError
from polarhe.training.probe import linear_probe, model_encoder, probe_inputs
from polarhe.training.synthetic import generate_synthetic
from polarhe.training.trainer import Trainer

logger = logging.getLogger(__name__)

# loss switches of every ablation variant
VARIANTS: Dict[str, Dict[str, bool]] = {
    "full": {"intra": True, "decouple": True},
    "no_intra": {"intra": False, "decouple": True},
    "no_decoupling": {"intra": True, "decouple": False},
    "no_both": {"intra": False, "decouple": False},
}
RATIOS: Tuple[float, ...] = (0.5, 0.75, 0.85)
SEEDS: Tuple[int, ...] = (0, 1, 2)


@dataclass
class AblationReport:
    """Per-cell results of an ablation run.

    Attributes:
        cells (pd.DataFrame): One row per (variant, common_ratio, seed)
    """

    cells: pd.DataFrame

    def __repr__(self) -> str:
        return self.table().to_string(float_format=lambda x: f"{x:.4f}")

    def table(self, column: str = "accuracy") -> pd.DataFrame:
        """Median of ``column`` over seeds, variants by common ratios."""

        table = self.cells.pivot_table(
            index="variant", columns="common_ratio", values=column, aggfunc="median"
        )
        order = [v for v in VARIANTS if v in table.index]
        return table.loc[order]

    def median(self, variant: str, ratio: float, column: str = "accuracy") -> float:
        return float(self.table(column).loc[variant, ratio])


class AblationRunner:
    """Train and probe every cell of the ablation grid.

    Args:
        synthetic (SyntheticConfig): Dataset shared by every cell
        encoder (EncoderSpec): Architecture of both branches
        base (TrainConfig): Settings every cell starts from; the seed, common
            ratio and loss switches are overridden per cell
        threads (int): Number of cells trained concurrently
        test_fraction (float): Held-out fraction for the linear probe
    """

    def __init__(
        self,
        synthetic: SyntheticConfig,
        encoder: EncoderSpec,
        base: TrainConfig,
        threads: int = 1,
        test_fraction: float = 0.25,
    ) -> None:
        if threads < 1:
            raise InvalidArgumentError("threads must be at least 1.")
        self.synthetic = synthetic
        self.encoder = encoder
        self.base = base
        self.threads = threads
        self.test_fraction = test_fraction
        self.variant_dict = VARIANTS
        self._dataset: Optional[PairedDataset] = None

    @property
    def dataset(self) -> PairedDataset:
        if self._dataset is None:
            self._dataset = generate_synthetic(self.synthetic)
        return self._dataset

    def cell_config(self, variant: str, ratio: float, seed: int) -> TrainConfig:
        if variant not in self.variant_dict:
            raise InvalidArgumentError(f"Unknown ablation variant {variant!r}.")
        return dataclasses.replace(
            self.base,
            seed=seed,
            common_ratio=ratio,
            partition=None,
            **self.variant_dict[variant],
        )

    def run_cell(self, variant: str, ratio: float, seed: int) -> dict:
        """Train one cell and probe its H encoder."""

        cfg = self.cell_config(variant, ratio, seed)
        dataset = self.dataset
        model, log = Trainer(cfg, self.encoder, self.encoder).train(dataset)

        train_idx, test_idx = dataset.split_indices(self.test_fraction, seed)
        split = ProbeSplit.from_arrays(
            probe_inputs(dataset, "h"), dataset.labels, train_idx, test_idx
        )
        result = linear_probe(model_encoder(model, "h"), split, seed)
        log.probe_accuracy = result.accuracy
        logger.info(
            "ablation cell %s ratio=%.2f seed=%d accuracy=%.4f",
            variant,
            ratio,
            seed,
            result.accuracy,
        )

        row = {"variant": variant, "common_ratio": ratio, "seed": seed}
        row.update(result.as_dict())
        row.update({name: log.final(name) for name in LOSS_COLUMNS})
        row["min_std"] = log.final("min_std")
        return row

    def run(
        self,
        variants: Optional[Sequence[str]] = None,
        ratios: Sequence[float] = RATIOS,
        seeds: Sequence[int] = SEEDS,
    ) -> AblationReport:
        """Run the grid, cells in (variant, ratio, seed) order."""

        variants = list(self.variant_dict) if variants is None else list(variants)
        grid = [(v, r, s) for v in variants for r in ratios for s in seeds]
        logger.info("running %d ablation cells on %d threads", len(grid), self.threads)

        # generate the shared dataset before fanning out
        _ = self.dataset
        if self.threads == 1:
            rows = [self.run_cell(*cell) for cell in grid]
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                rows = list(pool.map(lambda cell: self.run_cell(*cell), grid))
        return AblationReport(cells=pd.DataFrame.from_records(rows))


def run_ablation(
    synthetic: SyntheticConfig,
    encoder: EncoderSpec,
    base: TrainConfig,
    variants: Optional[Sequence[str]] = None,
    ratios: Sequence[float] = RATIOS,
    seeds: Sequence[int] = SEEDS,
    threads: int = 1,
) -> AblationReport:
    """Run the ablation grid; see :class:`AblationRunner`."""

    runner = AblationRunner(synthetic, encoder, base, threads=threads)
    return runner.run(variants, ratios, seeds)
