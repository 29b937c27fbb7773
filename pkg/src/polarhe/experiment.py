"""Core decoupling experiment class."""

import logging
from typing import Optional, Sequence, Tuple

from typing_extensions import Literal

from polarhe.config import ExperimentConfig
from polarhe.data.embedding import (
    CorrelationMatrix,
    DecouplingMetrics,
    EmbeddingBatch,
    PartitionConfig,
)
from polarhe.data.training import PairedDataset, ProbeResult, ProbeSplit, TrainLog
from polarhe.decoupling.correlation import batch_normalize, cross_correlation
from polarhe.decoupling.metrics import decoupling_metrics
from polarhe.training.ablation import AblationReport, AblationRunner
from polarhe.training.network import DualEncoder
from polarhe.training.probe import linear_probe, model_encoder, probe_inputs
from polarhe.training.trainer import Trainer

logger = logging.getLogger(__name__)

ProbeModality = Literal["h", "p", "both"]


class DecouplingExperiment:
    """
    Experiment class from which a decoupled dual encoder is trained and judged.
    """

    def __init__(
        self, config: Optional[ExperimentConfig] = None, threads: int = 1
    ) -> None:
        """Synthetic-data experiment around one dual encoder.

        The object generates the paired dataset once and hands it to the
        trainer, the linear probe and the ablation runner, so every step of
        an experiment sees the same samples.

        Args:
            config (ExperimentConfig, optional): Dataset, architecture,
                training and ablation settings; the defaults when omitted
            threads (int): Worker threads of the ablation grid
        """

        self.config = config if config is not None else ExperimentConfig()
        self.threads = threads
        encoder = self.config.encoder
        self.trainer = Trainer(self.config.train, encoder, encoder)
        self.runner = AblationRunner(
            self.config.synthetic,
            self.config.encoder,
            self.config.train,
            threads=threads,
            test_fraction=self.config.test_fraction,
        )
        self.model: Optional[DualEncoder] = None
        self.log: Optional[TrainLog] = None

    @property
    def dataset(self) -> PairedDataset:
        return self.runner.dataset

    @property
    def partition(self) -> PartitionConfig:
        return self.trainer.partition

    def train(self) -> Tuple[DualEncoder, TrainLog]:
        """Train the dual encoder and keep it for later steps.

        Returns:
            tuple: The trained networks and the training log
        """

        logger.info(
            "training %d steps on %d paired samples",
            self.config.train.steps,
            self.dataset.n_samples,
        )
        self.model, self.log = self.trainer.train(self.dataset)
        return self.model, self.log

    def _model(self, model: Optional[DualEncoder]) -> DualEncoder:
        if model is not None:
            return model
        if self.model is None:
            self.train()
        return self.model

    def probe_split(self, modality: Optional[ProbeModality] = None) -> ProbeSplit:
        """Seeded held-out split of the raw probe inputs."""

        modality = modality or self.config.probe_modality
        train_idx, test_idx = self.dataset.split_indices(
            self.config.test_fraction, self.config.train.seed
        )
        return ProbeSplit.from_arrays(
            probe_inputs(self.dataset, modality),
            self.dataset.labels,
            train_idx,
            test_idx,
        )

    def probe(
        self,
        model: Optional[DualEncoder] = None,
        modality: Optional[ProbeModality] = None,
    ) -> ProbeResult:
        """Linear probe on frozen encoder representations.

        Trains the experiment's model first when neither a model is given nor
        one was trained.

        Args:
            model (DualEncoder, optional): Networks to probe
            modality (str, optional): ``"h"``, ``"p"`` or ``"both"``; the
                configured probe modality by default

        Returns:
            ProbeResult: Held-out accuracy, macro F1 and AUC
        """

        modality = modality or self.config.probe_modality
        encoder = model_encoder(self._model(model), modality)
        return linear_probe(encoder, self.probe_split(modality), self.config.train.seed)

    def baseline_probe(self, modality: Optional[ProbeModality] = None) -> ProbeResult:
        """Linear probe on the raw observations, no encoder involved."""

        return linear_probe(None, self.probe_split(modality), self.config.train.seed)

    def ablate(
        self,
        variants: Optional[Sequence[str]] = None,
        ratios: Optional[Sequence[float]] = None,
        seeds: Optional[Sequence[int]] = None,
    ) -> AblationReport:
        """Train and probe the ablation grid; the configured grid by default."""

        cfg = self.config
        return self.runner.run(
            variants if variants is not None else cfg.ablation_variants,
            ratios if ratios is not None else cfg.ablation_ratios,
            seeds if seeds is not None else cfg.ablation_seeds,
        )

    def embeddings(
        self, model: Optional[DualEncoder] = None
    ) -> Tuple[EmbeddingBatch, EmbeddingBatch]:
        """Un-augmented H and P embeddings of the fixed evaluation subset."""

        model = self._model(model)
        idx = self.trainer.eval_indices(self.dataset)
        return (
            EmbeddingBatch(model.embed("H", self.dataset.h[idx]), modality="H"),
            EmbeddingBatch(model.embed("P", self.dataset.p[idx]), modality="P"),
        )

    def metrics(self, model: Optional[DualEncoder] = None) -> DecouplingMetrics:
        fh, fp = self.embeddings(model)
        return decoupling_metrics(fh, fp, self.partition)


def embedding_correlation(fh: EmbeddingBatch, fp: EmbeddingBatch) -> CorrelationMatrix:
    """Cross-modal correlation of two raw embedding batches."""

    return cross_correlation(batch_normalize(fh), batch_normalize(fp))
