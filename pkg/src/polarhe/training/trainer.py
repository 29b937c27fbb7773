"""Mini-batch training of the dual encoder on the decoupled objective."""

import logging
import time
from typing import Dict, List, Optional, Tuple

import numpy as np

from polarhe.data.embedding import (
    DecouplingMetrics,
    EmbeddingBatch,
    LossReport,
    PartitionConfig,
)
from polarhe.data.training import (
    AugmentParams,
    EncoderSpec,
    PairedDataset,
    TrainConfig,
    TrainLog,
)
from polarhe.decoupling.losses import loss_total
from polarhe.decoupling.metrics import decoupling_metrics
from polarhe.exceptions import InvalidArgumentError, NumericalError
from polarhe.training.network import DualEncoder
from polarhe.training.synthetic import augment

logger = logging.getLogger(__name__)

VIEW_TAGS = ("H1", "H2", "P1", "P2")


def objective(
    model: DualEncoder,
    views: Dict[str, np.ndarray],
    part: PartitionConfig,
    cfg: TrainConfig,
    with_gradients: bool = True,
) -> Tuple[LossReport, Optional[Dict[str, List[np.ndarray]]]]:
    """Evaluate ``l_total`` on four views and back-propagate it to the parameters.

    Args:
        model (DualEncoder): The networks
        views (dict): Input batches keyed ``"H1"``, ``"H2"``, ``"P1"``, ``"P2"``
        part (PartitionConfig): Common/unique split of the embedding
        cfg (TrainConfig): Loss weights and ablation flags
        with_gradients (bool): Whether to compute parameter gradients

    Returns:
        tuple: The loss report and, on request, per-branch gradients in
        ``DualEncoder.parameters()`` order
    """

    batches, caches = {}, {}
    for tag in VIEW_TAGS:
        embedding, cache = model.branches[tag[0]].forward(views[tag])
        if not np.all(np.isfinite(embedding)):
            raise NumericalError(f"non-finite {tag} embedding")
        batches[tag] = EmbeddingBatch(embedding, modality=tag[0], view=int(tag[1]))
        caches[tag] = cache

    report = loss_total(
        batches["H1"],
        batches["H2"],
        batches["P1"],
        batches["P2"],
        part,
        cfg.weights,
        with_gradients=with_gradients,
        intra=cfg.intra,
        decouple=cfg.decouple,
        cross_pairs=cfg.cross_pairs,
    )
    if not with_gradients or report.gradients is None:
        return report, None

    grads: Dict[str, List[np.ndarray]] = {}
    for tag in VIEW_TAGS:
        branch = model.branches[tag[0]]
        branch_grads = branch.backward(caches[tag], report.gradients[tag])
        if tag[0] in grads:
            grads[tag[0]] = [g + h for g, h in zip(grads[tag[0]], branch_grads)]
        else:
            grads[tag[0]] = branch_grads
    return report, grads


class Trainer:
    """Gradient-descent trainer of an H/P dual encoder.

    Args:
        cfg (TrainConfig): Optimisation, loss and augmentation settings
        enc_h (EncoderSpec): Architecture of the H branch
        enc_p (EncoderSpec): Architecture of the P branch
    """

    def __init__(self, cfg: TrainConfig, enc_h: EncoderSpec, enc_p: EncoderSpec) -> None:
        if enc_h.output_dim != enc_p.output_dim:
            raise InvalidArgumentError(
                f"Both branches must embed into the same dimension, got "
                f"{enc_h.output_dim} and {enc_p.output_dim}."
            )
        self.cfg = cfg
        self.specs = {"H": enc_h, "P": enc_p}
        self.partition = cfg.partition_for(enc_h.output_dim)
        self.augment_params = AugmentParams(cfg.noise_std, cfg.mask_fraction)

    def _views(
        self, dataset: PairedDataset, idx: np.ndarray, rng: np.random.Generator
    ) -> Dict[str, np.ndarray]:
        h, p = dataset.h[idx], dataset.p[idx]
        return {
            "H1": augment(h, self.augment_params, rng),
            "H2": augment(h, self.augment_params, rng),
            "P1": augment(p, self.augment_params, rng),
            "P2": augment(p, self.augment_params, rng),
        }

    def train(self, dataset: PairedDataset) -> Tuple[DualEncoder, TrainLog]:
        """Run ``cfg.steps`` updates.

        The log holds one row per step before its update plus a final row,
        so a run of ``steps`` updates yields ``steps + 1`` rows.

        Args:
            dataset (PairedDataset): Paired training observations

        Returns:
            tuple: The trained networks and the training log

        Raises:
            NumericalError: If the loss or an embedding becomes non-finite
        """

        cfg = self.cfg
        if cfg.batch_size > dataset.n_samples:
            raise InvalidArgumentError(
                f"Batch size {cfg.batch_size} exceeds the {dataset.n_samples} samples."
            )

        # independent, reproducible streams
        model = DualEncoder.initialise(
            {"H": dataset.h.shape[1], "P": dataset.p.shape[1]}, self.specs, cfg.seed
        )
        batch_rng = np.random.default_rng([cfg.seed, 2])
        view_rng = np.random.default_rng([cfg.seed, 3])
        eval_idx = self.eval_indices(dataset)

        params = model.parameters()
        velocity = {k: [np.zeros_like(p) for p in v] for k, v in params.items()}
        log = TrainLog()

        for step in range(cfg.steps + 1):
            start = time.perf_counter()
            idx = batch_rng.choice(dataset.n_samples, size=cfg.batch_size, replace=False)
            views = self._views(dataset, idx, view_rng)
            update = step < cfg.steps
            try:
                report, grads = objective(model, views, self.partition, cfg, update)
            except NumericalError as err:
                logger.error("Training diverged at step %d: %s", step, err)
                raise NumericalError(str(err), step=step) from err
            if not report.is_finite():
                logger.error("Non-finite loss at step %d: %s", step, report.as_dict())
                raise NumericalError("non-finite loss", step=step)

            log.add(step, report.as_dict(), time.perf_counter() - start)
            if step % cfg.metrics_every == 0 or step == cfg.steps:
                try:
                    metrics = self.evaluate(model, dataset, eval_idx)
                except NumericalError as err:
                    logger.error("Evaluation diverged at step %d: %s", step, err)
                    raise NumericalError(str(err), step=step) from err
                log.add_metrics(metrics.as_dict())

            # momentum update
            if grads is not None:
                for name, branch_params in params.items():
                    for p, v, g in zip(branch_params, velocity[name], grads[name]):
                        v *= cfg.momentum
                        v -= cfg.learning_rate * g
                        p += v

            if step % cfg.log_every == 0 or step == cfg.steps:
                logger.info(
                    "step %d/%d l_total=%.5f l_com=%.5f l_uni=%.5f l_h=%.5f l_p=%.5f",
                    step,
                    cfg.steps,
                    report.l_total,
                    report.l_com,
                    report.l_uni,
                    report.l_h,
                    report.l_p,
                )
        return model, log

    def eval_indices(self, dataset: PairedDataset) -> np.ndarray:
        """Fixed, seeded subset on which decoupling metrics are evaluated."""

        eval_rng = np.random.default_rng([self.cfg.seed, 4])
        n_eval = min(self.cfg.eval_size, dataset.n_samples)
        return np.sort(eval_rng.permutation(dataset.n_samples)[:n_eval])

    def evaluate(
        self, model: DualEncoder, dataset: PairedDataset, idx: np.ndarray
    ) -> DecouplingMetrics:
        """Decoupling metrics of un-augmented embeddings of ``idx``."""

        fh = model.embed("H", dataset.h[idx])
        fp = model.embed("P", dataset.p[idx])
        if not (np.all(np.isfinite(fh)) and np.all(np.isfinite(fp))):
            raise NumericalError("non-finite evaluation embedding")
        return decoupling_metrics(
            EmbeddingBatch(fh, modality="H"),
            EmbeddingBatch(fp, modality="P"),
            self.partition,
        )


def train(
    dataset: PairedDataset, enc_h: EncoderSpec, enc_p: EncoderSpec, cfg: TrainConfig
) -> Tuple[DualEncoder, TrainLog]:
    """Train a dual encoder; see :meth:`Trainer.train`."""

    return Trainer(cfg, enc_h, enc_p).train(dataset)
