"""Linear probing of frozen encoder representations."""

import logging
from typing import Callable, Optional

import numpy as np
from sklearn.linear_model import LogisticRegression
from sklearn.metrics import accuracy_score, f1_score, roc_auc_score
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler
from typing_extensions import Literal

from polarhe.data.training import PairedDataset, ProbeResult, ProbeSplit
from polarhe.exceptions import InvalidArgumentError
from polarhe.training.network import DualEncoder

logger = logging.getLogger(__name__)

Encoder = Callable[[np.ndarray], np.ndarray]


def probe_inputs(
    dataset: PairedDataset, modality: Literal["h", "p", "both"] = "h"
) -> np.ndarray:
    """Observations a probe sees; ``"both"`` stacks the modalities side by side."""

    if modality == "h":
        return dataset.h
    if modality == "p":
        return dataset.p
    if modality == "both":
        return np.hstack([dataset.h, dataset.p])
    raise InvalidArgumentError(f"Unknown probe modality {modality!r}.")


def model_encoder(
    model: DualEncoder, modality: Literal["h", "p", "both"] = "h"
) -> Encoder:
    """Frozen representation function of a trained dual encoder."""

    if modality == "h":
        return lambda x: model.encode("H", x)
    if modality == "p":
        return lambda x: model.encode("P", x)
    if modality == "both":
        width = model.branches["H"].input_dim
        return lambda x: np.hstack(
            [model.encode("H", x[:, :width]), model.encode("P", x[:, width:])]
        )
    raise InvalidArgumentError(f"Unknown probe modality {modality!r}.")


def linear_probe(
    encoder: Optional[Encoder], split: ProbeSplit, seed: int = 0
) -> ProbeResult:
    """Fit a multinomial logistic regression on frozen features.

    Features are standardised with statistics of the training split.

    Args:
        encoder (callable, optional): Frozen representation function; the
            inputs are used as they are when ``None``
        split (ProbeSplit): Disjoint train and test inputs with labels
        seed (int): Seed of the classifier

    Returns:
        ProbeResult: Held-out accuracy, macro F1 and one-vs-rest macro AUC

    Raises:
        InvalidArgumentError: If the training split holds a single class
    """

    classes = np.unique(split.train_y)
    if classes.size < 2:
        raise InvalidArgumentError("The probe training split holds a single class.")

    # freeze the features
    train_x, test_x = split.train_x, split.test_x
    if encoder is not None:
        train_x, test_x = encoder(train_x), encoder(test_x)

    clf = make_pipeline(
        StandardScaler(), LogisticRegression(max_iter=2000, random_state=seed)
    )
    clf.fit(train_x, split.train_y)
    predicted = clf.predict(test_x)
    proba = clf.predict_proba(test_x)

    accuracy = float(accuracy_score(split.test_y, predicted))
    f1 = float(f1_score(split.test_y, predicted, labels=classes, average="macro"))
    try:
        if classes.size == 2:
            auc = float(roc_auc_score(split.test_y, proba[:, 1]))
        else:
            auc = float(
                roc_auc_score(
                    split.test_y,
                    proba,
                    multi_class="ovr",
                    average="macro",
                    labels=classes,
                )
            )
    except ValueError:
        logger.warning("ROC AUC is undefined on this test split")
        auc = float("nan")
    logger.info("linear probe accuracy=%.4f f1=%.4f auc=%.4f", accuracy, f1, auc)
    return ProbeResult(accuracy=accuracy, f1=f1, auc=auc)
