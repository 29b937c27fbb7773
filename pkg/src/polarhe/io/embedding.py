"""Embedding batches and network parameters in PMM containers."""

import dataclasses
import json
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from polarhe.data.embedding import EmbeddingBatch, PartitionConfig
from polarhe.data.training import EncoderSpec
from polarhe.exceptions import InvalidArgumentError, MalformedInputError
from polarhe.io.pmm import read_pmm, write_pmm
from polarhe.training.network import DualEncoder, ModalityBranch

PathLike = Union[str, Path]

PARAMETER_MANIFEST = "parameters.json"


def _read_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise MalformedInputError(f"{path}: invalid JSON ({err})") from err


def save_embedding(
    path: PathLike, batch: EmbeddingBatch, part: Optional[PartitionConfig] = None
) -> Path:
    """Write a batch as a one-row PMM plus a JSON sidecar.

    The PMM holds width ``B``, height 1 and ``K`` channels; the sidecar, next
    to it with a ``.json`` suffix, holds the tags and the partition.

    Returns:
        Path: The PMM path
    """

    path = Path(path).with_suffix(".pmm")
    write_pmm(path, batch.values[np.newaxis, :, :])
    sidecar = {
        "modality": batch.modality,
        "view": batch.view,
        "batch_size": batch.batch_size,
        "dim": batch.dim,
        "partition": dataclasses.asdict(part) if part is not None else None,
    }
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    return path


def load_embedding(path: PathLike) -> Tuple[EmbeddingBatch, Optional[PartitionConfig]]:
    """Read a batch written by :func:`save_embedding`."""

    path = Path(path).with_suffix(".pmm")
    data = read_pmm(path, channels=None)
    if data.shape[0] != 1:
        raise MalformedInputError(f"{path}: embedding PMM must have height 1")
    meta = _read_json(path.with_suffix(".json"))
    part = meta.get("partition")
    try:
        batch = EmbeddingBatch(
            data[0], modality=meta.get("modality", "H"), view=int(meta.get("view", 1))
        )
        partition = PartitionConfig(**part) if part is not None else None
    except (InvalidArgumentError, TypeError) as err:
        raise MalformedInputError(f"{path}: {err}") from err
    return batch, partition


def _as_pmm(array: np.ndarray) -> np.ndarray:
    """Weights become ``in x out x 1`` rasters, biases ``1 x out x 1``."""

    return np.atleast_2d(array)[:, :, np.newaxis]


def save_parameters(directory: PathLike, model: DualEncoder) -> Path:
    """Write every parameter array as PMM with a JSON manifest.

    Values are stored as 32-bit floats.

    Returns:
        Path: The manifest path
    """

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest: Dict[str, dict] = {}
    for name, branch in model.branches.items():
        arrays = []
        for index, array in enumerate(branch.parameters()):
            filename = f"{name}_{index:02d}.pmm"
            write_pmm(directory / filename, _as_pmm(array))
            arrays.append({"file": filename, "shape": list(array.shape)})
        manifest[name] = {
            "input_dim": branch.input_dim,
            "spec": dataclasses.asdict(branch.spec),
            "arrays": arrays,
        }
    path = directory / PARAMETER_MANIFEST
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return path


def load_parameters(directory: PathLike) -> DualEncoder:
    """Rebuild a dual encoder saved by :func:`save_parameters`."""

    directory = Path(directory)
    manifest = _read_json(directory / PARAMETER_MANIFEST)
    branches = {}
    for name, entry in manifest.items():
        try:
            spec = EncoderSpec.from_dict(entry["spec"])
            branch = ModalityBranch(
                int(entry["input_dim"]), spec, np.random.default_rng(0)
            )
            arrays = [
                read_pmm(directory / item["file"], channels=1).reshape(item["shape"])
                for item in entry["arrays"]
            ]
            branch.load(arrays)
        except (KeyError, ValueError) as err:
            raise MalformedInputError(
                f"{directory}: invalid parameters ({err})"
            ) from err
        branches[name] = branch
    return DualEncoder(branches)
