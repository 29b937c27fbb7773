"""Sliding-window patch extraction across aligned modalities."""

import json
import logging
from pathlib import Path
from typing import List, Mapping, Optional, Tuple, Union

import numpy as np

from polarhe.data.mueller import MuellerImage
from polarhe.data.slide import PATCH_SIZE, GrayImage, PatchRecord, TileGrid
from polarhe.exceptions import InvalidArgumentError
from polarhe.io.pgm import write_pgm
from polarhe.io.pmm import write_mueller_image

logger = logging.getLogger(__name__)

PATCH_MANIFEST = "patches.jsonl"

SlideImage = Union[GrayImage, MuellerImage]


def tile_grid(
    mask: np.ndarray,
    patch_size: int = PATCH_SIZE,
    stride: int = PATCH_SIZE,
    min_tissue_fraction: float = 0.1,
) -> TileGrid:
    """Lay out every window fully inside ``mask`` and flag the tissue ones.

    Windows are enumerated row by row; a window is kept iff its tissue
    fraction is at least ``min_tissue_fraction``.
    """

    if patch_size < 1 or stride < 1:
        raise InvalidArgumentError("Patch size and stride must be positive.")
    if not 0 <= min_tissue_fraction <= 1:
        raise InvalidArgumentError("min_tissue_fraction must lie in [0, 1].")
    height, width = mask.shape
    grid = TileGrid(patch_size=patch_size, stride=stride)
    for y in range(0, height - patch_size + 1, stride):
        for x in range(0, width - patch_size + 1, stride):
            fraction = float(np.mean(mask[y : y + patch_size, x : x + patch_size]))
            grid.origins.append((x, y))
            grid.tissue_fractions.append(fraction)
            grid.tissue_flags.append(fraction >= min_tissue_fraction)
    return grid


def _crop(img: SlideImage, x: int, y: int, size: int) -> SlideImage:
    if isinstance(img, MuellerImage):
        return MuellerImage(img.data[y : y + size, x : x + size])
    return GrayImage(img.pixels[y : y + size, x : x + size])


def _write_patch(
    directory: Path, modality: str, patch: SlideImage, origin: Tuple[int, int]
) -> str:
    x, y = origin
    suffix = "pmm" if isinstance(patch, MuellerImage) else "pgm"
    relative = Path(modality) / f"{modality}_x{x:05d}_y{y:05d}.{suffix}"
    target = directory / relative
    target.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(patch, MuellerImage):
        write_mueller_image(target, patch)
    else:
        write_pgm(target, patch)
    return relative.as_posix()


def extract_patches(
    images: Mapping[str, SlideImage],
    mask: np.ndarray,
    out_dir: Optional[Union[str, Path]] = None,
    patch_size: int = PATCH_SIZE,
    stride: int = PATCH_SIZE,
    min_tissue_fraction: float = 0.1,
) -> Tuple[TileGrid, List[PatchRecord]]:
    """Cut corresponding patches out of every aligned modality.

    Args:
        images (mapping): Aligned images keyed by modality name
        mask (np.ndarray): Boolean tissue mask in the same frame
        out_dir (path, optional): Where patch files and the JSON-lines
            manifest are written; nothing is written when ``None``
        patch_size (int): Side of the square patches
        stride (int): Window step
        min_tissue_fraction (float): Minimum tissue fraction of a kept patch

    Returns:
        tuple: The tile grid and one record per kept patch and modality

    Raises:
        InvalidArgumentError: If the modalities and the mask differ in size
    """

    mask = np.asarray(mask, dtype=bool)
    for name, img in images.items():
        if (img.height, img.width) != mask.shape:
            raise InvalidArgumentError(
                f"Modality {name!r} is {img.width}x{img.height} but the mask is "
                f"{mask.shape[1]}x{mask.shape[0]}."
            )
    grid = tile_grid(mask, patch_size, stride, min_tissue_fraction)

    directory = Path(out_dir) if out_dir is not None else None
    records: List[PatchRecord] = []
    for origin, fraction, keep in zip(
        grid.origins, grid.tissue_fractions, grid.tissue_flags
    ):
        if not keep:
            continue
        for name, img in images.items():
            path = ""
            if directory is not None:
                patch = _crop(img, origin[0], origin[1], patch_size)
                path = _write_patch(directory, name, patch, origin)
            records.append(PatchRecord(origin[0], origin[1], name, path, fraction))

    if directory is not None:
        directory.mkdir(parents=True, exist_ok=True)
        lines = [json.dumps(record.as_dict(), sort_keys=True) for record in records]
        (directory / PATCH_MANIFEST).write_text("".join(line + "\n" for line in lines))
    logger.info("kept %d of %d patches", grid.num_kept, grid.num_total)
    return grid, records
