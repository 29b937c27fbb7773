"""End-to-end preparation of a registered H&E / polarization slide pair."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from polarhe.config import PipelineConfig
from polarhe.data.mueller import MuellerImage
from polarhe.data.slide import (
    GrayImage,
    PatchRecord,
    RigidTransform,
    TileGrid,
    TissueMask,
)
from polarhe.exceptions import InvalidArgumentError
from polarhe.io.pgm import read_pgm
from polarhe.io.pmm import read_mueller_image
from polarhe.polarimetry.maps import intensity_image
from polarhe.slide.correction import flat_field_correct
from polarhe.slide.registration import register_rigid, resample
from polarhe.slide.tiling import extract_patches
from polarhe.slide.tissue import tissue_mask

logger = logging.getLogger(__name__)

# modality names used in patch file names and the patch manifest
HE_MODALITY = "he"
POLARIZATION_MODALITY = "polarization"


@dataclass
class PipelineResult:
    """Outcome of one pipeline run.

    Attributes:
        transform (RigidTransform): Map from the reference frame to the H&E frame
        tissue (TissueMask): Tissue mask of the reference image
        grid (TileGrid): Every window with its tissue fraction and keep flag
        records (list): Manifest entries of the written patches
    """

    transform: RigidTransform
    tissue: TissueMask
    grid: TileGrid
    records: List[PatchRecord] = field(default_factory=list)

    @property
    def num_kept(self) -> int:
        return self.grid.num_kept

    @property
    def num_total(self) -> int:
        return self.grid.num_total


def _fit_canvas(mask: np.ndarray, size: Tuple[int, int]) -> np.ndarray:
    """Crop or zero-pad a mask at its top-left corner to ``(width, height)``."""

    width, height = size
    out = np.zeros((height, width), dtype=bool)
    h, w = min(height, mask.shape[0]), min(width, mask.shape[1])
    out[:h, :w] = mask[:h, :w]
    return out


class SlidePipeline:
    """Flat-field, register, resample, mask and tile one slide pair.

    The polarization image is the reference frame: its ``m[0][0]``
    transmittance is the registration reference and its grid is the patch
    grid. The H&E image is registered onto it and resampled.

    Args:
        config (PipelineConfig): Inputs and settings
        threads (int): Worker threads of the registration search
    """

    def __init__(self, config: PipelineConfig, threads: int = 1) -> None:
        if threads < 1:
            raise InvalidArgumentError("threads must be at least 1.")
        self.config = config
        self.threads = threads

    def load(self) -> Tuple[MuellerImage, GrayImage]:
        """Read the Mueller image and the H&E image from disk."""

        mueller = read_mueller_image(self.config.polarization)
        he = read_pgm(self.config.he)
        logger.info(
            "loaded polarization %dx%d and H&E %dx%d",
            mueller.width,
            mueller.height,
            he.width,
            he.height,
        )
        return mueller, he

    def run(self, out_dir: Optional[Union[str, Path]] = None) -> PipelineResult:
        """Run every stage on the configured inputs."""

        mueller, he = self.load()
        return self.process(mueller, he, out_dir)

    def process(
        self,
        mueller: MuellerImage,
        he: GrayImage,
        out_dir: Optional[Union[str, Path]] = None,
    ) -> PipelineResult:
        """Run every stage on in-memory images.

        Args:
            mueller (MuellerImage): Polarization image, the reference frame
            he (GrayImage): H&E grayscale image
            out_dir (path, optional): Where patches and their manifest go

        Returns:
            PipelineResult: The transform, the mask and the patch layout

        Raises:
            RegistrationError: If the H&E image cannot be aligned
        """

        cfg = self.config
        out_size = cfg.out_size

        intensity = intensity_image(mueller)
        reference = flat_field_correct(intensity, cfg.flat_field_window)
        moving = flat_field_correct(he, cfg.flat_field_window)
        # tissue is segmented on the uncorrected intensity
        tissue = tissue_mask(intensity)

        if not tissue.mask.any():
            logger.warning("No tissue in the reference image, registration skipped")
            transform = RigidTransform.identity(center=reference.center)
        else:
            transform = register_rigid(
                moving, reference, cfg.bounds, cfg.floor, threads=self.threads
            )

        # bring both modalities into the reference frame at the output size
        identity = RigidTransform.identity()
        he_out, he_coverage = resample(moving, transform.inverse(), out_size)
        mueller_out, mueller_coverage = resample(mueller, identity, out_size)
        mask = _fit_canvas(tissue.mask, out_size) & he_coverage & mueller_coverage
        logger.info("tissue covers %.4f of the common frame", mask.mean())

        grid, records = extract_patches(
            {HE_MODALITY: he_out, POLARIZATION_MODALITY: mueller_out},
            mask,
            out_dir,
            patch_size=cfg.patch_size,
            stride=cfg.stride,
            min_tissue_fraction=cfg.min_tissue_fraction,
        )
        return PipelineResult(transform, tissue, grid, records)
