"""Otsu tissue segmentation."""

import logging

import numpy as np
from scipy import ndimage
from skimage.filters import threshold_otsu

from polarhe.data.slide import GrayImage, TissueMask

logger = logging.getLogger(__name__)

# 3x3 structuring element of the speckle-removing opening
OPENING_ELEMENT = np.ones((3, 3), dtype=bool)


def tissue_mask(img: GrayImage, nbins: int = 256) -> TissueMask:
    """Separate tissue from bright background.

    Intensities are rescaled to [0, 1], thresholded with Otsu's method and the
    darker class is kept as tissue, followed by a 3x3 morphological opening.

    Args:
        img (GrayImage): Brightfield-like image, tissue darker than background
        nbins (int): Histogram bins of the Otsu threshold

    Returns:
        TissueMask: The mask, its threshold and a degeneracy flag; a
        single-valued image gives an all-false degenerate mask
    """

    pixels = img.pixels
    lo, hi = float(pixels.min()), float(pixels.max())
    if hi <= lo:
        logger.warning("Single-valued image histogram, no tissue selected")
        return TissueMask(
            mask=np.zeros(pixels.shape, dtype=bool), threshold=lo, degenerate=True
        )

    scaled = (pixels - lo) / (hi - lo)
    threshold = float(threshold_otsu(scaled, nbins=nbins))
    mask = ndimage.binary_opening(scaled <= threshold, structure=OPENING_ELEMENT)
    logger.info("tissue threshold %.4f, tissue fraction %.4f", threshold, mask.mean())
    return TissueMask(mask=mask, threshold=threshold, degenerate=False)
