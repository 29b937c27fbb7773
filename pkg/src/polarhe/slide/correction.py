"""Illumination flat-field correction."""

import logging

import numpy as np
from scipy import ndimage

from polarhe.data.slide import GrayImage
from polarhe.exceptions import InvalidArgumentError

logger = logging.getLogger(__name__)


def flat_field_correct(img: GrayImage, window: int = 64) -> GrayImage:
    """Remove smooth illumination gain and normalise brightness.

    The illumination is estimated by a ``window x window`` local mean; the
    image is divided by it and rescaled so the global mean is preserved up to
    the final clamping.

    Args:
        img (GrayImage): Input image
        window (int): Side of the local-mean window in pixels

    Returns:
        GrayImage: The corrected image, clamped to [0, 1]

    Raises:
        InvalidArgumentError: If the image is all zeros
    """

    if window < 1:
        raise InvalidArgumentError("The flat-field window must be at least 1 pixel.")
    pixels = img.pixels
    mean = float(pixels.mean())
    if not np.any(pixels):
        raise InvalidArgumentError("Cannot flat-field correct an all-zero image.")

    illumination = ndimage.uniform_filter(pixels, size=window, mode="reflect")
    safe = np.where(illumination > 0, illumination, 1.0)
    corrected = np.where(illumination > 0, pixels / safe, 0.0)
    corrected_mean = float(corrected.mean())
    if corrected_mean > 0:
        corrected *= mean / corrected_mean
    logger.debug(
        "flat-field gain range [%.4f, %.4f]", illumination.min(), illumination.max()
    )
    return GrayImage(np.clip(corrected, 0.0, 1.0))
