"""Pixel-wise property maps and their 8-bit renderings."""

import logging
from typing import Tuple

import numpy as np
from typing_extensions import Literal

from polarhe.data.mueller import MuellerImage, PolarPropertyMaps
from polarhe.data.slide import GrayImage
from polarhe.exceptions import InvalidArgumentError
from polarhe.polarimetry.kernels import image_kernel

logger = logging.getLogger(__name__)


def property_maps(img: MuellerImage) -> PolarPropertyMaps:
    """Decompose every pixel of a Mueller image.

    Pixels failing validation or decomposition are marked invalid and hold 0
    in every property map; the intensity map is filled everywhere.

    Args:
        img (MuellerImage): Source raster

    Returns:
        PolarPropertyMaps: Retardance, fast-axis, depolarization and
        diattenuation maps with the validity mask
    """

    maps, mask = image_kernel(np.ascontiguousarray(img.data))
    n_masked = int(mask.size - np.count_nonzero(mask))
    if n_masked:
        logger.warning(
            "%d of %d pixels could not be decomposed and were masked",
            n_masked,
            mask.size,
        )
    return PolarPropertyMaps(
        retardance=maps[0],
        fast_axis=maps[1],
        depolarization=maps[2],
        diattenuation=maps[3],
        intensity=img.data[:, :, 0],
        valid_mask=mask,
    )


def render_map(
    values: np.ndarray,
    value_range: Tuple[float, float],
    style: Literal["linear", "cyclic"] = "linear",
) -> np.ndarray:
    """Render a scalar map as an 8-bit grayscale raster.

    The linear style maps ``[lo, hi]`` onto ``[0, 255]`` with clamping. The
    cyclic style treats ``hi - lo`` as one period and uses a triangle wave, so
    both ends of the range render to the same level. Values mirrored about the
    middle of the range also share a level: with the fast-axis range
    ``[-pi/2, pi/2)``, ``theta`` and ``-theta`` look alike, so the rendering
    shows how far an axis is from zero but not the sign of its tilt.

    Args:
        values (np.ndarray): ``H x W`` map
        value_range (tuple): ``(lo, hi)`` with ``lo < hi``
        style (str): ``"linear"`` or ``"cyclic"``

    Returns:
        np.ndarray: ``H x W`` array of ``uint8``
    """

    lo, hi = map(float, value_range)
    if not lo < hi:
        raise InvalidArgumentError(
            f"Render range must satisfy lo < hi, got {value_range}."
        )
    fraction = (np.asarray(values, dtype=float) - lo) / (hi - lo)
    if style == "linear":
        levels = 255.0 * np.clip(fraction, 0.0, 1.0)
    elif style == "cyclic":
        phase = np.mod(fraction, 1.0)
        levels = 255.0 * (1.0 - np.abs(2.0 * phase - 1.0))
    else:
        raise InvalidArgumentError(f"Unknown render style {style!r}.")
    return np.rint(levels).astype(np.uint8)


def intensity_image(img: MuellerImage) -> GrayImage:
    """Unpolarized transmittance ``m[0][0]`` scaled to [0, 1] by its maximum."""

    m00 = np.clip(img.data[:, :, 0], 0.0, None)
    peak = float(m00.max())
    if peak <= 0:
        logger.warning("Mueller image has no positive transmittance")
        return GrayImage(np.zeros_like(m00))
    return GrayImage(m00 / peak)
