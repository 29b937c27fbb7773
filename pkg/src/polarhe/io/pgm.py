"""Binary PGM (P5) grayscale images."""

import io
from pathlib import Path
from typing import Tuple, Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from polarhe.data.slide import GrayImage
from polarhe.exceptions import InvalidArgumentError, MalformedInputError

PathLike = Union[str, Path]

# Pillow modes of 8- and 16-bit grayscale PGM payloads
_MAXVAL = {"L": 255, "I;16": 65535, "I;16B": 65535, "I": 65535}


def encode_pgm(raster: np.ndarray) -> bytes:
    """Serialise an ``H x W`` ``uint8`` raster."""

    raster = np.asarray(raster)
    if raster.ndim != 2 or raster.dtype != np.uint8:
        raise InvalidArgumentError("PGM rasters must be 2-D uint8 arrays.")
    buffer = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(raster)).save(buffer, format="PPM")
    return buffer.getvalue()


def decode_pgm(buffer: bytes) -> Tuple[np.ndarray, int]:
    """Parse a P5 stream into raw ``H x W`` samples and the maxval.

    Samples are 8-bit for ``maxval < 256`` and 16-bit otherwise.

    Raises:
        MalformedInputError: If the stream is not a complete binary PGM
    """

    if not buffer.startswith(b"P5"):
        raise MalformedInputError("not a binary PGM (P5) stream")
    try:
        with Image.open(io.BytesIO(buffer), formats=["PPM"]) as image:
            image.load()
            mode = image.mode
            samples = np.array(image)
    except (UnidentifiedImageError, OSError, ValueError) as err:
        raise MalformedInputError(f"unreadable PGM stream: {err}") from err
    if mode not in _MAXVAL:
        raise MalformedInputError(f"unsupported PGM sample mode {mode}")
    return samples.astype(np.uint16 if _MAXVAL[mode] > 255 else np.uint8), _MAXVAL[mode]


def read_pgm(path: PathLike) -> GrayImage:
    """Read a P5 file as a gray image with intensities in [0, 1]."""

    samples, maxval = decode_pgm(Path(path).read_bytes())
    return GrayImage(np.minimum(samples / float(maxval), 1.0))


def to_raster(img: GrayImage) -> np.ndarray:
    """Quantise [0, 1] intensities to 8 bits."""

    return np.rint(np.clip(img.pixels, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_pgm(path: PathLike, image: Union[GrayImage, np.ndarray]) -> Path:
    """Write a gray image or an 8-bit raster as P5."""

    raster = to_raster(image) if isinstance(image, GrayImage) else image
    path = Path(path)
    path.write_bytes(encode_pgm(raster))
    return path
