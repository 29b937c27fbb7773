"""PMM raster container.

A PMM stream is the magic ``PMM1``, then little-endian ``u32`` width, height
and channel count, then ``width * height * channels`` little-endian ``f32``
values, row-major pixels with the channel index fastest.
"""

from pathlib import Path
from typing import Optional, Union

import numpy as np

from polarhe.data.mueller import MuellerImage
from polarhe.exceptions import InvalidArgumentError, MalformedInputError

MAGIC = b"PMM1"
HEADER_DTYPE = np.dtype("<u4")
DATA_DTYPE = np.dtype("<f4")
MUELLER_CHANNELS = 16

PathLike = Union[str, Path]


def encode_pmm(array: np.ndarray) -> bytes:
    """Serialise a ``(height, width, channels)`` array."""

    array = np.asarray(array)
    if array.ndim != 3 or min(array.shape) < 1:
        raise InvalidArgumentError(
            f"PMM payloads are non-empty (height, width, channels) arrays, got {array.shape}."
        )
    height, width, channels = array.shape
    header = np.array([width, height, channels], dtype=HEADER_DTYPE)
    payload = np.ascontiguousarray(array, dtype=DATA_DTYPE)
    return MAGIC + header.tobytes() + payload.tobytes()


def decode_pmm(buffer: bytes, channels: Optional[int] = MUELLER_CHANNELS) -> np.ndarray:
    """Parse a PMM stream.

    Args:
        buffer (bytes): The complete stream
        channels (int, optional): Required channel count; any count is
            accepted when ``None``

    Returns:
        np.ndarray: ``(height, width, channels)`` float64 array

    Raises:
        MalformedInputError: On a bad magic, a truncated or over-long stream
            or an unexpected channel count
    """

    if len(buffer) < len(MAGIC):
        raise MalformedInputError("unexpected end of PMM stream")
    if buffer[: len(MAGIC)] != MAGIC:
        raise MalformedInputError("not a PMM stream: bad magic bytes")
    offset = len(MAGIC)
    header_size = 3 * HEADER_DTYPE.itemsize
    if len(buffer) < offset + header_size:
        raise MalformedInputError("unexpected end of PMM stream")
    width, height, n_channels = (
        int(v) for v in np.frombuffer(buffer, dtype=HEADER_DTYPE, count=3, offset=offset)
    )
    offset += header_size

    if width < 1 or height < 1 or n_channels < 1:
        raise MalformedInputError(
            f"PMM dimensions must be positive, got {width}x{height}x{n_channels}"
        )
    if channels is not None and n_channels != channels:
        raise MalformedInputError(f"expected {channels} PMM channels, got {n_channels}")

    count = width * height * n_channels
    expected = offset + count * DATA_DTYPE.itemsize
    if len(buffer) < expected:
        raise MalformedInputError("unexpected end of PMM stream")
    if len(buffer) > expected:
        raise MalformedInputError("trailing bytes after PMM payload")
    data = np.frombuffer(buffer, dtype=DATA_DTYPE, count=count, offset=offset)
    return data.astype(np.float64).reshape(height, width, n_channels)


def read_pmm(path: PathLike, channels: Optional[int] = MUELLER_CHANNELS) -> np.ndarray:
    return decode_pmm(Path(path).read_bytes(), channels)


def write_pmm(path: PathLike, array: np.ndarray) -> Path:
    path = Path(path)
    path.write_bytes(encode_pmm(array))
    return path


def read_mueller_image(path: PathLike) -> MuellerImage:
    """Read a 16-channel PMM file as a Mueller image."""

    data = read_pmm(path, MUELLER_CHANNELS)
    try:
        return MuellerImage(data)
    except InvalidArgumentError as err:
        raise MalformedInputError(f"{path}: {err}") from err


def write_mueller_image(path: PathLike, img: MuellerImage) -> Path:
    return write_pmm(path, img.data)
