"""Polarimetry dataclass module."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from polarhe.exceptions import InvalidArgumentError


def _frozen(array: np.ndarray, dtype: type = np.float64) -> np.ndarray:
    """Return a read-only contiguous copy of ``array``."""

    out = np.array(array, dtype=dtype, copy=True, order="C")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class StokesVector:
    """Stokes vector of a light beam.

    Attributes:
        s0 (float): Total intensity
        s1 (float): Horizontal minus vertical linear polarization
        s2 (float): +45 minus -45 degree linear polarization
        s3 (float): Right minus left circular polarization
    """

    s0: float
    s1: float
    s2: float
    s3: float

    @classmethod
    def from_array(cls, values: np.ndarray) -> "StokesVector":
        values = np.asarray(values, dtype=float).reshape(4)
        return cls(*(float(v) for v in values))

    def to_array(self) -> np.ndarray:
        return np.array([self.s0, self.s1, self.s2, self.s3], dtype=float)

    @property
    def degree_of_polarization(self) -> float:
        if self.s0 <= 0:
            return 0.0
        return float(np.sqrt(self.s1**2 + self.s2**2 + self.s3**2) / self.s0)

    def is_physical(self, tol: float = 1e-9) -> bool:
        """Whether ``s0 >= 0`` and the polarized part does not exceed ``s0``."""

        polarized = np.sqrt(self.s1**2 + self.s2**2 + self.s3**2)
        return bool(self.s0 >= -tol and polarized <= self.s0 + tol)


@dataclass(frozen=True)
class MuellerMatrix:
    """A 4x4 real Mueller matrix, row-major, ``m[0][0]`` the transmittance.

    Attributes:
        m (np.ndarray): The 4x4 matrix; stored as a read-only float64 copy
    """

    m: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.m, dtype=np.float64)
        if m.shape != (4, 4):
            raise InvalidArgumentError(
                f"A Mueller matrix must be 4x4, got shape {m.shape}."
            )
        object.__setattr__(self, "m", _frozen(m))

    @classmethod
    def identity(cls) -> "MuellerMatrix":
        return cls(np.eye(4))

    @property
    def transmittance(self) -> float:
        return float(self.m[0, 0])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.m)))

    def __matmul__(self, other: "MuellerMatrix") -> "MuellerMatrix":
        return MuellerMatrix(self.m @ other.m)


@dataclass(frozen=True)
class ValidityReport:
    """Outcome of a Mueller matrix physical-validity check.

    Attributes:
        valid (bool): Whether every check passed
        reason (str, optional): Reason code of the first failed check
        probe_index (int, optional): Index of the failing probe Stokes vector
    """

    valid: bool
    reason: Optional[str] = None
    probe_index: Optional[int] = None


@dataclass(frozen=True)
class MuellerImage:
    """Raster of per-pixel Mueller matrices.

    Channel ``c`` of pixel ``(x, y)`` holds ``m[c // 4][c % 4]``; pixels are
    stored row-major, so ``data`` has shape ``(height, width, 16)``.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3 or data.shape[2] != 16:
            raise InvalidArgumentError(
                f"Mueller image data must have shape (height, width, 16), got {data.shape}."
            )
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise InvalidArgumentError("Mueller image dimensions must be at least 1.")
        if not np.all(np.isfinite(data)):
            raise InvalidArgumentError("Mueller image values must be finite.")
        object.__setattr__(self, "data", _frozen(data))

    @classmethod
    def from_matrices(cls, matrices: np.ndarray) -> "MuellerImage":
        """Build from an array of shape ``(height, width, 4, 4)``."""

        matrices = np.asarray(matrices, dtype=np.float64)
        height, width = matrices.shape[:2]
        return cls(matrices.reshape(height, width, 16))

    @classmethod
    def filled(cls, m: MuellerMatrix, width: int, height: int) -> "MuellerImage":
        return cls(np.broadcast_to(m.m.reshape(16), (height, width, 16)))

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def height(self) -> int:
        return int(self.data.shape[0])


@dataclass(frozen=True)
class PolarPropertyMaps:
    """Per-pixel optical property maps derived from a Mueller image.

    Attributes:
        retardance (np.ndarray): Phase retardation in radians, in [0, pi]
        fast_axis (np.ndarray): Fast-axis orientation in radians, in [-pi/2, pi/2)
        depolarization (np.ndarray): Depolarization power in [0, 1]
        diattenuation (np.ndarray): Magnitude of the diattenuation vector in [0, 1]
        intensity (np.ndarray): Unnormalised ``m[0][0]`` per pixel
        valid_mask (np.ndarray): Pixels where decomposition succeeded; every
            other map holds the sentinel 0 where this is false
    """

    retardance: np.ndarray
    fast_axis: np.ndarray
    depolarization: np.ndarray
    diattenuation: np.ndarray
    intensity: np.ndarray
    valid_mask: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        shape = np.shape(self.valid_mask)
        for name in ("retardance", "fast_axis", "depolarization", "diattenuation"):
            if np.shape(getattr(self, name)) != shape:
                raise InvalidArgumentError(f"Map {name} does not match the mask shape.")
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        object.__setattr__(self, "intensity", _frozen(self.intensity))
        object.__setattr__(self, "valid_mask", _frozen(self.valid_mask, dtype=bool))

    @property
    def width(self) -> int:
        return int(self.valid_mask.shape[1])

    @property
    def height(self) -> int:
        return int(self.valid_mask.shape[0])
