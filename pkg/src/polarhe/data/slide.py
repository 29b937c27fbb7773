"""Slide pipeline dataclass module."""

import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from polarhe.exceptions import InvalidArgumentError

PATCH_SIZE = 224
# (width, height) of the common frame the paired slides are resampled into
FRAME_SIZE = (2304, 1296)


@dataclass(frozen=True)
class GrayImage:
    """Single-channel image with intensities in [0, 1].

    Attributes:
        pixels (np.ndarray): Array of shape ``(height, width)``, row-major
    """

    pixels: np.ndarray

    def __post_init__(self) -> None:
        pixels = np.array(self.pixels, dtype=np.float64, copy=True)
        if pixels.ndim != 2 or min(pixels.shape) < 1:
            raise InvalidArgumentError(
                f"A gray image must be a non-empty 2-D array, got shape {pixels.shape}."
            )
        if not np.all(np.isfinite(pixels)):
            raise InvalidArgumentError("Gray image intensities must be finite.")
        pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def center(self) -> Tuple[float, float]:
        return ((self.width - 1) / 2.0, (self.height - 1) / 2.0)


@dataclass(frozen=True)
class RigidTransform:
    """Similarity transform mapping reference-frame points to the moving frame.

    A point ``p`` maps to ``scale * R(rotation) (p - center) + center + translation``.
    Warping the reference image by this transform reproduces the moving image.

    Attributes:
        rotation (float): Counter-clockwise angle in radians, in (-pi, pi]
        translation (tuple): ``(dx, dy)`` in pixels
        scale (float): Isotropic scale factor, strictly positive
        center (tuple): ``(x, y)`` rotation and scaling center in pixels
    """

    rotation: float = 0.0
    translation: Tuple[float, float] = (0.0, 0.0)
    scale: float = 1.0
    center: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if not self.scale > 0:
            raise InvalidArgumentError("Transform scale must be positive.")
        # wrap the angle into (-pi, pi]
        rotation = math.atan2(math.sin(self.rotation), math.cos(self.rotation))
        if rotation == -math.pi:
            rotation = math.pi
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", tuple(map(float, self.translation)))
        object.__setattr__(self, "center", tuple(map(float, self.center)))

    @classmethod
    def identity(cls, center: Tuple[float, float] = (0.0, 0.0)) -> "RigidTransform":
        return cls(center=center)

    @property
    def linear(self) -> np.ndarray:
        """The 2x2 matrix ``scale * R(rotation)`` acting on ``(x, y)``."""

        if self.rotation == 0.0:
            return np.eye(2) * self.scale
        cos, sin = math.cos(self.rotation), math.sin(self.rotation)
        return self.scale * np.array([[cos, -sin], [sin, cos]])

    @property
    def offset(self) -> np.ndarray:
        """Offset ``b`` of the affine form ``A p + b``."""

        center = np.asarray(self.center)
        return np.asarray(self.translation) + (center - self.linear @ center)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map ``(..., 2)`` points given as ``(x, y)``."""

        return np.asarray(points, dtype=float) @ self.linear.T + self.offset

    def apply_inverse(self, points: np.ndarray) -> np.ndarray:
        inv = np.linalg.inv(self.linear)
        return (np.asarray(points, dtype=float) - self.offset) @ inv.T

    def inverse(self) -> "RigidTransform":
        """The transform undoing this one, about the same center."""

        scale = 1.0 / self.scale
        inverse = RigidTransform(
            rotation=-self.rotation, scale=scale, center=self.center
        )
        # pick the translation so that inverse(apply(p)) == p
        origin = self.apply(np.asarray(self.center))
        target = np.asarray(self.center)
        shift = target - inverse.apply(origin)
        return RigidTransform(
            rotation=-self.rotation,
            translation=(float(shift[0]), float(shift[1])),
            scale=scale,
            center=self.center,
        )


@dataclass(frozen=True)
class RegistrationBounds:
    """Search space of the rigid registration.

    Attributes:
        max_rotation (float): Largest absolute rotation searched, in degrees
        rotation_step (float): Coarse-grid rotation step, in degrees
        min_scale (float): Smallest scale searched
        max_scale (float): Largest scale searched
        scale_step (float): Coarse-grid scale step
        max_shift (int): Largest absolute translation per axis, in pixels
    """

    max_rotation: float = 12.0
    rotation_step: float = 1.0
    min_scale: float = 0.94
    max_scale: float = 1.06
    scale_step: float = 0.02
    max_shift: int = 64

    def __post_init__(self) -> None:
        if self.max_rotation < 0 or not self.rotation_step > 0:
            raise InvalidArgumentError("Invalid rotation search bounds.")
        if not 0 < self.min_scale <= self.max_scale or not self.scale_step > 0:
            raise InvalidArgumentError("Invalid scale search bounds.")
        if self.max_shift < 0:
            raise InvalidArgumentError("max_shift must be non-negative.")

    def rotations(self) -> np.ndarray:
        """Coarse rotation grid in radians, ordered by increasing magnitude."""

        n = int(math.floor(self.max_rotation / self.rotation_step + 1e-9))
        degrees = [0.0]
        for k in range(1, n + 1):
            degrees.extend([-k * self.rotation_step, k * self.rotation_step])
        return np.deg2rad(degrees)

    def scales(self) -> np.ndarray:
        n = int(math.floor((self.max_scale - self.min_scale) / self.scale_step + 1e-9))
        return self.min_scale + self.scale_step * np.arange(n + 1)


@dataclass(frozen=True)
class TissueMask:
    """Foreground mask of a slide image.

    Attributes:
        mask (np.ndarray): Boolean ``(height, width)`` array, True on tissue
        threshold (float): Otsu threshold on the [0, 1]-rescaled intensities
        degenerate (bool): Whether the intensity histogram was single-valued
    """

    mask: np.ndarray = field(repr=False)
    threshold: float = float("nan")
    degenerate: bool = False

    @property
    def fraction(self) -> float:
        return float(np.mean(self.mask))


@dataclass
class TileGrid:
    """Sliding-window patch layout in the reference frame.

    Attributes:
        patch_size (int): Side length of each square patch
        stride (int): Window step in pixels
        origins (list): ``(x, y)`` top-left corner of every window
        tissue_fractions (list): Fraction of tissue pixels in every window
        tissue_flags (list): Whether each window is kept
    """

    patch_size: int = PATCH_SIZE
    stride: int = PATCH_SIZE
    origins: List[Tuple[int, int]] = field(default_factory=list)
    tissue_fractions: List[float] = field(default_factory=list)
    tissue_flags: List[bool] = field(default_factory=list)

    @property
    def kept_origins(self) -> List[Tuple[int, int]]:
        return [o for o, keep in zip(self.origins, self.tissue_flags) if keep]

    @property
    def num_kept(self) -> int:
        return int(sum(self.tissue_flags))

    @property
    def num_total(self) -> int:
        return len(self.origins)


@dataclass(frozen=True)
class PatchRecord:
    """One manifest line of an extracted patch."""

    origin_x: int
    origin_y: int
    modality: str
    path: str
    tissue_fraction: float

    def as_dict(self) -> dict:
        return {
            "origin_x": self.origin_x,
            "origin_y": self.origin_y,
            "modality": self.modality,
            "path": self.path,
            "tissue_fraction": self.tissue_fraction,
        }
