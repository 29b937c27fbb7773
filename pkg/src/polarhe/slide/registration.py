"""Similarity-transform registration and resampling."""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Tuple, TypeVar, Union

import numpy as np
from scipy import ndimage
from scipy.signal import fftconvolve

from polarhe.data.mueller import MuellerImage
from polarhe.data.slide import FRAME_SIZE, GrayImage, RegistrationBounds, RigidTransform
from polarhe.exceptions import RegistrationError

logger = logging.getLogger(__name__)

Image = TypeVar("Image", GrayImage, MuellerImage)

# source coordinates this close outside the image still count as covered
COVERAGE_TOL = 1e-6
# candidates overlapping less than this fraction of the moving image score -1
MIN_OVERLAP = 0.25
# per-pixel variance below which an overlap counts as constant
VARIANCE_TOL = 1e-10
# finest hill-climbing steps for (rotation, scale, dx, dy)
MIN_STEPS = np.array([np.deg2rad(0.01), 1e-4, 0.01, 0.01])
MAX_CLIMB_ITERATIONS = 500


def _size(img: Union[GrayImage, MuellerImage]) -> Tuple[int, int]:
    return img.width, img.height


def resample(
    img: Image,
    transform: RigidTransform,
    out_size: Tuple[int, int] = FRAME_SIZE,
) -> Tuple[Image, np.ndarray]:
    """Warp an image forward by ``transform`` with bilinear interpolation.

    Output pixel ``q`` takes the value of the input at ``transform^-1(q)``.
    Mueller images are warped channel by channel with the same coordinates.

    Args:
        img (GrayImage or MuellerImage): Source image
        transform (RigidTransform): Map from source to output coordinates
        out_size (tuple): Output ``(width, height)``

    Returns:
        tuple: The warped image of the same kind and a boolean coverage mask,
        False (and value 0) where the source footprint does not reach
    """

    width, height = out_size
    ys, xs = np.mgrid[0:height, 0:width].astype(float)
    source = transform.apply_inverse(np.stack([xs, ys], axis=-1))
    src_x, src_y = source[..., 0], source[..., 1]
    coverage = (
        (src_x >= -COVERAGE_TOL)
        & (src_x <= img.width - 1 + COVERAGE_TOL)
        & (src_y >= -COVERAGE_TOL)
        & (src_y <= img.height - 1 + COVERAGE_TOL)
    )
    coordinates = np.stack([src_y, src_x])

    def warp(channel: np.ndarray) -> np.ndarray:
        out = ndimage.map_coordinates(channel, coordinates, order=1, mode="nearest")
        out[~coverage] = 0.0
        return out

    if isinstance(img, MuellerImage):
        channels = [warp(img.data[:, :, c]) for c in range(16)]
        return MuellerImage(np.stack(channels, axis=-1)), coverage
    return GrayImage(warp(img.pixels)), coverage


def ncc(a: np.ndarray, b: np.ndarray, mask: Optional[np.ndarray] = None) -> float:
    """Normalised cross-correlation of two images over ``mask``.

    Returns:
        float: Pearson correlation of the masked pixels, 0 when either side
        is constant
    """

    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if mask is not None:
        a, b = a[mask], b[mask]
    if a.size < 2:
        return 0.0
    a = a - a.mean()
    b = b - b.mean()
    denom = np.sqrt(np.sum(a * a) * np.sum(b * b))
    if denom == 0:
        return 0.0
    return float(np.sum(a * b) / denom)


def _xcorr(image: np.ndarray, template: np.ndarray) -> np.ndarray:
    return fftconvolve(image, template[::-1, ::-1], mode="full")


def _peak_shift(
    moving: np.ndarray,
    warped: np.ndarray,
    coverage: np.ndarray,
    max_shift: int,
    min_overlap: float,
) -> Tuple[float, float]:
    """Translation ``t`` maximising the NCC of ``moving(q)`` and ``warped(q - t)``.

    The correlation at every shift is normalised over the overlap of the
    moving frame and the shifted coverage only, so uncovered pixels and the
    shrinking overlap at large shifts do not bias the peak.
    """

    if not coverage.any():
        return 0.0, 0.0
    mask = coverage.astype(float)
    ones = np.ones_like(moving, dtype=float)
    a = moving - moving.mean()
    b = np.where(coverage, warped - warped[coverage].mean(), 0.0)

    count = np.round(_xcorr(ones, mask))
    sum_a = _xcorr(a, mask)
    sum_b = _xcorr(ones, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        var_a = _xcorr(a * a, mask) - sum_a**2 / count
        var_b = _xcorr(ones, b * b) - sum_b**2 / count
        covariance = _xcorr(a, b) - sum_a * sum_b / count
        score = covariance / np.sqrt(var_a * var_b)

    ty = np.arange(count.shape[0]) - (warped.shape[0] - 1)
    tx = np.arange(count.shape[1]) - (warped.shape[1] - 1)
    allowed = (
        (np.abs(ty) <= max_shift)[:, None]
        & (np.abs(tx) <= max_shift)[None, :]
        & (count >= max(min_overlap, 2.0))
        & (var_a > VARIANCE_TOL * count)
        & (var_b > VARIANCE_TOL * count)
        & np.isfinite(score)
    )
    if not allowed.any():
        return 0.0, 0.0
    score = np.where(allowed, score, -np.inf)
    iy, ix = np.unravel_index(np.argmax(score), score.shape)
    return float(tx[ix]), float(ty[iy])


class _Objective:
    """NCC between the moving image and the transformed reference."""

    def __init__(self, moving: GrayImage, reference: GrayImage) -> None:
        self.moving = moving
        self.reference = reference
        self.center = reference.center
        self.min_overlap = MIN_OVERLAP * moving.pixels.size

    def transform(self, params: np.ndarray) -> RigidTransform:
        rotation, scale, dx, dy = params
        return RigidTransform(
            rotation=float(rotation),
            translation=(float(dx), float(dy)),
            scale=float(scale),
            center=self.center,
        )

    def score(self, params: np.ndarray) -> float:
        warped, coverage = resample(
            self.reference, self.transform(params), _size(self.moving)
        )
        if np.count_nonzero(coverage) < self.min_overlap:
            return -1.0
        return ncc(self.moving.pixels, warped.pixels, coverage)

    def candidate(self, rotation: float, scale: float, max_shift: int) -> np.ndarray:
        """Best translation of one coarse (rotation, scale) pair, with its score."""

        base = np.array([rotation, scale, 0.0, 0.0])
        warped, coverage = resample(
            self.reference, self.transform(base), _size(self.moving)
        )
        dx, dy = _peak_shift(
            self.moving.pixels, warped.pixels, coverage, max_shift, self.min_overlap
        )
        params = np.array([rotation, scale, dx, dy])
        return np.append(params, self.score(params))


def _search_box(bounds: RegistrationBounds) -> Tuple[np.ndarray, np.ndarray]:
    """Lower and upper limits of (rotation, scale, dx, dy)."""

    rotation = np.deg2rad(bounds.max_rotation)
    shift = float(bounds.max_shift)
    lower = np.array([-rotation, bounds.min_scale, -shift, -shift])
    upper = np.array([rotation, bounds.max_scale, shift, shift])
    return lower, upper


def _hill_climb(
    objective: _Objective,
    params: np.ndarray,
    score: float,
    steps: np.ndarray,
    box: Tuple[np.ndarray, np.ndarray],
) -> Tuple[np.ndarray, float]:
    """Coordinate-wise ascent with step halving, confined to ``box``."""

    lower, upper = box
    steps = steps.copy()
    for _ in range(MAX_CLIMB_ITERATIONS):
        improved = False
        for k in range(params.size):
            for sign in (1.0, -1.0):
                trial = params.copy()
                trial[k] += sign * steps[k]
                if trial[k] < lower[k] or trial[k] > upper[k]:
                    continue
                trial_score = objective.score(trial)
                if trial_score > score + 1e-12:
                    params, score, improved = trial, trial_score, True
                    break
            if improved:
                break
        if not improved:
            steps /= 2.0
            if np.all(steps < MIN_STEPS):
                break
    return params, score


def register_rigid(
    moving: GrayImage,
    reference: GrayImage,
    bounds: Optional[RegistrationBounds] = None,
    floor: float = 0.2,
    threads: int = 1,
) -> RigidTransform:
    """Find the similarity transform aligning ``reference`` onto ``moving``.

    A coarse grid over rotation and scale is searched, each candidate's
    translation taken from the peak of the overlap-normalised cross-correlation;
    the best candidate by NCC (ties to the smallest rotation, then the smallest
    shift) is refined by hill climbing inside the same bounds. The returned
    transform maps reference-frame points to moving-frame points about the
    reference center, so ``resample(moving, T.inverse(), size)`` brings the
    moving image into the reference frame.

    Args:
        moving (GrayImage): Image to be aligned
        reference (GrayImage): Registration reference
        bounds (RegistrationBounds, optional): Search space
        floor (float): Minimum acceptable NCC
        threads (int): Worker threads scoring the coarse candidates

    Returns:
        RigidTransform: The best transform found

    Raises:
        RegistrationError: If the best NCC is below ``floor``
    """

    bounds = bounds if bounds is not None else RegistrationBounds()
    objective = _Objective(moving, reference)
    grid = [(r, s) for r in bounds.rotations() for s in bounds.scales()]

    # coarse search
    def evaluate(cell: Tuple[float, float]) -> np.ndarray:
        return objective.candidate(cell[0], cell[1], bounds.max_shift)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            candidates: List[np.ndarray] = list(pool.map(evaluate, grid))
    else:
        candidates = [evaluate(cell) for cell in grid]
    best = min(
        candidates,
        key=lambda c: (-c[4], abs(c[0]), abs(c[2]) + abs(c[3])),
    )
    logger.info(
        "coarse registration rotation=%.2f deg scale=%.3f shift=(%.1f, %.1f) ncc=%.4f",
        np.rad2deg(best[0]),
        best[1],
        best[2],
        best[3],
        best[4],
    )

    # local refinement
    steps = np.array(
        [np.deg2rad(bounds.rotation_step) / 2, bounds.scale_step / 2, 0.5, 0.5]
    )
    params, score = _hill_climb(
        objective, best[:4], float(best[4]), steps, _search_box(bounds)
    )
    if score < floor:
        raise RegistrationError(score, floor)
    transform = objective.transform(params)
    logger.info(
        "registered rotation=%.3f deg scale=%.4f shift=(%.2f, %.2f) ncc=%.4f",
        np.rad2deg(transform.rotation),
        transform.scale,
        transform.translation[0],
        transform.translation[1],
        score,
    )
    return transform
