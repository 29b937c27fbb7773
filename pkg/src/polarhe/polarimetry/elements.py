"""Mueller algebra and ideal optical elements."""

from typing import Optional, Sequence

import numpy as np

from polarhe.data.mueller import MuellerMatrix, StokesVector, ValidityReport
from polarhe.exceptions import InvalidArgumentError
from polarhe.polarimetry.kernels import OK, validate_kernel

# human-readable reasons of failed validity checks
VALIDITY_MESSAGES = {
    1: "non-finite entries",
    2: "zero transmittance",
    3: "unphysical output",
}


def mueller_apply(m: MuellerMatrix, s: StokesVector) -> StokesVector:
    """Propagate a Stokes vector through an optical element.

    Args:
        m (MuellerMatrix): The element
        s (StokesVector): The incoming beam

    Returns:
        StokesVector: The outgoing beam ``m . s``
    """

    vector = s.to_array()
    if not (m.is_finite() and np.all(np.isfinite(vector))):
        raise InvalidArgumentError("Mueller matrix and Stokes vector must be finite.")
    return StokesVector.from_array(m.m @ vector)


def validate_mueller(m: MuellerMatrix, tol: float = 1e-9) -> ValidityReport:
    """Check that ``m`` maps physical light to physical light.

    The check requires a positive transmittance and probes the element with
    unpolarized light and the six poles of the Poincare sphere.

    Args:
        m (MuellerMatrix): The matrix to check
        tol (float): Absolute tolerance on the normalised outputs

    Returns:
        ValidityReport: ``valid`` plus the reason and probe of the first failure
    """

    if not tol > 0:
        raise InvalidArgumentError("The validation tolerance must be positive.")
    code, probe = validate_kernel(np.ascontiguousarray(m.m), tol)
    if code == OK:
        return ValidityReport(valid=True)
    return ValidityReport(
        valid=False,
        reason=VALIDITY_MESSAGES[code],
        probe_index=int(probe) if probe >= 0 else None,
    )


def rotation_matrix(theta: float) -> MuellerMatrix:
    """Mueller rotation of the polarization frame by ``theta`` radians."""

    cos, sin = np.cos(2 * theta), np.sin(2 * theta)
    return MuellerMatrix(
        np.array(
            [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, cos, sin, 0.0],
                [0.0, -sin, cos, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ]
        )
    )


def rotate_element(m: MuellerMatrix, theta: float) -> MuellerMatrix:
    """Rotate an element about the beam axis, ``R(-theta) . M . R(theta)``."""

    return rotation_matrix(-theta) @ m @ rotation_matrix(theta)


def linear_retarder(axis: float, retardance: float) -> MuellerMatrix:
    """Ideal linear retarder.

    Args:
        axis (float): Fast-axis angle from the horizontal in radians
        retardance (float): Phase delay in radians

    Returns:
        MuellerMatrix: The retarder
    """

    c2, s2 = np.cos(2 * axis), np.sin(2 * axis)
    cr, sr = np.cos(retardance), np.sin(retardance)
    m = np.zeros((4, 4))
    m[0, 0] = 1.0
    m[1, 1] = c2**2 + cr * s2**2
    m[1, 2] = (1 - cr) * c2 * s2
    m[1, 3] = -sr * s2
    m[2, 1] = m[1, 2]
    m[2, 2] = cr * c2**2 + s2**2
    m[2, 3] = c2 * sr
    m[3, 1] = -m[1, 3]
    m[3, 2] = -m[2, 3]
    m[3, 3] = cr
    return MuellerMatrix(m)


def linear_polarizer(axis: float) -> MuellerMatrix:
    """Ideal linear polarizer with its transmission axis at ``axis`` radians."""

    c2, s2 = np.cos(2 * axis), np.sin(2 * axis)
    row = np.array([1.0, c2, s2, 0.0])
    return MuellerMatrix(0.5 * np.outer(row, row))


def partial_depolarizer(a: float, b: float, c: float) -> MuellerMatrix:
    """Diagonal depolarizer ``diag(1, a, b, c)``, each factor in [-1, 1]."""

    factors = np.array([a, b, c], dtype=float)
    if np.any(np.abs(factors) > 1):
        raise InvalidArgumentError("Depolarizer factors must lie in [-1, 1].")
    return MuellerMatrix(np.diag(np.concatenate([[1.0], factors])))


def diattenuator(d_vector: Sequence[float], transmittance: float = 1.0) -> MuellerMatrix:
    """General diattenuator with diattenuation vector ``d_vector``.

    Args:
        d_vector (sequence): The three components of ``D``, ``|D| <= 1``
        transmittance (float): Unpolarized transmittance, strictly positive

    Returns:
        MuellerMatrix: The diattenuator
    """

    d = np.asarray(d_vector, dtype=float).reshape(3)
    norm = float(np.linalg.norm(d))
    if norm > 1:
        raise InvalidArgumentError("The diattenuation vector must have norm at most 1.")
    if not transmittance > 0:
        raise InvalidArgumentError("Transmittance must be positive.")
    root = np.sqrt(1 - norm**2)
    block = root * np.eye(3)
    if norm > 0:
        block += (1 - root) * np.outer(d, d) / norm**2
    m = np.zeros((4, 4))
    m[0, 0] = 1.0
    m[0, 1:] = d
    m[1:, 0] = d
    m[1:, 1:] = block
    return MuellerMatrix(transmittance * m)


def random_physical_mueller(
    rng: np.random.Generator, max_diattenuation: Optional[float] = 0.6
) -> MuellerMatrix:
    """Draw a physically valid matrix as depolarizer . retarder . diattenuator.

    Args:
        rng (np.random.Generator): Source of randomness
        max_diattenuation (float, optional): Bound on ``|D|``; ``None`` gives a
            pure depolarizer-retarder pair

    Returns:
        MuellerMatrix: A matrix with transmittance in [0.2, 1]
    """

    depolarizer = partial_depolarizer(*rng.uniform(0.3, 1.0, size=3))
    retarder = linear_retarder(rng.uniform(-np.pi / 2, np.pi / 2), rng.uniform(0, np.pi))
    # tilt the retarder out of the linear plane half of the time
    if rng.random() < 0.5:
        tilt = linear_retarder(0.0, rng.uniform(0, 0.5))
        retarder = rotate_element(retarder, rng.uniform(-np.pi, np.pi)) @ tilt
    m = depolarizer @ retarder
    if max_diattenuation is not None:
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        magnitude = rng.uniform(0, max_diattenuation)
        m = m @ diattenuator(magnitude * direction)
    return MuellerMatrix(rng.uniform(0.2, 1.0) * m.m)
