"""Polar decomposition of Mueller matrices and derived optical properties."""

from typing import Tuple

import numpy as np

from polarhe.data.mueller import MuellerMatrix
from polarhe.exceptions import DecompositionError
from polarhe.polarimetry.kernels import (
    OK,
    REASON_CODES,
    decompose_kernel,
    properties_kernel,
)


def _decompose(m: MuellerMatrix) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    code, md, mr, mdelta = decompose_kernel(np.ascontiguousarray(m.m))
    if code != OK:
        raise DecompositionError(REASON_CODES[code])
    return mdelta, mr, md


def lu_chipman_decompose(
    m: MuellerMatrix,
) -> Tuple[MuellerMatrix, MuellerMatrix, MuellerMatrix]:
    """Factor ``m / m[0][0]`` into depolarizer, retarder and diattenuator.

    The factors satisfy ``m / m[0][0] = m_depol . m_ret . m_diatten``; the
    retarder block is a proper rotation.

    Args:
        m (MuellerMatrix): A physically valid Mueller matrix

    Returns:
        tuple: ``(m_depol, m_ret, m_diatten)``

    Raises:
        DecompositionError: If ``m`` fails validation, has ``|D| >= 1`` or a
            singular intermediate
    """

    mdelta, mr, md = _decompose(m)
    return MuellerMatrix(mdelta), MuellerMatrix(mr), MuellerMatrix(md)


def derive_properties(m: MuellerMatrix) -> Tuple[float, float, float]:
    """Retardance, fast-axis orientation and depolarization power of ``m``.

    Args:
        m (MuellerMatrix): A physically valid Mueller matrix

    Returns:
        tuple: ``(retardance, fast_axis, depolarization)`` with retardance in
        [0, pi], fast axis in [-pi/2, pi/2) and depolarization in [0, 1]
    """

    retardance, fast_axis, depolarization, _ = derive_all_properties(m)
    return retardance, fast_axis, depolarization


def derive_all_properties(m: MuellerMatrix) -> Tuple[float, float, float, float]:
    """As :func:`derive_properties`, also returning the diattenuation ``|D|``."""

    mdelta, mr, md = _decompose(m)
    retardance, fast_axis, depolarization, diattenuation = properties_kernel(
        md, mr, mdelta
    )
    return (
        float(retardance),
        float(fast_axis),
        float(depolarization),
        float(diattenuation),
    )
