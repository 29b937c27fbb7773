import math

import numba as nb
import numpy as np

# status codes returned by the kernels
OK = 0
NON_FINITE = 1
ZERO_TRANSMITTANCE = 2
UNPHYSICAL = 3
DIATTENUATION = 4
SINGULAR = 5

REASON_CODES = {
    NON_FINITE: "non_finite",
    ZERO_TRANSMITTANCE: "zero_transmittance",
    UNPHYSICAL: "unphysical",
    DIATTENUATION: "diattenuation",
    SINGULAR: "singular",
}

MIN_TRANSMITTANCE = 1e-12
VALIDATION_TOL = 1e-9
SINGULAR_TOL = 1e-12
# below this retardance the fast axis is undefined and reported as 0
AXIS_TOL = 1e-9

# unpolarized light and the six poles of the Poincare sphere
PROBES = np.array(
    [
        [1.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0],
        [1.0, -1.0, 0.0, 0.0],
        [1.0, 0.0, 1.0, 0.0],
        [1.0, 0.0, -1.0, 0.0],
        [1.0, 0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0, -1.0],
    ]
)


@nb.njit
def validate_kernel(m, tol):
    for i in range(4):
        for j in range(4):
            if not math.isfinite(m[i, j]):
                return NON_FINITE, -1
    if m[0, 0] <= MIN_TRANSMITTANCE:
        return ZERO_TRANSMITTANCE, -1
    scale = m[0, 0]
    for k in range(PROBES.shape[0]):
        out = np.zeros(4)
        for i in range(4):
            for j in range(4):
                out[i] += m[i, j] / scale * PROBES[k, j]
        if out[0] < -tol:
            return UNPHYSICAL, k
        polarized = math.sqrt(out[1] ** 2 + out[2] ** 2 + out[3] ** 2)
        if polarized > out[0] + tol:
            return UNPHYSICAL, k
    return OK, -1


@nb.njit
def decompose_kernel(m_in):
    """Polar decomposition ``M = M_delta . M_R . M_D`` of one Mueller matrix."""

    md = np.eye(4)
    mr = np.eye(4)
    mdelta = np.eye(4)

    code, _ = validate_kernel(m_in, VALIDATION_TOL)
    if code != OK:
        return code, md, mr, mdelta
    m = m_in / m_in[0, 0]

    # diattenuator from the first row
    d = np.ascontiguousarray(m[0, 1:4])
    d_norm = math.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2)
    if d_norm >= 1.0:
        return DIATTENUATION, md, mr, mdelta
    root = math.sqrt(1.0 - d_norm**2)
    for i in range(3):
        md[0, i + 1] = d[i]
        md[i + 1, 0] = d[i]
        for j in range(3):
            diag = root if i == j else 0.0
            outer = d[i] * d[j] / d_norm**2 if d_norm > 0 else 0.0
            md[i + 1, j + 1] = diag + (1.0 - root) * outer

    m_prime = np.dot(np.ascontiguousarray(m), np.linalg.inv(md))
    mp = np.ascontiguousarray(m_prime[1:4, 1:4])
    det_mp = np.linalg.det(mp)
    if abs(det_mp) < SINGULAR_TOL:
        return SINGULAR, md, mr, mdelta

    # polarizance of the depolarizer
    p = np.ascontiguousarray(m[1:4, 0])
    m3 = np.ascontiguousarray(m[1:4, 1:4])
    p_delta = (p - np.dot(m3, d)) / (1.0 - d_norm**2)

    prod = np.dot(mp, mp.T)
    eig = np.linalg.eigvalsh(prod)
    l1 = math.sqrt(max(eig[0], 0.0))
    l2 = math.sqrt(max(eig[1], 0.0))
    l3 = math.sqrt(max(eig[2], 0.0))
    lhs = prod + (l1 * l2 + l2 * l3 + l3 * l1) * np.eye(3)
    rhs = (l1 + l2 + l3) * prod + (l1 * l2 * l3) * np.eye(3)
    m_delta3 = np.linalg.solve(lhs, rhs)
    if det_mp < 0:
        m_delta3 = -m_delta3
    m_r3 = np.linalg.solve(m_delta3, mp)

    for i in range(3):
        mdelta[i + 1, 0] = p_delta[i]
        for j in range(3):
            mdelta[i + 1, j + 1] = m_delta3[i, j]
            mr[i + 1, j + 1] = m_r3[i, j]
    return OK, md, mr, mdelta


@nb.njit
def properties_kernel(md, mr, mdelta):
    """Retardance, fast axis, depolarization and diattenuation of the factors."""

    trace = mr[0, 0] + mr[1, 1] + mr[2, 2] + mr[3, 3]
    arg = min(max(trace / 2.0 - 1.0, -1.0), 1.0)
    retardance = math.acos(arg)

    fast_axis = 0.0
    if retardance >= AXIS_TOL:
        sin_r = math.sin(retardance)
        if sin_r > 1e-6:
            a1 = (mr[2, 3] - mr[3, 2]) / (2.0 * sin_r)
            a2 = (mr[3, 1] - mr[1, 3]) / (2.0 * sin_r)
        else:
            # half-wave limit: the symmetric part is 2 a a^T - I
            k = 1
            for i in range(2, 4):
                if mr[i, i] > mr[k, k]:
                    k = i
            a_k = math.sqrt(max((mr[k, k] + 1.0) / 2.0, 0.0))
            axis = np.zeros(4)
            axis[k] = a_k
            for j in range(1, 4):
                if j != k:
                    axis[j] = (mr[k, j] + mr[j, k]) / (4.0 * a_k)
            a1 = axis[1]
            a2 = axis[2]
        fast_axis = 0.5 * math.atan2(a2, a1)
        if fast_axis >= math.pi / 2:
            fast_axis -= math.pi

    depol_trace = abs(mdelta[1, 1] + mdelta[2, 2] + mdelta[3, 3])
    depolarization = min(max(1.0 - depol_trace / 3.0, 0.0), 1.0)
    diattenuation = min(math.sqrt(md[0, 1] ** 2 + md[0, 2] ** 2 + md[0, 3] ** 2), 1.0)
    return retardance, fast_axis, depolarization, diattenuation


@nb.njit
def image_kernel(data):
    """Per-pixel properties of a ``(height, width, 16)`` Mueller raster."""

    height, width = data.shape[0], data.shape[1]
    maps = np.zeros((4, height, width))
    mask = np.zeros((height, width), dtype=np.bool_)
    m = np.empty((4, 4))
    for y in range(height):
        for x in range(width):
            for c in range(16):
                m[c // 4, c % 4] = data[y, x, c]
            code, md, mr, mdelta = decompose_kernel(m)
            if code != OK:
                continue
            retardance, fast_axis, depolarization, diattenuation = properties_kernel(
                md, mr, mdelta
            )
            maps[0, y, x] = retardance
            maps[1, y, x] = fast_axis
            maps[2, y, x] = depolarization
            maps[3, y, x] = diattenuation
            mask[y, x] = True
    return maps, mask
