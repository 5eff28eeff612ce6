"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""
import numpy as np

# rows of the (n_obs, n_src) phase matrix evaluated per chunk
_CHUNK = 256


def fresnel_direct(src, weights, y_src, y_obs, k, z):
    src = np.ascontiguousarray(src, dtype=np.complex128)
    weighted = src * np.asarray(weights, dtype=np.float64)
    keep = weighted != 0
    weighted = weighted[keep]
    y_src = np.asarray(y_src, dtype=np.float64)[keep]
    y_obs = np.asarray(y_obs, dtype=np.float64)
    out = np.empty(y_obs.size, dtype=np.complex128)
    half_k_over_z = 0.5 * k / z
    for start in range(0, y_obs.size, _CHUNK):
        d = y_obs[start:start + _CHUNK, None] - y_src[None, :]
        out[start:start + _CHUNK] = np.exp(1j * (half_k_over_z * d * d)) @ weighted
    return out


def accumulate_intensity(fields):
    fields = np.asarray(fields, dtype=np.complex128)
    out = np.zeros(fields.shape[1], dtype=np.float64)
    for row in fields:
        out += row.real * row.real + row.imag * row.imag
    return out
