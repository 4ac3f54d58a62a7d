"""Truncated Gaussian smoothing of uniformly sampled sequences."""

import numpy as np

from .errors import ParameterError


def gaussian_weights(sigma_pts):
    M = max(1, int(np.floor(4 * sigma_pts)))
    m = np.arange(-M, M + 1)
    with np.errstate(over="ignore"):  # tiny widths underflow to a delta
        w = np.exp(-0.5 * (m / sigma_pts) ** 2)
    return w / w.sum()


def gaussian_smooth(seq, sigma_pts):
    """Normalised truncated Gaussian convolution with symmetric reflection padding.

    The half-width is ``max(1, floor(4*sigma_pts))``; ``sigma_pts = 0`` is
    the identity.
    """
    y = np.asarray(seq, dtype=float)
    if sigma_pts < 0:
        raise ParameterError("sigma_pts must be >= 0")
    if sigma_pts == 0 or y.size == 0:
        return y.copy()
    w = gaussian_weights(sigma_pts)
    M = (len(w) - 1) // 2
    # numpy reflects repeatedly when M exceeds the sequence length
    padded = np.pad(y, M, mode="symmetric")
    return np.convolve(padded, w, mode="valid")
