"""Additive noise models for both data conventions and the KLO parameter schedules.

SG data receive Gaussian noise whose weighted L2 energy is a fixed fraction
``delta`` of the signal energy. KLO kernels receive a perturbation whose
Toeplitz operator has norm ``delta * ||Lam||_2``. In both cases the noise
direction depends only on the seed, so sweeping ``delta`` rescales a single
realisation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ._rng import NOISE_STREAM, generator
from .errors import ParameterError
from .klo_invert import N_REF, SIGMA_REF, ConvolutionMap

POWER_TOL = 1e-8
POWER_MAX_ITER = 500
POWER_BLOCK = 8
EPS_NOISELESS = 1e-4


class ZeroSignalWarning(RuntimeWarning):
    pass


def weighted_l2_norm(v, dt):
    """``(sum v_i**2 dt)**0.5``."""
    v = np.asarray(v, dtype=float)
    return float(np.sqrt(np.sum(v * v) * dt))


def noise_direction(n, seed, dt=1.0):
    """Standard normal draw of length ``n`` normalised to unit weighted norm."""
    eta = generator(seed, NOISE_STREAM).standard_normal(n)
    return eta / weighted_l2_norm(eta, dt)


def add_sg_noise(h, delta, seed):
    """``h + delta * ||h|| * eta0`` in the weighted norm on the trace grid."""
    if delta < 0:
        raise ParameterError("delta must be >= 0")
    if delta == 0:
        return h.replace(h.samples.copy())
    norm = weighted_l2_norm(h.samples, h.dt)
    if norm == 0:
        warnings.warn("zero signal: noise left out", ZeroSignalWarning, stacklevel=2)
        return h.replace(h.samples.copy())
    eta = noise_direction(len(h.samples), seed, h.dt)
    return h.replace(h.samples + delta * norm * eta)


@dataclass(frozen=True)
class NormEstimate:
    """Power-iteration estimate of ``||Lam||_2``."""

    value: float
    converged: bool
    iterations: int

    def __float__(self):
        return self.value


def _start_block(n, p):
    """All-ones vector followed by the next cosine modes, orthonormalised."""
    t = np.arange(n) + 0.5
    V = np.column_stack([np.cos(np.pi * j * t / n) for j in range(p)])
    return np.linalg.qr(V)[0]


def operator_norm(h_hat, tol=POWER_TOL, max_iter=POWER_MAX_ITER, block=POWER_BLOCK):
    """Largest singular value of the lower-triangular Toeplitz map of ``h_hat``.

    Block power iteration on ``Lam^T Lam`` with matrix-free convolution and
    correlation. The block starts from the normalised all-ones vector and
    the next ``block - 1`` cosine modes; a Rayleigh-Ritz step on the block
    gives the estimate. A single vector stalls when the top singular values
    cluster, which is common for Toeplitz kernels; the block converges at
    the rate set by the gap to the ``block + 1``-th value. Iteration stops
    once successive estimates agree to ``tol`` relatively; otherwise the
    last estimate is returned with ``converged=False``.
    """
    lam = h_hat if isinstance(h_hat, ConvolutionMap) else ConvolutionMap(h_hat)
    n = lam.n
    if not np.any(lam.kernel):
        return NormEstimate(0.0, True, 0)
    V = _start_block(n, max(1, min(int(block), n)))
    est = 0.0
    new = 0.0
    for it in range(1, max_iter + 1):
        W = np.column_stack([lam.rmatvec(lam.matvec(v)) for v in V.T])
        H = V.T @ W
        evals, U = np.linalg.eigh(0.5 * (H + H.T))
        new = float(np.sqrt(max(evals[-1], 0.0)))
        V = np.linalg.qr(W @ U[:, ::-1])[0]
        if abs(new - est) <= tol * new:
            return NormEstimate(new, True, it)
        est = new
    return NormEstimate(new, False, max_iter)


def unit_klo_noise(n, seed):
    """Noise kernel whose Toeplitz operator has unit estimated norm."""
    raw = generator(seed, NOISE_STREAM).standard_normal(n)
    return raw / operator_norm(raw).value


def effective_perturbation(h_hat, delta):
    """``eps_eff = delta * ||Lam||_2``."""
    if delta < 0:
        raise ParameterError("delta must be >= 0")
    return delta * operator_norm(h_hat).value


def add_klo_noise(h_hat, delta, seed):
    """``h_hat + eps_eff * n_hat`` with ``n_hat`` of unit operator norm."""
    h_hat = np.asarray(h_hat, dtype=float)
    if delta < 0:
        raise ParameterError("delta must be >= 0")
    if delta == 0:
        return h_hat.copy()
    return h_hat + effective_perturbation(h_hat, delta) * unit_klo_noise(len(h_hat), seed)


def beta_schedule(delta):
    if delta < 0:
        raise ParameterError("delta must be >= 0")
    if delta == 0:
        return 2e-5
    return 5e-3 if delta <= 0.01 else 1e-2


def klo_schedules(delta, n_grid, eps_eff=None):
    """Regularisation ``alpha`` and smoothing width ``sigma_kr`` for noise level ``delta``.

    ``alpha = beta * eps**(4/9)`` with ``eps = 1e-4`` when ``delta = 0`` and
    ``eps = eps_eff`` (required) otherwise. ``sigma_kr = 6 (n_grid/1500)(1 + 40 delta)``.
    """
    beta = beta_schedule(delta)
    if delta == 0:
        eps = EPS_NOISELESS
    else:
        if eps_eff is None:
            raise ParameterError("eps_eff is required for delta > 0")
        eps = eps_eff
    alpha = beta * eps ** (4.0 / 9.0)
    sigma = SIGMA_REF * (n_grid / N_REF) * (1 + 40 * delta)
    return alpha, sigma
