"""Area reconstruction from a Neumann-to-Dirichlet trace by boundary control.

The trace ``H(0, t_i)``, ``t_i = i*dt``, ``i = 0..n_t-1``, defines the
discrete connecting operator

    K = R Lam R J - J Lam,

with ``R`` time reversal, ``J`` the folded integration matrix and ``Lam`` the
lower-triangular Toeplitz convolution with ``h_hat = dt * H(0, t)``. For each
radius ``r`` the Tikhonov system ``(K_rr + alpha I) f = b1`` is solved on the
window ``[T0 - r, T0]``; ``s(r) = <f, b1> dt`` approximates the volume
``int_0^r A dx`` and its difference quotient the area.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.signal import fftconvolve

from .errors import NumericalError, ParameterError
from .profiles import DEFAULT_BOUNDS, AreaProfile, clip_area
from .smoothing import gaussian_smooth, gaussian_weights  # noqa: F401  (public here)
from .traces import KLO_TRACE

DERIVATIVES = ("forward", "central")
SOLVERS = ("direct", "bordered")
# Reference resolution for the smoothing-width schedule.
N_REF = 1500
SIGMA_REF = 6.0
# alpha = beta * eps**(4/9) for the noiseless case.
ALPHA_NOISELESS = 2e-5 * (1e-4) ** (4.0 / 9.0)


def time_reversal(v):
    """``(Rv)_i = v_{n-1-i}``."""
    return np.asarray(v)[::-1].copy()


def integration_matrix(n, dt):
    """Explicit ``J``: ``dt/2`` on ``i <= tau <= N-i`` for rows with ``N - i > i``, ``N = n-1``."""
    N = n - 1
    i = np.arange(n)[:, None]
    tau = np.arange(n)[None, :]
    return np.where((tau >= i) & (tau <= N - i) & (N - i > i), 0.5 * dt, 0.0)


def integrate_J(v, dt):
    """Action of ``J`` in ``O(n)`` through a cumulative sum."""
    v = np.asarray(v, dtype=float)
    n = len(v)
    if n < 2:
        raise ParameterError("integrate_J needs at least two samples")
    N = n - 1
    csum = np.concatenate([[0.0], np.cumsum(v)])
    out = np.zeros(n)
    i = np.arange(n)
    live = N - i > i
    il = i[live]
    out[live] = 0.5 * dt * (csum[N - il + 1] - csum[il])
    return out


class ConvolutionMap:
    """Lower-triangular Toeplitz operator ``Lam_ij = h_hat_{i-j}`` (``i >= j``)."""

    def __init__(self, h_hat):
        self.kernel = np.asarray(h_hat, dtype=float).copy()

    @property
    def n(self):
        return len(self.kernel)

    def matvec(self, v):
        v = np.asarray(v, dtype=float)
        if self.n > 256:
            return fftconvolve(self.kernel, v)[: self.n]
        return np.convolve(self.kernel, v)[: self.n]

    def rmatvec(self, v):
        """Action of the transpose, a correlation."""
        return time_reversal(self.matvec(time_reversal(v)))

    def dense(self):
        return sla.toeplitz(self.kernel, np.zeros(self.n))


def convolution_map(h_hat):
    return ConvolutionMap(h_hat)


class ConnectingOperator:
    """``K = R Lam R J - J Lam`` for a kernel ``h_hat`` and step ``dt``.

    ``R Lam R`` equals ``Lam^T`` for a Toeplitz ``Lam``, which the dense
    assembly uses.
    """

    MAX_DENSE = 4096

    def __init__(self, lam, dt):
        self.lam = lam if isinstance(lam, ConvolutionMap) else ConvolutionMap(lam)
        self.dt = float(dt)

    @property
    def n(self):
        return self.lam.n

    def matvec(self, v):
        Jv = integrate_J(v, self.dt)
        return time_reversal(self.lam.matvec(time_reversal(Jv))) - integrate_J(self.lam.matvec(v), self.dt)

    def dense(self):
        if self.n > self.MAX_DENSE:
            raise ParameterError(f"explicit K limited to n_t <= {self.MAX_DENSE}")
        L = self.lam.dense()
        J = integration_matrix(self.n, self.dt)
        return L.T @ J - J @ L


def connecting_operator(h_hat, dt):
    return ConnectingOperator(h_hat, dt)


def b1_vector(n, dt):
    """``b1_i = T0 - t_i`` for ``t_i <= T0``, else 0, with ``T0 = t_{n-1}/2``."""
    t = np.arange(n) * dt
    T0 = 0.5 * (n - 1) * dt
    return np.where(t <= T0 + 1e-12 * dt, T0 - t, 0.0)


def window_indices(n, dt, r):
    """Indices ``i`` with ``t_i`` in ``[T0 - r, T0]``."""
    t = np.arange(n) * dt
    T0 = 0.5 * (n - 1) * dt
    tol = 1e-9 * dt
    return np.flatnonzero((t >= T0 - r - tol) & (t <= T0 + tol))


@dataclass
class WindowResult:
    f: np.ndarray
    s: float
    index: np.ndarray


def window_solve(K, r, alpha, dt, b1=None):
    """Solve ``(K_rr + alpha I) f = b1|J_r`` and return ``f_full`` and ``s(r)``.

    ``K`` is the dense connecting matrix.
    """
    if not alpha > 0:
        raise ParameterError("alpha must be > 0")
    n = K.shape[0]
    b1 = b1_vector(n, dt) if b1 is None else b1
    idx = window_indices(n, dt, r)
    if idx.size == 0:
        return WindowResult(np.zeros(n), 0.0, idx)
    A = K[np.ix_(idx, idx)] + alpha * np.eye(idx.size)
    try:
        with np.errstate(all="raise"):
            f = sla.solve(A, b1[idx], check_finite=True)
    except (sla.LinAlgError, FloatingPointError, ValueError) as exc:
        raise NumericalError(f"window solve failed at r={r}", condition=np.linalg.cond(A)) from exc
    full = np.zeros(n)
    full[idx] = f
    return WindowResult(full, float(full @ b1) * dt, idx)


def volumes_bordered(K, sizes, alpha, dt):
    """``s`` for nested windows ending at ``T0`` by a bordered LU factorisation.

    The windows share their last index, so ordering the unknowns backwards in
    time turns each larger window into a one-row, one-column extension of the
    previous one. ``L`` and ``U`` are extended in ``O(m^2)`` per window. There
    is no pivoting; the scheduled ``alpha`` and the near-symmetric positive
    ``K`` keep the pivots away from zero, and a vanishing pivot raises.
    """
    n = K.shape[0]
    b1 = b1_vector(n, dt)
    i0 = (n - 1) // 2
    m_max = int(max(sizes))
    order = i0 - np.arange(m_max)  # backwards in time from T0
    A = K[np.ix_(order, order)] + alpha * np.eye(m_max)
    rhs = b1[order]
    L = np.zeros((m_max, m_max))
    U = np.zeros((m_max, m_max))
    y = np.zeros(m_max)
    want = set(int(s) for s in sizes)
    out = {}
    scale = np.abs(A).max()
    for k in range(m_max):
        # new row of L and column of U against the existing factors
        if k:
            U[:k, k] = sla.solve_triangular(L[:k, :k], A[:k, k], lower=True, unit_diagonal=True)
            L[k, :k] = sla.solve_triangular(U[:k, :k], A[k, :k], trans="T", lower=False)
        L[k, k] = 1.0
        U[k, k] = A[k, k] - L[k, :k] @ U[:k, k]
        if not abs(U[k, k]) > 1e-14 * scale:
            raise NumericalError(f"zero pivot in bordered factorisation at size {k + 1}", step=k)
        y[k] = rhs[k] - L[k, :k] @ y[:k]
        if k + 1 in want:
            f = sla.solve_triangular(U[: k + 1, : k + 1], y[: k + 1], lower=False)
            out[k + 1] = float(f @ rhs[: k + 1]) * dt
    return np.array([out[int(s)] for s in sizes])


def default_sigma_kr(n_grid, delta=0.0):
    return SIGMA_REF * (n_grid / N_REF) * (1 + 40 * delta)


@dataclass(frozen=True)
class KloInverseConfig:
    """Reconstruction settings.

    ``n_r`` radii ``r_j = j*T0/n_r``, ``j = 1..n_r`` (``None``: one per time
    step of the trace). ``sigma_kr`` of ``None`` uses the noiseless schedule
    value for that grid. ``x_grid`` of ``None`` returns the profile on
    ``[0, T0]`` with the radius spacing.
    """

    alpha: float = ALPHA_NOISELESS
    n_r: int | None = None
    sigma_kr: float | None = None
    sigma_ax: float = 0.0
    bounds: tuple = DEFAULT_BOUNDS
    x_min: float = 0.0
    derivative: str = "forward"
    solver: str = "bordered"
    x_grid: tuple | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ParameterError("alpha must be > 0")
        if self.derivative not in DERIVATIVES:
            raise ParameterError(f"derivative must be one of {DERIVATIVES}")
        if self.solver not in SOLVERS:
            raise ParameterError(f"solver must be one of {SOLVERS}")
        if self.sigma_kr is not None and self.sigma_kr < 0:
            raise ParameterError("sigma_kr must be >= 0")
        if self.sigma_ax < 0 or self.x_min < 0:
            raise ParameterError("sigma_ax and x_min must be >= 0")
        lo, hi = self.bounds
        if not 0 < lo <= hi:
            raise ParameterError("bounds must satisfy 0 < A_min <= A_max")


def differentiate(s, dr, kind="forward"):
    """Difference quotients ``k_j`` of ``s`` on a uniform grid.

    ``forward`` repeats the last backward difference at the end; ``central``
    uses one-sided differences at both ends.
    """
    s = np.asarray(s, dtype=float)
    if kind == "forward":
        k = np.empty_like(s)
        k[:-1] = np.diff(s) / dr
        k[-1] = (s[-1] - s[-2]) / dr
        return k
    return np.gradient(s, dr, edge_order=1)


@dataclass
class KloDiagnostics:
    r: np.ndarray
    s_alpha: np.ndarray
    k_raw: np.ndarray
    k_smooth: np.ndarray

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "s_alpha", "k_raw", "k_smooth"])
            for row in zip(self.r, self.s_alpha, self.k_raw, self.k_smooth):
                w.writerow([repr(float(v)) for v in row])


def _radii(n_t, dt, n_r):
    T0 = 0.5 * (n_t - 1) * dt
    n_half = (n_t - 1) // 2
    n_r = n_half if n_r is None else int(n_r)
    if n_r < 8:
        raise ParameterError("r_grid needs at least 8 points")
    return T0, np.arange(1, n_r + 1) * (T0 / n_r)


def volumes(K, r, alpha, dt, solver="bordered"):
    """``s_alpha(r_j)`` for every radius."""
    n = K.shape[0]
    if solver == "direct":
        b1 = b1_vector(n, dt)
        return np.array([window_solve(K, rj, alpha, dt, b1).s for rj in r])
    sizes = [window_indices(n, dt, rj).size for rj in r]
    return volumes_bordered(K, sizes, alpha, dt)


def reconstruct_klo(trace, cfg=KloInverseConfig(), K=None, return_diagnostics=False):
    """Area profile from a KLO trace.

    ``K`` may be supplied (e.g. from :func:`transfer.ndmap_from_sg`) in place
    of the operator built from ``trace``; the trace then only fixes the grid.
    """
    if trace.kind != KLO_TRACE:
        raise ParameterError(f"expected a KLO trace, got {trace.kind!r}")
    n_t = len(trace.samples)
    dt = trace.dt
    T0, r = _radii(n_t, dt, cfg.n_r)
    if K is None:
        K = connecting_operator(dt * trace.samples, dt).dense()
    s = volumes(K, r, cfg.alpha, dt, cfg.solver)
    dr = r[1] - r[0]
    k_raw = differentiate(s, dr, cfg.derivative)
    sigma = default_sigma_kr(len(r)) if cfg.sigma_kr is None else cfg.sigma_kr
    k = gaussian_smooth(k_raw, sigma)
    A = clip_area(k, cfg.bounds)
    x_grid = np.concatenate([[0.0], r]) if cfg.x_grid is None else np.asarray(cfg.x_grid, float)
    values = np.interp(x_grid, r, A)
    if cfg.sigma_ax > 0:
        values = clip_area(gaussian_smooth(values, cfg.sigma_ax), cfg.bounds)
    if cfg.x_min > 0:
        values = np.where(x_grid <= cfg.x_min + 1e-12, 1.0, values)
    prof = AreaProfile(x_grid, values, generator="klo")
    if return_diagnostics:
        return prof, KloDiagnostics(r, s, k_raw, k)
    return prof
