"""Area reconstruction from an SG impulse response.

For each depth ``a = m*dt`` the control ``f`` on the window
``tau_j = -a + j*dt``, ``j = 0..M-1`` (``M = 2m+1``) solves the discretised
second-kind Fredholm equation

    f_i + 1/2 * sum_j w_j h(|i-j| dt) f_j = A(0),

and the area at ``x = a`` is ``f_{M-1}**2``. The uniform part of the system
is symmetric Toeplitz and is solved by Levinson recursion; the end weights
of the quadrature enter as a low-rank correction through the Woodbury
identity.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import DomainRangeError, ParameterError
from .profiles import AreaProfile
from .traces import SG_IMPULSE_RESPONSE, BoundaryTrace

QUADRATURES = ("uniform", "trapezoid", "gregory4")
SOLVERS = ("levinson_woodbury", "dense")

# End-weight ratios w_j / dt for the first and last samples of the window.
_END_WEIGHTS = {
    "uniform": (),
    "trapezoid": (0.5,),
    "gregory4": (5.0 / 12.0, 13.0 / 12.0),
}


class LevinsonBreakdownWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class SgInverseConfig:
    """Inversion settings.

    ``dt`` of ``None`` uses the trace's own step. ``a_grid`` of ``None``
    reconstructs at every ``a = m*dt`` the record allows. ``phi`` is the
    Tikhonov shift added to the diagonal.
    """

    dt: float | None = None
    a_grid: tuple | None = None
    phi: float = 1e-10
    quadrature: str = "gregory4"
    solver: str = "levinson_woodbury"
    A0: float = 1.0

    def __post_init__(self):
        if self.phi < 0:
            raise ParameterError("phi must be >= 0")
        if self.quadrature not in QUADRATURES:
            raise ParameterError(f"quadrature must be one of {QUADRATURES}")
        if self.solver not in SOLVERS:
            raise ParameterError(f"solver must be one of {SOLVERS}")
        if self.dt is not None and not self.dt > 0:
            raise ParameterError("dt must be > 0")


@dataclass
class SgSystem:
    """``(T + U diag(c) V^T) f = A0 * 1`` with ``T`` given by its first column.

    ``V`` is made of unit vectors, so it is stored as the column indices
    ``index``; ``U`` holds the kernel columns at those indices and ``coef``
    the weight deviations. ``U`` is ``None`` for a pure Toeplitz system.
    """

    first_column: np.ndarray
    U: np.ndarray | None = None
    coef: np.ndarray | None = None
    index: np.ndarray | None = None
    dt: float = 1.0

    @property
    def size(self):
        return len(self.first_column)

    @property
    def rank(self):
        return 0 if self.U is None else self.U.shape[1]

    def dense(self):
        T = sla.toeplitz(self.first_column)
        if self.U is not None:
            T[:, self.index] += self.U * self.coef[None, :]
        return T


@dataclass
class WindowSolution:
    f: np.ndarray
    fell_back: bool = False


def quadrature_weights(M, quadrature="gregory4"):
    """Weights ``w_j / dt`` of the window quadrature (as a ratio to ``dt``)."""
    w = np.ones(M)
    ends = _END_WEIGHTS[quadrature]
    if M < 2 * len(ends) + 1:
        # windows too short for the Gregory ends fall back to the trapezoid rule
        ends = _END_WEIGHTS["trapezoid"] if M >= 3 else ()
    for k, value in enumerate(ends):
        w[k] = value
        w[M - 1 - k] = value
    return w


def _check_trace(h):
    if h.kind != SG_IMPULSE_RESPONSE:
        raise ParameterError(f"expected an SG impulse response, got {h.kind!r}")
    if not h.impulse_removed:
        raise ParameterError("SG inversion needs the impulse-removed response")


def assemble_system(h, a, cfg=SgInverseConfig()):
    """Toeplitz first column and low-rank end correction for depth ``a``."""
    _check_trace(h)
    dt = h.dt
    m = int(round(a / dt))
    if m < 0 or abs(m * dt - a) > 1e-9 * max(dt, abs(a)):
        raise ParameterError(f"depth a={a} is not a multiple of dt={dt}")
    M = 2 * m + 1
    if M > len(h.samples):
        raise DomainRangeError(f"window 2a={2 * a} exceeds the record length {h.duration}")
    kernel = 0.5 * dt * h.samples[:M]
    col = kernel.copy()
    col[0] += 1.0 + cfg.phi
    w = quadrature_weights(M, cfg.quadrature)
    idx = np.flatnonzero(w != 1.0)
    if idx.size == 0:
        return SgSystem(col, dt=dt)
    dist = np.abs(np.arange(M)[:, None] - idx[None, :])
    return SgSystem(col, U=kernel[dist], coef=w[idx] - 1.0, index=idx, dt=dt)


def solve_window(system, rhs=1.0, solver="levinson_woodbury"):
    """Solve the window system for the constant right-hand side ``rhs``.

    Levinson recursion handles ``T``; ``p + 1`` Toeplitz solves are combined
    by Woodbury for the rank-``p`` correction. On a Levinson breakdown the
    dense solver is used and ``fell_back`` is set.
    """
    M = system.size
    b = np.full(M, float(rhs))
    if solver == "dense":
        return WindowSolution(np.linalg.solve(system.dense(), b))
    col = system.first_column
    rhs_block = b[:, None] if system.U is None else np.column_stack([b, system.U])
    try:
        with np.errstate(all="raise"):
            sol = sla.solve_toeplitz(col, rhs_block, check_finite=False)
        sol = np.asarray(sol).reshape(M, -1)
        if not np.all(np.isfinite(sol)):
            raise np.linalg.LinAlgError("non-finite Levinson solution")
    except (np.linalg.LinAlgError, FloatingPointError):
        warnings.warn("Levinson recursion broke down; using dense solve", LevinsonBreakdownWarning, stacklevel=2)
        return WindowSolution(np.linalg.solve(system.dense(), b), fell_back=True)
    y = sol[:, 0]
    if system.U is None:
        return WindowSolution(y)
    Z = sol[:, 1:]
    c = system.coef
    # (T + U C V^T)^{-1} b = y - Z (I + C V^T Z)^{-1} C V^T y
    small = np.eye(len(c)) + c[:, None] * Z[system.index, :]
    corr = np.linalg.solve(small, c * y[system.index])
    return WindowSolution(y - Z @ corr)


def control_volume(f, dt):
    """Trapezoid integral of ``f`` over the first half ``tau in [-a, 0]`` of its window."""
    m = (len(f) - 1) // 2
    if m == 0:
        return 0.0
    return dt * (0.5 * f[0] + f[1:m].sum() + 0.5 * f[m])


def _prepare(h, cfg):
    _check_trace(h)
    if cfg.dt is not None and abs(cfg.dt - h.dt) > 1e-12 * h.dt:
        h = h.resample(cfg.dt)
    max_m = (len(h.samples) - 1) // 2
    if cfg.a_grid is None:
        ms = np.arange(1, max_m + 1)
    else:
        a = np.asarray(cfg.a_grid, dtype=float)
        ms = np.rint(a / h.dt).astype(int)
        if np.any(np.abs(ms * h.dt - a) > 1e-9 * h.dt):
            raise ParameterError("a_grid values must be multiples of dt")
        if np.any(ms < 0) or np.any(2 * ms + 1 > len(h.samples)):
            raise DomainRangeError("a_grid exceeds half the record length")
    return h, ms


def sg_windows(h, cfg=SgInverseConfig()):
    """Yield ``(a, WindowSolution)`` for every depth of the reconstruction grid."""
    h, ms = _prepare(h, cfg)
    for m in ms:
        system = assemble_system(h, m * h.dt, cfg)
        yield m * h.dt, solve_window(system, cfg.A0, cfg.solver)


def reconstruct_sg(h, cfg=SgInverseConfig()):
    """Area profile ``A(a) = f_{M-1}(a)**2`` on the depth grid.

    With the default ``a_grid`` the output grid is ``x = 0, dt, ..., m_max*dt``;
    the value at ``x = 0`` is the normalisation ``A0``.
    """
    h, ms = _prepare(h, cfg)
    xs, values = [], []
    for a, sol in sg_windows(h, cfg):
        xs.append(a)
        values.append(sol.f[-1] ** 2 if len(sol.f) > 1 else cfg.A0)
    xs = np.array(xs)
    values = np.array(values)
    if cfg.a_grid is None:
        xs = np.concatenate([[0.0], xs])
        values = np.concatenate([[cfg.A0], values])
    return AreaProfile(xs, values, generator="sg")
