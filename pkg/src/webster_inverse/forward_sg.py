"""Staggered leapfrog solver for the first-order Webster system.

Flow ``Q`` lives on the nodes ``x_j = j*dx`` and pressure head ``H`` on the
half-nodes ``x_{j+1/2}``. The inlet is driven by a discrete flow impulse and
the right end carries a first-order Engquist-Majda absorbing update.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ParameterError
from .traces import SG_IMPULSE_RESPONSE, BoundaryTrace


@dataclass(frozen=True)
class SgForwardConfig:
    """Solver settings; ``t_final`` defaults to twice the profile length."""

    nx: int = 1600
    dt_over_dx: float = 1.0
    t_final: float | None = None
    impulse_width: int = 1
    absorbing_right: bool = True

    def validate(self, length):
        if int(self.nx) != self.nx or self.nx < 8:
            raise ParameterError("nx must be an integer >= 8")
        if not 0 < self.dt_over_dx <= 1:
            raise ParameterError(f"Courant number {self.dt_over_dx} unstable; need 0 < dt/dx <= 1")
        if int(self.impulse_width) != self.impulse_width or self.impulse_width < 1:
            raise ParameterError("impulse_width must be an integer >= 1")
        t_final = 2 * length if self.t_final is None else self.t_final
        if t_final < 2 * length * (1 - 1e-12):
            raise ParameterError("t_final must be at least twice the profile length")
        return t_final


def _inlet_pulse(n, width, dt):
    return 1.0 / (width * dt) if n < width else 0.0


def _run(area_nodes, lam, dt, n_steps, width, absorbing):
    """Advance the scheme; returns ``H_0`` at levels ``m + 1/2``, ``m = 0..n_steps``."""
    J = len(area_nodes) - 1
    a_int = area_nodes[1:J]
    inv_half = 1.0 / (0.5 * (area_nodes[1:] + area_nodes[:-1]))
    edge = (1.0 - lam) / (1.0 + lam)
    Q = np.zeros(J + 1)
    H = np.zeros(J)
    levels = np.zeros(n_steps + 1)
    for n in range(n_steps):
        q_last, q_prev = Q[J], Q[J - 1]
        Q[1:J] -= lam * a_int * (H[1:] - H[:-1])
        Q[0] = _inlet_pulse(n, width, dt)
        if absorbing:
            Q[J] = q_prev + edge * (q_last - Q[J - 1])
        else:
            Q[J] = 0.0
        H -= lam * inv_half * (Q[1:] - Q[:-1])
        h0 = H[0]
        if not np.isfinite(h0) or not np.isfinite(H[-1]):
            raise NumericalError(f"non-finite state at step {n}", step=n)
        levels[n + 1] = h0
    if not np.all(np.isfinite(H)):
        raise NumericalError("non-finite state at final step", step=n_steps - 1)
    return levels


def node_areas(profile, nx):
    x = np.linspace(0.0, profile.length, nx + 1)
    # np.interp holds A constant at A(length) beyond the profile
    return profile(x)


def simulate_sg(profile, cfg=SgForwardConfig(), remove_impulse=True):
    """Inlet pressure response of ``profile`` to a unit flow impulse.

    Returns a :class:`BoundaryTrace` sampled at ``t_k = k*dt`` for
    ``k = 0..round(t_final/dt)``. The staggered levels ``H_0^{m+1/2}`` are
    averaged pairwise onto the integer levels, which keeps the trace
    second-order accurate at ``x = 0``. With ``remove_impulse`` the direct
    response of a reflection-free tube is subtracted, leaving the reflection
    kernel ``h_SG``.
    """
    t_final = cfg.validate(profile.length)
    nx = int(cfg.nx)
    lam = float(cfg.dt_over_dx)
    dx = profile.length / nx
    dt = lam * dx
    n_samples = int(round(t_final / dt)) + 1
    width = int(cfg.impulse_width)
    area = node_areas(profile, nx)

    levels = _run(area, lam, dt, n_samples, width, cfg.absorbing_right)
    if remove_impulse:
        a_half = 0.5 * (area[0] + area[1])
        if lam == 1.0:
            direct = np.zeros_like(levels)
            direct[1 : width + 1] = 1.0 / (width * dt * a_half)
        else:
            direct = _run(np.full_like(area, a_half), lam, dt, n_samples, width, True)
        levels = levels - direct
        # level 3/2 carries only the direct pulse; restore its reflection part
        levels[1] = 2 * levels[2] - levels[3]
    samples = 0.5 * (levels[:-1] + levels[1:])
    if remove_impulse:
        samples[0] = 2 * samples[1] - samples[2]
    if width > 1:
        # re-centre on the pulse centroid
        t = np.arange(n_samples) * dt
        samples = np.interp(t + 0.5 * (width - 1) * dt, t, samples)
    return BoundaryTrace(dt=dt, samples=samples, kind=SG_IMPULSE_RESPONSE, impulse_removed=remove_impulse)
