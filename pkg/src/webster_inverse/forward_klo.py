"""Leapfrog solver for the second-order Webster equation in flux form.

    H_tt = (c0^2 / A) (A H_x)_x,   A(0) H_x(0, t) = f(t),

on nodes ``x_i = i*dx``, ``i = 0..nx-1``. The Neumann datum enters through
the boundary flux of a half-cell balance at ``x = 0``; the right end uses an
Engquist-Majda type absorbing update. The input is a discrete delta.

Sign convention: with ``A(0) H_x(0, t) = delta(t)`` a uniform tube answers
with ``H(0, t) = -1/A(0)`` for ``t > 0``. The connecting operator assembled
from this trace is then positive semidefinite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ParameterError
from .smoothing import gaussian_smooth
from .traces import KLO_TRACE, BoundaryTrace


@dataclass(frozen=True)
class KloForwardConfig:
    """``nx`` grid points, Courant number ``courant`` in (0, 1), ``t_final >= 2*length``."""

    nx: int = 1601
    courant: float = 0.4
    t_final: float | None = None

    def validate(self, length):
        if int(self.nx) != self.nx or self.nx < 8:
            raise ParameterError("nx must be an integer >= 8")
        if not 0 < self.courant < 1:
            raise ParameterError(f"Courant number {self.courant} violates 0 < eta < 1")
        t_final = 2 * length if self.t_final is None else self.t_final
        if t_final < 2 * length * (1 - 1e-12):
            raise ParameterError("t_final must be at least twice the profile length")
        return t_final


def simulate_klo(profile, cfg=KloForwardConfig(), c0=1.0):
    """Inlet trace ``H_0^n``, ``n = 0..round(t_final/dt)``, for a unit Neumann impulse."""
    t_final = cfg.validate(profile.length)
    nx = int(cfg.nx)
    lam = float(cfg.courant)
    dx = profile.length / (nx - 1)
    dt = lam * dx / c0
    n_samples = int(round(t_final / dt)) + 1

    x = np.linspace(0.0, profile.length, nx)
    A = profile(x)
    A_half = 0.5 * (A[1:] + A[:-1])
    gain = (c0 * dt) ** 2 / (A[1:-1] * dx * dx)
    gain0 = (c0 * dt) ** 2 / A[0] * 2.0 / dx
    edge = (lam - 1.0) / (lam + 1.0)

    H_prev = np.zeros(nx)
    H = np.zeros(nx)
    trace = np.zeros(n_samples)
    for n in range(n_samples - 1):
        flux = A_half * (H[1:] - H[:-1])  # times 1/dx, folded into the gains
        H_next = np.empty(nx)
        H_next[1:-1] = 2 * H[1:-1] - H_prev[1:-1] + gain * (flux[1:] - flux[:-1])
        inflow = A[0] / dt if n == 0 else 0.0
        H_next[0] = 2 * H[0] - H_prev[0] + gain0 * (flux[0] / dx - inflow)
        H_next[-1] = H[-2] + edge * (H_next[-2] - H[-1])
        if not (np.isfinite(H_next[0]) and np.isfinite(H_next[-1])):
            raise NumericalError(f"non-finite state at step {n}", step=n)
        H_prev, H = H, H_next
        trace[n + 1] = H[0]
    if not np.all(np.isfinite(H)):
        raise NumericalError("non-finite state at final step", step=n_samples - 2)
    return BoundaryTrace(dt=dt, samples=trace, kind=KLO_TRACE)


def suppress_ringing(trace, sigma_pts, A0=1.0):
    """Gaussian-filter the reflected part of a KLO trace, keeping the inlet step sharp.

    A discrete delta excites grid-scale dispersive oscillations that point
    sampling onto a coarser grid would alias. Filtering ``H + chi/A0``
    removes them while leaving the step at ``t = 0``, and the sample there,
    intact.
    """
    step = -np.ones(len(trace.samples)) / A0
    step[0] = 0.0
    v = trace.samples - step
    v[0] = 0.0
    out = gaussian_smooth(v, sigma_pts) + step
    out[0] = trace.samples[0]
    return trace.replace(out)
