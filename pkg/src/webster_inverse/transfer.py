"""Conversion between the SG and KLO boundary-data conventions.

A unit Neumann impulse at the inlet is a flow step of height ``-1``, so the
KLO trace is minus the running integral of the SG pressure response:

    H_KLO(t) = -chi(t) / A0 - A0 * int_0^t h_SG(s) ds,     t > 0,

where ``chi`` is the unit step carried by the direct (reflection-free) part
of the response. The two maps below move between the two representations.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .klo_invert import ConvolutionMap
from .smoothing import gaussian_smooth
from .traces import KLO_TRACE, SG_IMPULSE_RESPONSE, BoundaryTrace


def step_samples(n, A0=1.0):
    """Direct part of the KLO trace: ``0`` at ``t = 0``, ``-1/A0`` afterwards."""
    chi = np.ones(n)
    chi[0] = 0.0
    return -chi / A0


def sg_kernel_from_klo(trace, A0=1.0, smooth_sigma=0.0):
    """SG impulse response ``h = -(1/A0) dH/dt`` of a KLO trace, step removed.

    The step ``-chi/A0`` is subtracted first, so only the reflected part is
    smoothed (``smooth_sigma`` in samples) and differentiated. Central
    differences are used inside, one-sided differences at the ends.
    """
    if trace.kind != KLO_TRACE:
        raise ParameterError(f"expected a KLO trace, got {trace.kind!r}")
    if not A0 > 0:
        raise ParameterError("A0 must be > 0")
    n = len(trace.samples)
    v = trace.samples - step_samples(n, A0)
    v[0] = 0.0  # the reflected part vanishes at t = 0
    v = gaussian_smooth(v, smooth_sigma)
    h = -np.gradient(v, trace.dt, edge_order=1) / A0
    return BoundaryTrace(dt=trace.dt, samples=h, kind=SG_IMPULSE_RESPONSE, impulse_removed=True)


def klo_kernel_from_sg(h_sg, A0=1.0, include_step=True):
    """Scaled KLO kernel ``h_hat_n = dt * H_KLO(t_n)`` built from SG samples.

    The reflected part is ``-A0 * dt**2 * c_n`` with the running sums
    ``c_n = sum_{m <= n} h_m``; ``include_step`` adds the direct step
    ``dt * (-chi_n / A0)``.
    """
    if h_sg.kind != SG_IMPULSE_RESPONSE or not h_sg.impulse_removed:
        raise ParameterError("expected an impulse-removed SG response")
    dt = h_sg.dt
    c = np.cumsum(h_sg.samples)
    kernel = -A0 * dt * dt * c
    if include_step:
        kernel = kernel + dt * step_samples(len(c), A0)
    return kernel


def ndmap_from_sg(h_sg, A0=1.0, dt=None, include_step=True):
    """Neumann-to-Dirichlet convolution map ``Lam_SG`` from an SG response.

    ``dt`` of ``None`` keeps the response's own grid; otherwise the response
    is resampled first. The result plugs into
    :class:`klo_invert.ConnectingOperator`.
    """
    if dt is not None and abs(dt - h_sg.dt) > 1e-12 * dt:
        h_sg = h_sg.resample(dt)
    return ConvolutionMap(klo_kernel_from_sg(h_sg, A0, include_step))


def klo_trace_from_sg(h_sg, A0=1.0, include_step=True):
    """The same data as :func:`ndmap_from_sg`, unscaled, as a KLO trace."""
    kernel = klo_kernel_from_sg(h_sg, A0, include_step)
    return BoundaryTrace(dt=h_sg.dt, samples=kernel / h_sg.dt, kind=KLO_TRACE)
