"""Inlet pressure time series shared by the forward solvers and inversions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _csvio
from .errors import ParameterError

SG_IMPULSE_RESPONSE = "sg_impulse_response"
KLO_TRACE = "klo_trace"
TRACE_KINDS = (SG_IMPULSE_RESPONSE, KLO_TRACE)


@dataclass
class BoundaryTrace:
    """Samples ``H(0, k*dt)``, ``k = 0, 1, ...`` of an inlet pressure record.

    ``kind`` is :data:`SG_IMPULSE_RESPONSE` (response to a flow impulse) or
    :data:`KLO_TRACE` (response to a Neumann impulse). ``impulse_removed``
    marks SG responses whose direct delta has been subtracted.
    """

    dt: float
    samples: np.ndarray
    kind: str = SG_IMPULSE_RESPONSE
    impulse_removed: bool = False

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        self.dt = float(self.dt)
        if not self.dt > 0:
            raise ParameterError("trace dt must be > 0")
        if self.kind not in TRACE_KINDS:
            raise ParameterError(f"unknown trace kind {self.kind!r}")
        if self.samples.ndim != 1:
            raise ParameterError("trace samples must be 1-D")
        if not np.all(np.isfinite(self.samples)):
            raise ParameterError("trace samples must be finite")

    def __len__(self):
        return len(self.samples)

    @property
    def times(self):
        return np.arange(len(self.samples)) * self.dt

    @property
    def duration(self):
        return (len(self.samples) - 1) * self.dt

    def replace(self, samples=None, **changes):
        return BoundaryTrace(
            dt=changes.get("dt", self.dt),
            samples=self.samples if samples is None else samples,
            kind=changes.get("kind", self.kind),
            impulse_removed=changes.get("impulse_removed", self.impulse_removed),
        )

    def resample(self, dt, n_samples=None):
        """Linear interpolation onto the grid ``k*dt``; by default up to the record end."""
        if not dt > 0:
            raise ParameterError("dt must be > 0")
        if n_samples is None:
            n_samples = int(np.floor(self.duration / dt + 1e-9)) + 1
        t = np.arange(n_samples) * dt
        if t[-1] > self.duration * (1 + 1e-12) + 1e-12:
            raise ParameterError("resampling grid extends beyond the record")
        return self.replace(np.interp(t, self.times, self.samples), dt=dt)

    def to_csv(self, path):
        meta = {"dt": self.dt, "kind": self.kind, "impulse_removed": str(self.impulse_removed).lower()}
        _csvio.write_columns(path, {"t": self.times, "H0": self.samples}, meta)

    @classmethod
    def from_csv(cls, path):
        meta, cols = _csvio.read_columns(path)
        if "H0" not in cols:
            raise ParameterError(f"{path}: expected columns t,H0")
        if "dt" in meta:
            dt = float(meta["dt"])
        else:
            t = cols["t"]
            dt = float(t[1] - t[0])
        return cls(
            dt=dt,
            samples=cols["H0"],
            kind=meta.get("kind", SG_IMPULSE_RESPONSE),
            impulse_removed=meta.get("impulse_removed", "false").lower() == "true",
        )
