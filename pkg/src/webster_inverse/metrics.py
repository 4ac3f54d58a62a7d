"""L2 and H1 reconstruction errors on a common grid."""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainRangeError
from .profiles import AreaProfile

ERROR_FIELDS = ("l2_abs", "l2_rel", "h1_abs", "h1_rel")
CSV_HEADER = ("realisation", "generator", "delta", "method") + ERROR_FIELDS


class UndefinedRelativeError(RuntimeWarning):
    pass


@dataclass
class ErrorRecord:
    l2_abs: float
    l2_rel: float
    h1_abs: float
    h1_rel: float
    method: str = ""
    delta: float = 0.0
    realisation: int = -1
    generator: str = ""

    def as_row(self):
        d = asdict(self)
        return [d[k] for k in CSV_HEADER]


def resample(profile, target_grid):
    """Linear interpolation of ``profile`` onto ``target_grid`` inside ``[0, length]``."""
    xg = np.asarray(target_grid, dtype=float)
    lo, hi = profile.x[0], profile.x[-1]
    tol = 1e-9 * max(1.0, abs(hi))
    if xg.min() < lo - tol or xg.max() > hi + tol:
        raise DomainRangeError(f"target grid [{xg.min()}, {xg.max()}] leaves the profile domain [{lo}, {hi}]")
    return AreaProfile(xg, np.interp(xg, profile.x, profile.values), seed=profile.seed, generator=profile.generator)


def l2_norm(values, dx):
    """Trapezoid-weighted discrete L2 norm over the grid interval."""
    v = np.asarray(values, dtype=float) ** 2
    return float(np.sqrt(dx * (v.sum() - 0.5 * (v[0] + v[-1]))))


def derivative(values, dx):
    """Central differences inside, one-sided at the two ends."""
    return np.gradient(np.asarray(values, dtype=float), dx, edge_order=1)


def h1_norm(values, dx):
    return float(np.hypot(l2_norm(values, dx), l2_norm(derivative(values, dx), dx)))


def error_report(truth, rec, **tags):
    """Absolute and relative L2/H1 errors of ``rec`` against ``truth``.

    Both profiles must share a grid (see :func:`resample`). A zero truth
    norm yields ``nan`` relative errors and a warning.
    """
    if truth.x.shape != rec.x.shape or not np.allclose(truth.x, rec.x, rtol=0, atol=1e-12):
        raise DomainRangeError("profiles must be sampled on the same grid")
    dx = truth.dx
    e = truth.values - rec.values
    l2 = l2_norm(e, dx)
    h1 = h1_norm(e, dx)
    n_l2 = l2_norm(truth.values, dx)
    n_h1 = h1_norm(truth.values, dx)
    if n_l2 == 0:
        warnings.warn("zero truth norm: relative errors undefined", UndefinedRelativeError, stacklevel=2)
        l2_rel = h1_rel = float("nan")
    else:
        l2_rel, h1_rel = l2 / n_l2, h1 / n_h1
    return ErrorRecord(l2, l2_rel, h1, h1_rel, **tags)
