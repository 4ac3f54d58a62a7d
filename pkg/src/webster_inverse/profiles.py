"""Random cross-sectional area profiles drawn as log-Gaussian processes.

The log-area ``g = ln A`` is a zero-mean Gaussian process on a uniform grid
with a squared-exponential, Matérn or hybrid covariance. Samples are mapped
through ``exp``, normalised so that ``A(0) = 1`` and clipped to
``[A_min, A_max]``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _csvio
from ._rng import PROFILE_STREAM, generator
from .errors import NumericalError, ParameterError

KINDS = ("se", "matern", "hybrid")
MATERN_NUS = (0.5, 1.5, 2.5)
DEFAULT_BOUNDS = (0.5, 2.0)
DEFAULT_LENGTH = 2.0
DEFAULT_POINTS = 401
JITTER = 1e-10


@dataclass(frozen=True)
class KernelSpec:
    """Covariance model for the log-area field.

    ``lengthscale``, ``sigma`` and ``nu`` configure the ``se`` and ``matern``
    kinds. The ``hybrid`` kind sums a smooth SE part, a rough Matérn part and
    ``n_rect`` rectangular bumps whose widths and heights are drawn
    uniformly from ``width_range`` and ``height_range``.
    """

    kind: str = "se"
    lengthscale: float = 0.12
    sigma: float = 0.20
    nu: float = 1.5
    smooth_lengthscale: float = 0.12
    smooth_sigma: float = 0.20
    rough_lengthscale: float = 0.05
    rough_sigma: float = 0.12
    rough_nu: float = 1.5
    n_rect: int = 5
    width_range: tuple = (0.02, 0.10)
    height_range: tuple = (-0.35, 0.35)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown kernel kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "width_range", tuple(float(w) for w in self.width_range))
        object.__setattr__(self, "height_range", tuple(float(h) for h in self.height_range))
        for name in ("lengthscale", "smooth_lengthscale", "rough_lengthscale"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be > 0")
        for name in ("sigma", "smooth_sigma", "rough_sigma"):
            if not getattr(self, name) >= 0:
                raise ParameterError(f"{name} must be >= 0")
        for name in ("nu", "rough_nu"):
            if float(getattr(self, name)) not in MATERN_NUS:
                raise ParameterError(f"{name}={getattr(self, name)} unsupported; closed forms exist for {MATERN_NUS}")
        if int(self.n_rect) != self.n_rect or self.n_rect < 0:
            raise ParameterError("n_rect must be a non-negative integer")
        w_lo, w_hi = self.width_range
        h_lo, h_hi = self.height_range
        if not (0 < w_lo <= w_hi):
            raise ParameterError("width_range must satisfy 0 < w_min <= w_max")
        if not h_lo <= h_hi:
            raise ParameterError("height_range must satisfy h_min <= h_max")

    @classmethod
    def se(cls, lengthscale=0.12, sigma=0.20):
        return cls(kind="se", lengthscale=lengthscale, sigma=sigma)

    @classmethod
    def matern(cls, nu=1.5, lengthscale=0.12, sigma=0.20):
        return cls(kind="matern", nu=nu, lengthscale=lengthscale, sigma=sigma)

    @classmethod
    def hybrid(cls, **kwargs):
        return cls(kind="hybrid", **kwargs)

    def metadata(self):
        """Flat ``key -> value`` description used in CSV comment lines."""
        if self.kind == "se":
            return {"kind": "se", "lengthscale": self.lengthscale, "sigma": self.sigma}
        if self.kind == "matern":
            return {"kind": "matern", "lengthscale": self.lengthscale, "sigma": self.sigma, "nu": self.nu}
        return {
            "kind": "hybrid",
            "smooth_lengthscale": self.smooth_lengthscale,
            "smooth_sigma": self.smooth_sigma,
            "rough_lengthscale": self.rough_lengthscale,
            "rough_sigma": self.rough_sigma,
            "rough_nu": self.rough_nu,
            "n_rect": self.n_rect,
            "width_range": f"{self.width_range[0]!r}:{self.width_range[1]!r}",
            "height_range": f"{self.height_range[0]!r}:{self.height_range[1]!r}",
        }

    @classmethod
    def from_metadata(cls, meta):
        kind = meta["kind"]
        kwargs = {"kind": kind}
        for key, value in meta.items():
            if key in ("kind",) or key not in cls.__dataclass_fields__:
                continue
            if key.endswith("_range"):
                lo, hi = value.split(":")
                kwargs[key] = (float(lo), float(hi))
            elif key == "n_rect":
                kwargs[key] = int(value)
            else:
                kwargs[key] = float(value)
        return cls(**kwargs)


@dataclass
class AreaProfile:
    """Area values ``A_i`` on the uniform grid ``x_0 = 0 < ... < x_N = length``."""

    x: np.ndarray
    values: np.ndarray
    seed: object = None
    generator: object = "external"
    length: float = field(default=None)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.x.ndim != 1 or self.x.shape != self.values.shape:
            raise ParameterError("grid and values must be 1-D arrays of equal length")
        if len(self.x) < 2:
            raise ParameterError("a profile needs at least two grid points")
        if self.length is None:
            self.length = float(self.x[-1])

    @property
    def dx(self):
        return (self.x[-1] - self.x[0]) / (len(self.x) - 1)

    def __call__(self, xq):
        """Linear interpolation of the profile at ``xq``; constant beyond ``length``."""
        return np.interp(xq, self.x, self.values)

    def to_csv(self, path, value_column="A"):
        """Write columns ``x`` and ``value_column`` (``A_rec`` for reconstructions)."""
        meta = {}
        if isinstance(self.generator, KernelSpec):
            meta.update(self.generator.metadata())
        else:
            meta["kind"] = str(self.generator)
        if self.seed is not None:
            seed = self.seed
            meta["seed"] = ",".join(str(s) for s in seed) if isinstance(seed, (tuple, list)) else str(seed)
        _csvio.write_columns(path, {"x": self.x, value_column: self.values}, meta)

    @classmethod
    def from_csv(cls, path):
        meta, cols = _csvio.read_columns(path)
        name = "A" if "A" in cols else "A_rec"
        if "x" not in cols or name not in cols:
            raise ParameterError(f"{path}: expected columns x,A or x,A_rec")
        gen = "external"
        if meta.get("kind") in KINDS:
            gen = KernelSpec.from_metadata(meta)
        seed = meta.get("seed")
        if seed is not None:
            parts = tuple(int(s) for s in seed.split(","))
            seed = parts[0] if len(parts) == 1 else parts
        return cls(cols["x"], cols[name], seed=seed, generator=gen)


def uniform_grid(length=DEFAULT_LENGTH, n_points=DEFAULT_POINTS):
    if n_points < 3:
        raise ParameterError("grid needs at least 3 points (N >= 2)")
    if not length > 0:
        raise ParameterError("length must be > 0")
    return np.linspace(0.0, length, n_points)


def _se(r, lengthscale, sigma):
    return sigma**2 * np.exp(-0.5 * (r / lengthscale) ** 2)


def _matern(r, lengthscale, sigma, nu):
    if nu == 0.5:
        return sigma**2 * np.exp(-r / lengthscale)
    if nu == 1.5:
        s = math.sqrt(3.0) * r / lengthscale
        return sigma**2 * (1.0 + s) * np.exp(-s)
    if nu == 2.5:
        s = math.sqrt(5.0) * r / lengthscale
        return sigma**2 * (1.0 + s + s * s / 3.0) * np.exp(-s)
    raise ParameterError(f"Matern nu={nu} unsupported; closed forms exist for {MATERN_NUS}")


def kernel_eval(spec, r):
    """Covariance ``k(r)`` of the log-area field at distance ``r >= 0``.

    For the hybrid kind this is the covariance of the Gaussian part only
    (smooth SE plus rough Matérn); the bumps are deterministic given the
    stream and do not enter ``k``.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ParameterError("distance r must be >= 0")
    if spec.kind == "se":
        out = _se(r, spec.lengthscale, spec.sigma)
    elif spec.kind == "matern":
        out = _matern(r, spec.lengthscale, spec.sigma, float(spec.nu))
    else:
        out = _se(r, spec.smooth_lengthscale, spec.smooth_sigma) + _matern(
            r, spec.rough_lengthscale, spec.rough_sigma, float(spec.rough_nu)
        )
    return float(out) if out.ndim == 0 else out


def covariance_matrix(spec, x):
    x = np.asarray(x, dtype=float)
    return kernel_eval(spec, np.abs(x[:, None] - x[None, :]))


@functools.lru_cache(maxsize=16)
def _cholesky_cached(spec, x_key):
    x = np.frombuffer(x_key, dtype=float)
    cov = covariance_matrix(spec, x)
    n = len(x)
    if not cov.any():
        # zero-amplitude field: g is identically zero, no jitter noise
        factor = np.zeros_like(cov)
        factor.setflags(write=False)
        return factor
    for jitter in (JITTER, 100 * JITTER):
        try:
            factor = np.linalg.cholesky(cov + jitter * np.eye(n))
        except np.linalg.LinAlgError:
            continue
        factor.setflags(write=False)
        return factor
    raise NumericalError(f"Cholesky factorisation failed for {spec.kind} kernel on {n} points")


def cholesky_factor(spec, x):
    """Lower Cholesky factor of the jittered covariance on grid ``x``.

    Retries once with the jitter multiplied by 100 before giving up.
    """
    return _cholesky_cached(spec, np.ascontiguousarray(x, dtype=float).tobytes())


def draw_bumps(spec, length, rng):
    """Centres, widths and heights of the hybrid rectangular bumps."""
    bumps = []
    for _ in range(int(spec.n_rect)):
        w = rng.uniform(*spec.width_range)
        c = rng.uniform(w / 2, length - w / 2)
        h = rng.uniform(*spec.height_range)
        bumps.append((c, w, h))
    return bumps


def rect_bumps(x, bumps):
    """Sum of ``h * indicator([c - w/2, c + w/2])`` over ``(c, w, h)`` bumps."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    tol = 1e-9 * (x[-1] - x[0]) / max(len(x) - 1, 1)
    for c, w, h in bumps:
        out += h * ((x >= c - w / 2 - tol) & (x <= c + w / 2 + tol))
    return out


def sample_log_area(spec, x, rng, bumps=None):
    """One draw of ``g = ln A`` before normalisation and clipping."""
    x = np.asarray(x, dtype=float)
    factor = cholesky_factor(spec, x)
    z = rng.standard_normal(len(x))
    g = factor @ z
    if spec.kind == "hybrid":
        if bumps is None:
            bumps = draw_bumps(spec, float(x[-1] - x[0]), rng)
        g = g + rect_bumps(x - x[0], bumps)
    return g


def clip_area(values, bounds=DEFAULT_BOUNDS):
    return np.clip(values, bounds[0], bounds[1])


def sample_area(spec, grid, seed, bounds=DEFAULT_BOUNDS, A0=1.0, bumps=None):
    """Draw an :class:`AreaProfile` from the log-Gaussian model ``spec``.

    ``seed`` is an int or a tuple of ints (e.g. ``(master_seed, i)`` for
    realisation ``i`` of an ensemble). ``bumps`` overrides the random hybrid
    bumps with explicit ``(centre, width, height)`` triples.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 3:
        raise ParameterError("grid needs at least 3 points (N >= 2)")
    steps = np.diff(grid)
    if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        raise ParameterError("grid must be uniform and strictly increasing")
    lo, hi = bounds
    if not (0 < lo <= 1 <= hi):
        raise ParameterError("bounds must satisfy 0 < A_min <= 1 <= A_max")
    rng = generator(seed, PROFILE_STREAM)
    g = sample_log_area(spec, grid, rng, bumps=bumps)
    area = A0 * np.exp(g)
    area = area / area[0]
    area = clip_area(area, bounds)
    return AreaProfile(grid.copy(), area, seed=seed, generator=spec)


def constant_profile(length=DEFAULT_LENGTH, n_points=DEFAULT_POINTS, value=1.0):
    x = uniform_grid(length, n_points)
    return AreaProfile(x, np.full_like(x, value), generator="external")
