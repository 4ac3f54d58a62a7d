"""Paired Monte Carlo comparison of the two reconstruction methods.

Each realisation draws a profile from its own random stream, simulates the
source method's forward problem on a fine grid, resamples the trace to the
coarse measurement grid and then, for every noise level, perturbs the data
once, converts them to the other convention and reconstructs with both
methods. Errors are recorded against the true profile on the SG grid.
"""

from __future__ import annotations

import configparser
import json
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import _csvio
from ._rng import MIXTURE_STREAM, generator
from .errors import ParameterError, WebsterError
from .forward_klo import KloForwardConfig, simulate_klo, suppress_ringing
from .forward_sg import SgForwardConfig, simulate_sg
from .klo_invert import KloInverseConfig, reconstruct_klo
from .metrics import CSV_HEADER, ErrorRecord, error_report, resample
from .noise import add_klo_noise, add_sg_noise, effective_perturbation, klo_schedules
from .profiles import KernelSpec, sample_area, uniform_grid
from .sg_invert import SgInverseConfig, reconstruct_sg
from .stats import TABLE_COLUMNS, summarize, table_rows
from .traces import KLO_TRACE
from .transfer import klo_trace_from_sg, sg_kernel_from_klo

TRANSFERS = ("sg_to_klo", "klo_to_sg")
METHODS = ("sg", "klo")


@dataclass(frozen=True)
class ExperimentConfig:
    """Every setting of a comparison run; config-file keys use the same names."""

    # [experiment]
    master_seed: int = 0
    n_realisations: int = 10
    length: float = 2.0
    deltas: tuple = (0.0, 0.01, 0.05, 0.10)
    transfer: str = "sg_to_klo"
    coarse_points: int = 401
    fine_ratio: int = 4
    weight_se: float = 1.0
    weight_matern: float = 1.0
    weight_hybrid: float = 1.0
    a_min: float = 0.5
    a_max: float = 2.0
    # [se]
    se_lengthscale: float = 0.12
    se_sigma: float = 0.20
    # [matern]
    matern_lengthscale: float = 0.12
    matern_sigma: float = 0.20
    matern_nu: float = 1.5
    # [hybrid]
    hybrid_smooth_lengthscale: float = 0.12
    hybrid_smooth_sigma: float = 0.20
    hybrid_rough_lengthscale: float = 0.05
    hybrid_rough_sigma: float = 0.12
    hybrid_rough_nu: float = 1.5
    hybrid_n_rect: int = 5
    hybrid_width_min: float = 0.02
    hybrid_width_max: float = 0.10
    hybrid_height_min: float = -0.35
    hybrid_height_max: float = 0.35
    # [sg]
    sg_phi_noiseless: float = 1e-10
    sg_phi_noisy: float = 1e-6
    sg_quadrature: str = "gregory4"
    sg_solver: str = "levinson_woodbury"
    sg_impulse_width: int = 1
    # [klo]
    klo_courant: float = 0.4
    klo_x_min: float = 0.0
    klo_derivative: str = "forward"
    klo_sigma_ax: float = 0.0
    klo_solver: str = "bordered"

    def __post_init__(self):
        if self.n_realisations < 1:
            raise ParameterError("n_realisations must be >= 1")
        if self.master_seed < 0:
            raise ParameterError("master_seed must be >= 0")
        if self.transfer not in TRANSFERS:
            raise ParameterError(f"transfer must be one of {TRANSFERS}")
        if self.fine_ratio < 2:
            raise ParameterError("the forward grid must be at least 2x finer (fine_ratio >= 2)")
        if self.coarse_points < 17:
            raise ParameterError("coarse_points must be >= 17")
        if any(d < 0 for d in self.deltas) or not self.deltas:
            raise ParameterError("deltas must be a non-empty list of values >= 0")
        if min(self.weights) < 0 or sum(self.weights) <= 0:
            raise ParameterError("mixture weights must be >= 0 and not all zero")
        if not self.length > 0:
            raise ParameterError("length must be > 0")
        self.specs  # builds, and so validates, the kernel specs
        SgInverseConfig(quadrature=self.sg_quadrature, solver=self.sg_solver)
        KloInverseConfig(derivative=self.klo_derivative, solver=self.klo_solver, x_min=self.klo_x_min)

    @property
    def weights(self):
        return (self.weight_se, self.weight_matern, self.weight_hybrid)

    @property
    def bounds(self):
        return (self.a_min, self.a_max)

    @property
    def specs(self):
        return {
            "se": KernelSpec.se(self.se_lengthscale, self.se_sigma),
            "matern": KernelSpec.matern(self.matern_nu, self.matern_lengthscale, self.matern_sigma),
            "hybrid": KernelSpec.hybrid(
                smooth_lengthscale=self.hybrid_smooth_lengthscale,
                smooth_sigma=self.hybrid_smooth_sigma,
                rough_lengthscale=self.hybrid_rough_lengthscale,
                rough_sigma=self.hybrid_rough_sigma,
                rough_nu=self.hybrid_rough_nu,
                n_rect=self.hybrid_n_rect,
                width_range=(self.hybrid_width_min, self.hybrid_width_max),
                height_range=(self.hybrid_height_min, self.hybrid_height_max),
            ),
        }

    @property
    def dt(self):
        """Coarse time step; equal to the coarse spacing since the wave speed is 1."""
        return self.length / (self.coarse_points - 1)

    @property
    def n_samples(self):
        return 2 * (self.coarse_points - 1) + 1


# ---------------------------------------------------------------- config files

_SECTIONS = ("experiment", "se", "matern", "hybrid", "sg", "klo")


def _key(section, name):
    return name if section == "experiment" else f"{section}_{name}"


def _convert(fld, text):
    text = text.strip()
    if fld.name == "deltas":
        return tuple(float(v) for v in text.replace(",", " ").split())
    kind = type(fld.default)
    if kind is bool:
        return text.lower() in ("1", "true", "yes", "on")
    return kind(float(text)) if kind is int else kind(text)


def parse_config(text):
    """:class:`ExperimentConfig` from ``[section]`` / ``key = value`` text.

    Sections are ``experiment``, ``se``, ``matern``, ``hybrid``, ``sg`` and
    ``klo``; keys inside a method or generator section drop the section
    prefix of the field name (``[klo] x_min`` sets ``klo_x_min``). Unknown
    sections or keys raise :class:`ParameterError`.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ParameterError(f"malformed config: {exc}") from exc
    known = {f.name: f for f in fields(ExperimentConfig)}
    values = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ParameterError(f"unknown config section [{section}]")
        for name, raw in parser.items(section):
            key = _key(section, name)
            if key not in known:
                raise ParameterError(f"unknown config key {name!r} in [{section}]")
            try:
                values[key] = _convert(known[key], raw)
            except ValueError as exc:
                raise ParameterError(f"bad value for {name} in [{section}]: {raw!r}") from exc
    return ExperimentConfig(**values)


def load_config(path):
    return parse_config(Path(path).read_text())


def format_config(cfg):
    """Config-file text that :func:`parse_config` maps back to ``cfg``."""
    lines = []
    for section in _SECTIONS:
        lines.append(f"[{section}]")
        for f in fields(cfg):
            prefix = "" if section == "experiment" else section + "_"
            is_here = f.name.startswith(prefix) if prefix else not any(f.name.startswith(s + "_") for s in _SECTIONS[1:])
            if not is_here:
                continue
            value = getattr(cfg, f.name)
            text = ", ".join(repr(float(v)) for v in value) if f.name == "deltas" else str(value)
            lines.append(f"{f.name[len(prefix):]} = {text}")
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------- pipeline


def choose_generator(cfg, i):
    """Generator kind of realisation ``i`` from the mixture weights."""
    w = np.asarray(cfg.weights, dtype=float)
    u = generator((cfg.master_seed, i), MIXTURE_STREAM).random()
    kinds = ("se", "matern", "hybrid")
    return kinds[int(np.searchsorted(np.cumsum(w) / w.sum(), u, side="right"))]


def realisation_profile(cfg, i):
    kind = choose_generator(cfg, i)
    grid = uniform_grid(cfg.length, cfg.coarse_points)
    return kind, sample_area(cfg.specs[kind], grid, (cfg.master_seed, i), bounds=cfg.bounds)


def forward_sg_coarse(cfg, profile):
    nx = cfg.fine_ratio * (cfg.coarse_points - 1)
    fine = simulate_sg(profile, SgForwardConfig(nx=nx, impulse_width=cfg.sg_impulse_width))
    return fine.resample(cfg.dt, cfg.n_samples)


def forward_klo_coarse(cfg, profile):
    nx = cfg.fine_ratio * (cfg.coarse_points - 1) + 1
    fine = simulate_klo(profile, KloForwardConfig(nx=nx, courant=cfg.klo_courant))
    fine = suppress_ringing(fine, 0.5 * cfg.dt / fine.dt)
    return fine.resample(cfg.dt, cfg.n_samples)


def klo_config(cfg, delta, kernel):
    n_r = cfg.coarse_points - 1
    eps = effective_perturbation(kernel, delta) if delta > 0 else None
    alpha, sigma = klo_schedules(delta, n_r, eps)
    grid = tuple(uniform_grid(cfg.length, cfg.coarse_points))
    return KloInverseConfig(
        alpha=alpha, n_r=n_r, sigma_kr=sigma, sigma_ax=cfg.klo_sigma_ax, bounds=cfg.bounds,
        x_min=cfg.klo_x_min, derivative=cfg.klo_derivative, solver=cfg.klo_solver, x_grid=grid,
    )  # fmt: skip


def sg_config(cfg, delta):
    phi = cfg.sg_phi_noiseless if delta == 0 else cfg.sg_phi_noisy
    return SgInverseConfig(phi=phi, quadrature=cfg.sg_quadrature, solver=cfg.sg_solver)


def reconstruct_pair(cfg, source, delta, seed):
    """Both reconstructions from one noisy copy of the ``source`` trace."""
    if source.kind == KLO_TRACE:
        kernel = add_klo_noise(source.dt * source.samples, delta, seed)
        klo_data = source.replace(kernel / source.dt)
        kcfg = klo_config(cfg, delta, source.dt * source.samples)
        sg_data = sg_kernel_from_klo(klo_data, smooth_sigma=kcfg.sigma_kr)
    else:
        sg_data = add_sg_noise(source, delta, seed)
        klo_data = klo_trace_from_sg(sg_data)
        kcfg = klo_config(cfg, delta, source.dt * klo_trace_from_sg(source).samples)
    return reconstruct_sg(sg_data, sg_config(cfg, delta)), reconstruct_klo(klo_data, kcfg)


@dataclass
class RealisationResult:
    index: int
    generator: str
    records: list = field(default_factory=list)
    failure: str | None = None


def run_realisation(cfg, i):
    """Error records of realisation ``i`` for every noise level, or the failure reason."""
    kind = "unknown"
    try:
        kind, truth = realisation_profile(cfg, i)
        if cfg.transfer == "sg_to_klo":
            source = forward_sg_coarse(cfg, truth)
        else:
            source = forward_klo_coarse(cfg, truth)
        grid = truth.x
        records = []
        for delta in cfg.deltas:
            rec_sg, rec_klo = reconstruct_pair(cfg, source, float(delta), (cfg.master_seed, i))
            for method, rec in zip(METHODS, (rec_sg, rec_klo)):
                err = error_report(truth, resample(rec, grid), method=method, delta=float(delta), realisation=i, generator=kind)
                if not all(np.isfinite(getattr(err, k)) for k in ("l2_abs", "l2_rel", "h1_abs", "h1_rel")):
                    raise WebsterError(f"non-finite error for {method} at delta={delta}")
                records.append(err)
        return RealisationResult(i, kind, records)
    except (WebsterError, np.linalg.LinAlgError, FloatingPointError) as exc:
        return RealisationResult(i, kind, [], failure=f"{type(exc).__name__}: {exc}")


def _run_one(args):
    return run_realisation(*args)


def run_realisations(cfg, jobs=1):
    """All realisations in index order; ``jobs > 1`` uses a process pool."""
    tasks = [(cfg, i) for i in range(cfg.n_realisations)]
    if jobs <= 1:
        return [_run_one(t) for t in tasks]
    ctx = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as pool:
        return list(pool.map(_run_one, tasks, chunksize=1))


@dataclass
class ExperimentResult:
    records: list
    reports: list
    failures: list


def run_experiment(cfg, jobs=1):
    """Run the paired study and summarise it per ``(delta, metric)``."""
    results = run_realisations(cfg, jobs)
    records = [r for res in results for r in res.records]
    failures = [(res.index, res.failure) for res in results if res.failure]
    reports = summarize(records) if records else []
    return ExperimentResult(records, reports, failures)


# ---------------------------------------------------------------- output


def _fmt(v):
    return _csvio.fmt(v)


def sort_records(records):
    order = {m: k for k, m in enumerate(METHODS)}
    return sorted(records, key=lambda r: (r.realisation, r.delta, order.get(r.method, 99)))


def write_errors_csv(path, records):
    lines = [",".join(CSV_HEADER)]
    for rec in sort_records(records):
        lines.append(",".join(_fmt(v) for v in rec.as_row()))
    Path(path).write_text("\n".join(lines) + "\n")


def read_errors_csv(path):
    text = Path(path).read_text().splitlines()
    header = text[0].split(",")
    if tuple(header) != CSV_HEADER:
        raise ParameterError(f"{path}: expected header {','.join(CSV_HEADER)}")
    out = []
    for line in text[1:]:
        if not line.strip():
            continue
        row = dict(zip(header, line.split(",")))
        out.append(
            ErrorRecord(
                *(float(row[k]) for k in ("l2_abs", "l2_rel", "h1_abs", "h1_rel")),
                method=row["method"], delta=float(row["delta"]),
                realisation=int(row["realisation"]), generator=row["generator"],
            )  # fmt: skip
        )
    return out


def write_reports(out_dir, reports, failures=(), n_realisations=None):
    out = Path(out_dir)
    payload = {
        "n_realisations": n_realisations,
        "n_failed": len(failures),
        "failures": [{"realisation": i, "reason": why} for i, why in failures],
        "reports": [r.as_dict() for r in reports],
    }
    (out / "report.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    lines = [",".join(TABLE_COLUMNS)] + [",".join(_fmt(v) for v in row) for row in table_rows(reports)]
    (out / "table8.csv").write_text("\n".join(lines) + "\n")


def write_outputs(out_dir, cfg, result):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_errors_csv(out / "errors.csv", result.records)
    write_reports(out, result.reports, result.failures, cfg.n_realisations)
    (out / "config.txt").write_text(format_config(cfg))


def with_seed(cfg, seed):
    return cfg if seed is None else replace(cfg, master_seed=int(seed))

