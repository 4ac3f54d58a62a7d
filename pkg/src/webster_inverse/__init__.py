"""Reconstruction of duct area profiles from inlet pressure records.

Two inversion methods are provided: a Fredholm control-equation method
working on impulse responses (SG) and a boundary-control method working on
the Neumann-to-Dirichlet map (KLO), together with the forward solvers that
generate their data, noise models, error metrics, paired statistics and a
Monte Carlo comparison harness.
"""

from .errors import DomainRangeError, NumericalError, PairingError, ParameterError, WebsterError
from .forward_klo import KloForwardConfig, simulate_klo
from .forward_sg import SgForwardConfig, simulate_sg
from .harness import ExperimentConfig, parse_config, run_experiment
from .klo_invert import KloInverseConfig, reconstruct_klo
from .metrics import ErrorRecord, error_report
from .profiles import AreaProfile, KernelSpec, sample_area, uniform_grid
from .sg_invert import SgInverseConfig, reconstruct_sg
from .stats import StatReport, summarize
from .traces import BoundaryTrace

__version__ = "0.1.0"

__all__ = [
    "AreaProfile", "BoundaryTrace", "DomainRangeError", "ErrorRecord", "ExperimentConfig",
    "KernelSpec", "KloForwardConfig", "KloInverseConfig", "NumericalError", "PairingError",
    "ParameterError", "SgForwardConfig", "SgInverseConfig", "StatReport", "WebsterError",
    "error_report", "parse_config", "reconstruct_klo", "reconstruct_sg", "run_experiment",
    "sample_area", "simulate_klo", "simulate_sg", "summarize", "uniform_grid",
]  # fmt: skip
