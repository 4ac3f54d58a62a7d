import numpy as np
import pytest

from webster_inverse.harness import ExperimentConfig, forward_klo_coarse, forward_sg_coarse
from webster_inverse.profiles import KernelSpec, constant_profile, sample_area, uniform_grid


@pytest.fixture(scope="session")
def cfg():
    return ExperimentConfig()


@pytest.fixture(scope="session")
def se_profile(cfg):
    grid = uniform_grid(cfg.length, cfg.coarse_points)
    return sample_area(KernelSpec.se(), grid, seed=(7, 3))


@pytest.fixture(scope="session")
def uniform_profile(cfg):
    return constant_profile(cfg.length, cfg.coarse_points)


@pytest.fixture(scope="session")
def sg_trace(cfg, se_profile):
    """Coarse impulse-removed SG response of ``se_profile`` (forward run on the 4x grid)."""
    return forward_sg_coarse(cfg, se_profile)


@pytest.fixture(scope="session")
def klo_trace(cfg, se_profile):
    return forward_klo_coarse(cfg, se_profile)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion.

    The callable prints the line immediately (visible with ``-s``) and keeps
    it for the terminal summary.
    """

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
