import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from webster_inverse.errors import DomainRangeError
from webster_inverse.metrics import (
    CSV_HEADER,
    UndefinedRelativeError,
    derivative,
    error_report,
    h1_norm,
    l2_norm,
    resample,
)
from webster_inverse.profiles import AreaProfile, KernelSpec, sample_area, uniform_grid


def prof(x, v):
    return AreaProfile(np.asarray(x, float), np.asarray(v, float))


def test_resample_identity(se_profile):
    out = resample(se_profile, se_profile.x)
    assert np.array_equal(out.values, se_profile.values)


def test_resample_exact_for_affine():
    x = uniform_grid(2.0, 11)
    p = prof(x, 0.3 * x + 1.2)
    sub = np.linspace(0.13, 1.91, 37)
    assert np.allclose(resample(p, sub).values, 0.3 * sub + 1.2, rtol=0, atol=1e-14)


def test_resample_error_bound_quadratic():
    x = uniform_grid(2.0, 21)
    dx = x[1] - x[0]
    fine = np.linspace(0, 2, 2001)
    err = np.max(np.abs(resample(prof(x, x**2), fine).values - fine**2))
    assert err <= dx**2 / 4 + 1e-15


def test_resample_outside_domain():
    with pytest.raises(DomainRangeError):
        resample(prof([0, 1, 2], [1, 1, 1]), [0.0, 2.5])


def test_identical_profiles_have_zero_error(se_profile):
    err = error_report(se_profile, se_profile)
    assert (err.l2_abs, err.l2_rel, err.h1_abs, err.h1_rel) == (0, 0, 0, 0)


def test_constant_offset_hand_values():
    x = uniform_grid(2.0, 401)
    err = error_report(prof(x, np.ones_like(x)), prof(x, np.full_like(x, 1.1)))
    assert err.l2_abs == pytest.approx(0.1 * math.sqrt(2), rel=1e-12)
    assert err.l2_rel == pytest.approx(0.1, rel=1e-12)
    assert err.h1_rel == pytest.approx(0.1, rel=1e-12)


def test_sloped_error_raises_h1():
    x = uniform_grid(1.0, 101)
    err = error_report(prof(x, 1 + 0 * x), prof(x, 1 + 0.2 * x))
    assert err.h1_abs > err.l2_abs
    assert err.h1_abs == pytest.approx(math.hypot(err.l2_abs, 0.2), rel=1e-10)


def test_norms_and_derivative():
    x = uniform_grid(1.0, 201)
    assert l2_norm(x, x[1]) == pytest.approx(1 / math.sqrt(3), rel=1e-4)
    assert np.allclose(derivative(x**2, x[1])[1:-1], 2 * x[1:-1])
    assert h1_norm(np.ones(5), 0.25) == pytest.approx(1.0)


def test_zero_truth_warns():
    x = uniform_grid(1.0, 11)
    with pytest.warns(UndefinedRelativeError):
        err = error_report(prof(x, 0 * x), prof(x, 1 + 0 * x))
    assert math.isnan(err.l2_rel) and math.isnan(err.h1_rel) and err.l2_abs > 0


def test_grids_must_match():
    with pytest.raises(DomainRangeError):
        error_report(prof([0, 1, 2], [1, 1, 1]), prof([0, 0.5, 1, 1.5, 2], [1] * 5))


def _pair(seed):
    grid = uniform_grid(2.0, 81)
    a = sample_area(KernelSpec.se(), grid, seed=seed)
    b = sample_area(KernelSpec.matern(1.5), grid, seed=seed + 1)
    return a, b


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_symmetric_roles(seed):
    a, b = _pair(seed)
    ab, ba = error_report(a, b), error_report(b, a)
    assert ab.l2_abs == ba.l2_abs and ab.h1_abs == ba.h1_abs


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6), s=st.sampled_from([0.25, 0.5, 2.0, 4.0]))
def test_scale_covariance(seed, s):
    # powers of two keep the scaling exact in floating point
    a, b = _pair(seed)
    e1 = error_report(a, b)
    e2 = error_report(prof(a.x, s * a.values), prof(b.x, s * b.values))
    assert e2.l2_abs == s * e1.l2_abs and e2.h1_abs == s * e1.h1_abs
    assert e2.l2_rel == e1.l2_rel and e2.h1_rel == e1.h1_rel


def test_record_row_and_tags():
    x = uniform_grid(1.0, 11)
    rec = error_report(prof(x, 1 + x), prof(x, 1 + x), method="klo", delta=0.05, realisation=3, generator="se")
    row = dict(zip(CSV_HEADER, rec.as_row()))
    assert row["method"] == "klo" and row["realisation"] == 3 and row["delta"] == 0.05
    assert CSV_HEADER == ("realisation", "generator", "delta", "method", "l2_abs", "l2_rel", "h1_abs", "h1_rel")
