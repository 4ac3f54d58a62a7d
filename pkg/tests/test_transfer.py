import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from webster_inverse.errors import ParameterError
from webster_inverse.forward_klo import KloForwardConfig, simulate_klo
from webster_inverse.harness import klo_config
from webster_inverse.klo_invert import connecting_operator, reconstruct_klo
from webster_inverse.metrics import error_report, resample
from webster_inverse.sg_invert import reconstruct_sg
from webster_inverse.traces import KLO_TRACE, SG_IMPULSE_RESPONSE, BoundaryTrace
from webster_inverse.transfer import (
    klo_kernel_from_sg,
    klo_trace_from_sg,
    ndmap_from_sg,
    sg_kernel_from_klo,
    step_samples,
)


def rel_l2(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def sg(samples, dt=0.01):
    return BoundaryTrace(dt, samples, kind=SG_IMPULSE_RESPONSE, impulse_removed=True)


def test_uniform_tube_klo_trace_maps_to_zero_kernel(uniform_profile):
    tr = simulate_klo(uniform_profile, KloForwardConfig(nx=801))
    h = sg_kernel_from_klo(tr, smooth_sigma=20)
    assert h.kind == SG_IMPULSE_RESPONSE and h.impulse_removed
    late = h.times > 0.1
    assert np.max(np.abs(h.samples[late])) < 1e-4 / tr.dt


def test_analytic_uniform_data_in_both_directions():
    n, dt = 101, 0.02
    step = BoundaryTrace(dt, step_samples(n), kind=KLO_TRACE)
    assert np.all(sg_kernel_from_klo(step).samples == 0)
    back = klo_trace_from_sg(sg(np.zeros(n), dt))
    assert np.array_equal(back.samples, step.samples)
    assert back.samples[0] == 0 and np.all(back.samples[1:] == -1.0)


def test_round_trip_recovers_trace(klo_trace):
    h = sg_kernel_from_klo(klo_trace)
    back = klo_trace_from_sg(h)
    assert rel_l2(back.samples, klo_trace.samples) <= 1e-2


@pytest.mark.parametrize("A0", [0.5, 2.0])
def test_round_trip_from_sg_side(sg_trace, A0):
    unit = sg_kernel_from_klo(klo_trace_from_sg(sg_trace)).samples
    back = sg_kernel_from_klo(klo_trace_from_sg(sg_trace, A0=A0), A0=A0).samples
    assert np.allclose(back, unit, rtol=1e-10, atol=1e-10)
    # running sums and central differences are half a sample apart
    inner = slice(2, -2)
    assert rel_l2(unit[inner], sg_trace.samples[inner]) <= 3e-2
    shifted = 0.5 * (sg_trace.samples[1:] + sg_trace.samples[:-1])
    assert rel_l2(unit[1:-1], shifted[1:]) <= 1e-2


def test_sg_reconstruction_from_transferred_kernel(klo_trace, sg_trace, se_profile):
    native = reconstruct_sg(sg_trace)
    transferred = reconstruct_sg(sg_kernel_from_klo(klo_trace))
    assert error_report(native, transferred).l2_rel <= 1e-2


def test_klo_reconstruction_from_sg_map(cfg, klo_trace, sg_trace):
    kcfg = klo_config(cfg, 0.0, klo_trace.dt * klo_trace.samples)
    native = reconstruct_klo(klo_trace, kcfg)
    lam = ndmap_from_sg(sg_trace)
    K = connecting_operator(lam, sg_trace.dt).dense()
    from_map = reconstruct_klo(klo_trace_from_sg(sg_trace), kcfg, K=K)
    assert error_report(native, from_map).l2_rel <= 2e-2
    # the same map reached through the trace itself
    direct = reconstruct_klo(klo_trace_from_sg(sg_trace), kcfg)
    assert np.allclose(direct.values, from_map.values, rtol=0, atol=1e-12)


def test_zero_kernel_map():
    assert np.all(ndmap_from_sg(sg(np.zeros(20)), include_step=False).dense() == 0)
    with_step = ndmap_from_sg(sg(np.zeros(20)), A0=2.0).dense()
    expected = -0.01 / 2.0 * (np.tril(np.ones((20, 20))) - np.eye(20))
    assert np.allclose(with_step, expected, rtol=0, atol=1e-15)


@settings(max_examples=20)
@given(seed=st.integers(0, 10**6), A0=st.floats(0.5, 2.0))
def test_map_is_lower_triangular_toeplitz(seed, A0):
    h = np.random.default_rng(seed).standard_normal(25)
    L = ndmap_from_sg(sg(h), A0=A0, include_step=False).dense()
    c = np.cumsum(h)
    assert np.array_equal(L, np.tril(L))
    assert np.allclose(L, sla.toeplitz(-A0 * 0.01**2 * c, np.zeros(25)), rtol=1e-13, atol=0)


@settings(max_examples=20)
@given(seed=st.integers(0, 10**6), a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_linearity(seed, a, b):
    rng = np.random.default_rng(seed)
    n, dt = 40, 0.05
    h1, h2 = rng.standard_normal(n), rng.standard_normal(n)
    lhs = klo_kernel_from_sg(sg(a * h1 + b * h2, dt), include_step=False)
    rhs = a * klo_kernel_from_sg(sg(h1, dt), include_step=False) + b * klo_kernel_from_sg(sg(h2, dt), include_step=False)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)
    # the KLO-to-SG map is linear in the reflected part of the trace
    step = step_samples(n)
    v1, v2 = rng.standard_normal(n), rng.standard_normal(n)
    v1[0] = v2[0] = 0.0

    def T(v):
        return sg_kernel_from_klo(BoundaryTrace(dt, step + v, kind=KLO_TRACE), smooth_sigma=1.5).samples

    assert np.allclose(T(a * v1 + b * v2), a * T(v1) + b * T(v2), rtol=1e-10, atol=1e-10)


def test_resampled_map(sg_trace):
    lam = ndmap_from_sg(sg_trace, dt=2 * sg_trace.dt)
    assert lam.n == (len(sg_trace) - 1) // 2 + 1


def test_validation(klo_trace, sg_trace):
    with pytest.raises(ParameterError):
        sg_kernel_from_klo(sg_trace)
    with pytest.raises(ParameterError):
        sg_kernel_from_klo(klo_trace, A0=0.0)
    with pytest.raises(ParameterError):
        klo_kernel_from_sg(klo_trace)
    with pytest.raises(ParameterError):
        klo_kernel_from_sg(sg_trace.replace(impulse_removed=False))


def test_transferred_sg_reconstruction_accuracy(se_profile, klo_trace):
    rec = reconstruct_sg(sg_kernel_from_klo(klo_trace))
    assert error_report(se_profile, resample(rec, se_profile.x)).l2_rel < 5e-3
