import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from webster_inverse.errors import ParameterError
from webster_inverse.harness import forward_klo_coarse, klo_config
from webster_inverse.klo_invert import (
    ALPHA_NOISELESS,
    KloInverseConfig,
    b1_vector,
    connecting_operator,
    convolution_map,
    differentiate,
    gaussian_smooth,
    gaussian_weights,
    integrate_J,
    integration_matrix,
    reconstruct_klo,
    time_reversal,
    volumes,
    window_indices,
    window_solve,
)
from webster_inverse.metrics import error_report
from webster_inverse.traces import BoundaryTrace

finite = st.floats(-1e3, 1e3, allow_nan=False)


@pytest.fixture(scope="module")
def uniform_klo(cfg, uniform_profile):
    return forward_klo_coarse(cfg, uniform_profile)


@pytest.fixture(scope="module")
def uniform_K(uniform_klo):
    tr = uniform_klo
    return connecting_operator(tr.dt * tr.samples, tr.dt).dense()


# ---------------------------------------------------------------- R and J


def test_time_reversal_examples():
    assert time_reversal([1, 2, 3]).tolist() == [3, 2, 1]
    assert time_reversal([1, 2, 1]).tolist() == [1, 2, 1]


@given(arrays(float, st.integers(1, 100), elements=finite))
def test_time_reversal_is_involution(v):
    assert np.array_equal(time_reversal(time_reversal(v)), v)


def test_time_reversal_random_length_100(rng):
    v = rng.standard_normal(100)
    assert np.array_equal(time_reversal(time_reversal(v)), v)


def test_J_of_one_matches_b1():
    n, dt = 201, 0.01
    t = np.arange(n) * dt
    T0 = 0.5 * (n - 1) * dt
    J1 = integrate_J(np.ones(n), dt)
    early = t < T0
    assert np.all(np.abs(J1[early] - (T0 - t[early])) <= dt)
    assert np.all(np.abs(J1 - b1_vector(n, dt)) <= dt)


def test_J_zero_and_empty_rows():
    n, dt = 50, 0.1
    assert np.all(integrate_J(np.zeros(n), dt) == 0)
    rows = np.arange(n)
    dead = (n - 1 - rows) <= rows
    assert np.all(integrate_J(np.arange(n, dtype=float) + 1, dt)[dead] == 0)
    assert np.all(integration_matrix(n, dt)[dead] == 0)
    with pytest.raises(ParameterError):
        integrate_J([1.0], dt)


@given(arrays(float, st.integers(2, 80), elements=finite))
def test_J_action_matches_matrix(v):
    dt = 0.03
    dense = integration_matrix(len(v), dt) @ v
    assert np.allclose(integrate_J(v, dt), dense, rtol=1e-12, atol=1e-9)


# ---------------------------------------------------------------- Lambda and K


def test_delta_kernel_is_scaled_identity():
    k = np.zeros(10)
    k[0] = 2.5
    assert np.array_equal(convolution_map(k).dense(), 2.5 * np.eye(10))


def test_map_of_e0_is_kernel(rng):
    k = rng.standard_normal(30)
    e0 = np.zeros(30)
    e0[0] = 1
    assert np.allclose(convolution_map(k).matvec(e0), k, rtol=0, atol=1e-15)


@pytest.mark.parametrize("n", [64, 700])
def test_matrix_free_action_matches_matrix(rng, n):
    lam = convolution_map(rng.standard_normal(n))
    v = rng.standard_normal(n)
    dense = lam.dense()
    assert np.allclose(np.tril(dense), dense)
    ref = dense @ v
    assert np.linalg.norm(lam.matvec(v) - ref) <= 1e-12 * np.linalg.norm(ref)
    ref_t = dense.T @ v
    assert np.linalg.norm(lam.rmatvec(v) - ref_t) <= 1e-12 * np.linalg.norm(ref_t)


def test_zero_kernel_gives_zero_K():
    assert np.all(connecting_operator(np.zeros(40), 0.1).dense() == 0)


def test_K_action_matches_dense(rng):
    n, dt = 65, 0.02
    K = connecting_operator(rng.standard_normal(n), dt)
    v = rng.standard_normal(n)
    assert np.allclose(K.matvec(v), K.dense() @ v, rtol=1e-12, atol=1e-12)


def test_K_nonnegative_on_windows_for_uniform_tube(uniform_klo, uniform_K, rng):
    n, dt = len(uniform_klo), uniform_klo.dt
    T0 = 0.5 * (n - 1) * dt
    for r in np.linspace(0.05, 1.0, 8) * T0:
        idx = window_indices(n, dt, r)
        for _ in range(5):
            f = np.zeros(n)
            f[idx] = rng.standard_normal(idx.size)
            assert f @ uniform_K @ f >= -1e-6


def test_K_nearly_symmetric_for_smooth_profile(cfg, se_profile):
    from dataclasses import replace

    from webster_inverse.profiles import KernelSpec, sample_area, uniform_grid

    fine = replace(cfg, coarse_points=601)
    prof = sample_area(KernelSpec.se(), uniform_grid(2.0, 601), seed=(7, 3))
    tr = forward_klo_coarse(fine, prof)
    n = len(tr)
    assert n >= 1024
    K = connecting_operator(tr.dt * tr.samples, tr.dt).dense()
    w = window_indices(n, tr.dt, 0.5 * (n - 1) * tr.dt)
    Kw = K[np.ix_(w, w)]
    assert np.linalg.norm(Kw - Kw.T) / np.linalg.norm(Kw) <= 0.05


# ---------------------------------------------------------------- window solves


def test_large_alpha_limit(uniform_klo, uniform_K):
    dt = uniform_klo.dt
    n = len(uniform_klo)
    alpha = 1e8
    r = 0.4
    res = window_solve(uniform_K, r, alpha, dt)
    b1 = b1_vector(n, dt)
    idx = window_indices(n, dt, r)
    assert np.allclose(res.f[idx], b1[idx] / alpha, rtol=1e-5)
    assert res.s == pytest.approx(np.sum(b1[idx] ** 2) * dt / alpha, rel=1e-5)
    assert np.all(res.f[np.setdiff1d(np.arange(n), idx)] == 0)


def test_uniform_tube_volume_is_radius(uniform_klo, uniform_K):
    dt = uniform_klo.dt
    T0 = 0.5 * (len(uniform_klo) - 1) * dt
    for r in np.linspace(0.2, 0.8, 7) * T0:
        s = window_solve(uniform_K, r, ALPHA_NOISELESS, dt).s
        assert abs(s - r) <= 0.05 * r


def test_volumes_non_decreasing(klo_trace):
    tr = klo_trace
    K = connecting_operator(tr.dt * tr.samples, tr.dt).dense()
    r = np.arange(1, 401) * tr.dt
    s = volumes(K, r, ALPHA_NOISELESS, tr.dt)
    assert np.all(np.diff(s) >= -1e-3)


def test_bordered_matches_direct(klo_trace):
    tr = klo_trace
    K = connecting_operator(tr.dt * tr.samples, tr.dt).dense()
    r = np.arange(1, 401, 7) * tr.dt
    for alpha in (ALPHA_NOISELESS, 1e-3):
        fast = volumes(K, r, alpha, tr.dt, "bordered")
        slow = volumes(K, r, alpha, tr.dt, "direct")
        assert np.max(np.abs(fast - slow)) <= 1e-10 * np.max(np.abs(slow))


def test_alpha_must_be_positive(uniform_K):
    with pytest.raises(ParameterError):
        window_solve(uniform_K, 0.5, 0.0, 0.005)


# ---------------------------------------------------------------- smoothing


@given(c=finite, n=st.integers(1, 60), sigma=st.floats(0, 12))
def test_constant_preserved(c, n, sigma):
    assert np.allclose(gaussian_smooth(np.full(n, c), sigma), c, rtol=1e-12, atol=1e-9)


@given(arrays(float, st.integers(1, 60), elements=finite))
def test_zero_sigma_is_identity(v):
    assert np.array_equal(gaussian_smooth(v, 0.0), v)


def test_impulse_reproduces_kernel():
    w = gaussian_weights(2.0)
    assert len(w) == 17 and w.sum() == pytest.approx(1.0, rel=1e-15)
    m = np.arange(-8, 9)
    assert np.allclose(w, np.exp(-(m**2) / 8.0) / np.exp(-(m**2) / 8.0).sum())
    v = np.zeros(41)
    v[20] = 1.0
    out = gaussian_smooth(v, 2.0)
    assert np.allclose(out[12:29], w, rtol=0, atol=1e-16)
    assert out.sum() == pytest.approx(1.0)


def test_small_sigma_keeps_one_point_half_width():
    assert len(gaussian_weights(0.1)) == 3


def test_negative_sigma_rejected():
    with pytest.raises(ParameterError):
        gaussian_smooth([1.0, 2.0], -1.0)


# ---------------------------------------------------------------- reconstruction


def test_differences():
    s = np.array([0.0, 1.0, 3.0, 6.0])
    assert differentiate(s, 1.0, "forward").tolist() == [1.0, 2.0, 3.0, 3.0]
    assert differentiate(s, 1.0, "central").tolist() == [1.0, 1.5, 2.5, 3.0]


def test_uniform_tube_reconstruction(uniform_klo):
    prof = reconstruct_klo(uniform_klo)
    L = prof.x[-1]
    inner = (prof.x >= 0.1 * L) & (prof.x <= 0.9 * L)
    assert np.all(np.abs(prof.values[inner] - 1.0) <= 0.05)


def test_smooth_profile_noiseless_l2(cfg, se_profile, klo_trace):
    kcfg = klo_config(cfg, 0.0, klo_trace.dt * klo_trace.samples)
    rec = reconstruct_klo(klo_trace, kcfg)
    err = error_report(se_profile, rec)
    assert 1e-3 <= err.l2_rel <= 2e-2


def test_inlet_cutoff_and_bounds(klo_trace):
    prof = reconstruct_klo(klo_trace, KloInverseConfig(x_min=0.08, bounds=(0.9, 1.1)))
    assert np.all(prof.values[prof.x <= 0.08] == 1.0)
    assert prof.values.min() >= 0.9 and prof.values.max() <= 1.1


def test_target_grid_and_post_smoothing(klo_trace):
    grid = tuple(np.linspace(0, 2, 101))
    prof = reconstruct_klo(klo_trace, KloInverseConfig(x_grid=grid, sigma_ax=2.0))
    assert np.allclose(prof.x, grid)
    assert np.all(np.isfinite(prof.values))


def test_deterministic_and_diagnostics(tmp_path, klo_trace):
    a, diag = reconstruct_klo(klo_trace, return_diagnostics=True)
    b = reconstruct_klo(klo_trace)
    assert a.values.tobytes() == b.values.tobytes()
    path = tmp_path / "d.csv"
    diag.to_csv(path)
    assert path.read_text().splitlines()[0] == "r,s_alpha,k_raw,k_smooth"
    assert len(diag.r) == (len(klo_trace) - 1) // 2


def test_reconstruction_validation(klo_trace, sg_trace):
    with pytest.raises(ParameterError):
        reconstruct_klo(sg_trace)
    with pytest.raises(ParameterError):
        reconstruct_klo(klo_trace, KloInverseConfig(n_r=5))
    with pytest.raises(ParameterError):
        reconstruct_klo(BoundaryTrace(0.1, np.zeros(9), kind="klo_trace"))
    for bad in ({"alpha": 0.0}, {"derivative": "backward"}, {"solver": "qr"}, {"sigma_kr": -1.0}, {"x_min": -0.1}):
        with pytest.raises(ParameterError):
            KloInverseConfig(**bad)


@settings(max_examples=10, deadline=None)
@given(scale=st.floats(0.5, 2.0))
def test_output_within_bounds(klo_trace, scale):
    prof = reconstruct_klo(klo_trace.replace(scale * klo_trace.samples), KloInverseConfig(n_r=100))
    assert prof.values.min() >= 0.5 and prof.values.max() <= 2.0
