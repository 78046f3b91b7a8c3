import numpy as np
import pytest
from hypothesis import given, strategies as st

from residual_lasso.forward_models import (NoiseSpec, add_noise, gaussian_blur_model,
                                           identity_model, resolve_sigma2, sigma2_from_snr,
                                           undersample_model)
from residual_lasso.grid_signals import build_grid, sample_f1, sample_f2


def test_identity():
    m = identity_model(5)
    np.testing.assert_array_equal(m(np.arange(5.0)), np.arange(5.0))
    assert m.n == 5


@pytest.mark.parametrize("gamma", [0.01, 0.05, 0.3])
def test_blur_rows_sum_to_one_and_symmetric(gamma):
    m = gaussian_blur_model(build_grid(64), gamma).matrix
    np.testing.assert_allclose(m.sum(axis=1), 1.0, atol=1e-14)
    np.testing.assert_allclose(m, m.T, atol=1e-15)
    assert (m >= 0).all()


def test_blur_against_direct_kernel():
    g = build_grid(32)
    gamma = 0.2
    m = gaussian_blur_model(g, gamma).matrix
    want = np.empty((32, 32))
    for j in range(32):
        for l in range(32):
            d = abs(g.points[j] - g.points[l])
            d = min(d, 2 * np.pi - d)
            want[j, l] = np.exp(-d * d / (2 * gamma**2))
    want /= want.sum(axis=1, keepdims=True)
    np.testing.assert_allclose(m, want, rtol=1e-12, atol=1e-15)


def test_tiny_blur_is_identity():
    np.testing.assert_allclose(gaussian_blur_model(build_grid(128), 1e-4).matrix, np.eye(128))


def test_blur_index_units():
    g = build_grid(64)
    a = gaussian_blur_model(g, 2.0, units="index").matrix
    b = gaussian_blur_model(g, 2.0 * g.delta_s).matrix
    np.testing.assert_allclose(a, b, atol=1e-14)
    with pytest.raises(ValueError):
        gaussian_blur_model(g, 1.0, units="cm")
    with pytest.raises(ValueError):
        gaussian_blur_model(g, 0.0)


@given(st.sampled_from([16, 64, 128]), st.floats(0.01, 0.99), st.integers(0, 2**32))
def test_undersample_drops_rounded_count(n, r, seed):
    m = undersample_model(n, r, seed)
    dropped = m.params["dropped"]
    assert dropped.size == int(np.floor(r * n + 0.5))
    assert np.count_nonzero(np.diag(m.matrix)) == n - dropped.size
    assert np.array_equal(m.matrix, undersample_model(n, r, seed).matrix)


def test_undersample_rejects_ratio():
    for r in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            undersample_model(16, r, 0)


def test_sigma2_from_snr_f2():
    v = sample_f2(build_grid(128)).values
    power = float(v @ v) / v.size
    assert sigma2_from_snr(v, 10) == pytest.approx(power / 10)
    assert sigma2_from_snr(v, 10) == pytest.approx(0.295, abs=0.002)


def test_sigma2_from_snr_f1():
    # direct grid sum; the often-quoted 0.038 does not follow from the SNR definition
    v = sample_f1(build_grid(128)).values
    assert sigma2_from_snr(v, 10) == pytest.approx(0.047, abs=0.001)


def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec()
    with pytest.raises(ValueError):
        NoiseSpec(snr_db=10, sigma2=0.1)
    with pytest.raises(ValueError):
        NoiseSpec(sigma2=-1.0)
    with pytest.raises(ValueError):
        resolve_sigma2(NoiseSpec(snr_db=10))


def test_zero_variance_is_noiseless():
    y = np.arange(4.0)
    np.testing.assert_array_equal(add_noise(y, NoiseSpec(sigma2=0.0)), y)


def test_noise_is_seeded_and_scaled():
    y = np.zeros(20000)
    a = add_noise(y, NoiseSpec(sigma2=0.25, seed=11))
    b = add_noise(y, NoiseSpec(sigma2=0.25, seed=11))
    c = add_noise(y, NoiseSpec(sigma2=0.25, seed=12))
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert a.var() == pytest.approx(0.25, rel=0.03)
    assert abs(a.mean()) < 0.02


def test_noise_matches_pcg64_stream():
    y = np.ones(5)
    got = add_noise(y, NoiseSpec(sigma2=4.0, seed=3))
    want = 1.0 + 2.0 * np.random.Generator(np.random.PCG64(3)).standard_normal(5)
    np.testing.assert_allclose(got, want)


def test_snr_noise_uses_reference():
    ref = np.full(10, 2.0)
    y = add_noise(np.zeros(10), NoiseSpec(snr_db=0, seed=1), reference=ref)
    want = 2.0 * np.random.Generator(np.random.PCG64(1)).standard_normal(10)
    np.testing.assert_allclose(y, want)


def test_mask_is_idempotent():
    m = undersample_model(32, 0.4, 5).matrix
    np.testing.assert_array_equal(m @ m, m)


def test_blur_spectrum_in_unit_interval():
    m = gaussian_blur_model(build_grid(128), 0.08).matrix
    eig = np.fft.fft(m[0]).real
    np.testing.assert_allclose(np.fft.fft(m[0]).imag, 0.0, atol=1e-14)
    assert eig.min() > 0 and eig.max() <= 1 + 1e-14


@pytest.mark.parametrize("model", [identity_model(16), undersample_model(16, 0.3, 1),
                                   gaussian_blur_model(build_grid(16), 0.1)])
def test_models_are_linear_at_zero(model):
    np.testing.assert_array_equal(model(np.zeros(16)), 0.0)


def test_unit_variance_chi2_band():
    d = add_noise(np.zeros(128), NoiseSpec(sigma2=1.0, seed=0))
    assert 0.7 <= d.var(ddof=1) <= 1.3
