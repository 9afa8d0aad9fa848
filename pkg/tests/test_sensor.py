import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lapjitter.sensor import GammaConfig, NoiseConfig, add_sensor_noise, forward_gamma, inverse_gamma, quantize

unit_images = arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 8)), elements=st.floats(0, 1))


@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.2, 3.0])
def test_gamma_fixed_points(gamma):
    cfg = GammaConfig(gamma)
    for v in (0.0, 1.0):
        img = np.full((3, 3), v)
        assert np.array_equal(inverse_gamma(img, cfg), img)
        assert np.array_equal(forward_gamma(img, cfg), img)


def test_gamma_exact_values():
    assert np.array_equal(inverse_gamma(np.full((2, 2), 0.5), GammaConfig(2.0)), np.full((2, 2), 0.25))
    assert np.array_equal(forward_gamma(np.full((2, 2), 0.25), GammaConfig(2.0)), np.full((2, 2), 0.5))
    x = np.random.default_rng(0).random((5, 5))
    assert np.array_equal(forward_gamma(x, GammaConfig(1.0)), x)


def test_inverse_gamma_matches_scalar_pow():
    x = np.random.default_rng(1).random((8, 8))
    out = inverse_gamma(x, GammaConfig(2.2))
    for r in range(8):
        for c in range(8):
            assert abs(out[r, c] - math.pow(float(x[r, c]), 2.2)) <= 1e-7


def test_gamma_domain_errors():
    with pytest.raises(ValueError):
        inverse_gamma(np.array([[1.2]]))
    with pytest.raises(ValueError):
        forward_gamma(np.array([[-0.1]]))
    with pytest.raises(ValueError):
        GammaConfig(0.0)


@settings(max_examples=60, deadline=None)
@given(unit_images, st.floats(0.2, 5.0))
def test_gamma_round_trip_and_monotone(img, gamma):
    cfg = GammaConfig(gamma)
    assert np.max(np.abs(forward_gamma(inverse_gamma(img, cfg), cfg) - img)) <= 1e-6
    flat = np.sort(img.ravel())
    assert np.all(np.diff(inverse_gamma(flat[None, :], cfg)[0]) >= 0)
    assert np.all(np.diff(forward_gamma(flat[None, :], cfg)[0]) >= 0)


def test_noiseless_is_identity():
    x = np.random.default_rng(2).random((16, 16))
    assert np.array_equal(add_sensor_noise(x, NoiseConfig(0.0, 0.0, 5)), x)


def test_poisson_statistics():
    n = 1_000_000
    lam = 1e-4
    out = add_sensor_noise(np.full((1000, 1000), 0.5), NoiseConfig(0.0, lam, seed=7))
    var_expected = lam * 0.5
    assert abs(out.mean() - 0.5) <= 0.001
    assert abs(out.mean() - 0.5) <= 3 * math.sqrt(var_expected / n)
    assert abs(out.var() / var_expected - 1) <= 0.05


def test_gaussian_statistics():
    out = add_sensor_noise(np.full((1000, 1000), 0.5), NoiseConfig(0.01, 0.0, seed=8))
    assert abs(out.std() / 0.01 - 1) <= 0.02
    assert abs(out.mean() - 0.5) <= 3 * 0.01 / 1000


def test_combined_noise_variance_adds():
    lam, sigma = 1e-4, 0.01
    out = add_sensor_noise(np.full((1000, 1000), 0.3), NoiseConfig(sigma, lam, seed=9))
    assert abs(out.var() / (lam * 0.3 + sigma ** 2) - 1) <= 0.05


def test_noise_is_deterministic_per_seed():
    x = np.random.default_rng(3).random((32, 32))
    cfg = NoiseConfig(0.01, 1e-4, seed=42)
    assert np.array_equal(add_sensor_noise(x, cfg), add_sensor_noise(x, cfg))
    assert not np.array_equal(add_sensor_noise(x, cfg), add_sensor_noise(x, NoiseConfig(0.01, 1e-4, seed=43)))


def test_noise_not_clamped():
    out = add_sensor_noise(np.zeros((100, 100)), NoiseConfig(0.05, 0.0, seed=1))
    assert out.min() < 0


def test_quantize_rules():
    lattice = np.arange(256, dtype=np.float64).reshape(16, 16) / 255
    assert np.array_equal(quantize(lattice, 8), lattice)
    assert quantize(np.array([[0.5]]), 8)[0, 0] == 128 / 255
    assert quantize(np.array([[-0.3, 1.7]]), 8).tolist() == [[0.0, 1.0]]
    with pytest.raises(ValueError):
        quantize(lattice, 12)


def test_quantize_16bit_error_bound():
    x = np.random.default_rng(4).random((64, 64))
    assert np.max(np.abs(quantize(x, 16) - x)) <= 0.5 / 65535 + 1e-15


@settings(max_examples=60, deadline=None)
@given(unit_images, st.sampled_from([8, 16]))
def test_quantize_idempotent(img, depth):
    q = quantize(img, depth)
    assert np.array_equal(quantize(q, depth), q)
    assert np.max(np.abs(q - img)) <= 0.5 / (2 ** depth - 1) + 1e-15
