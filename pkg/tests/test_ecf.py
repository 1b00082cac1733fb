"""Tests for the CF distance: evaluations, decomposition, invariances."""

import numpy as np
import pytest

import rcfgan.autodiff as ad
from rcfgan.autodiff import ShapeError, Tensor
from rcfgan.ecf import (CfLossConfig, EcfEval, FrequencyMismatchError,
                        alpha_weighted_diff, amplitude_phase, cf_distance,
                        distance_between, ecf, squared_diff)


@pytest.fixture
def rng():
    return np.random.default_rng(11)


def _clouds(rng, n=256, d=2):
    x = rng.normal(size=(n, d))
    y = rng.normal(size=(n, d)) + 0.5
    t = rng.normal(size=(16, d))
    return x, y, t


class TestEcfEval:
    def test_values_against_gaussian_cf(self, rng):
        # standard normal: E cos(t x) = exp(-|t|^2 / 2), E sin = 0
        x = rng.normal(size=(200000, 1))
        t = np.array([[0.5], [1.0], [2.0]])
        e = ecf(ad.as_tensor(x), ad.as_tensor(t))
        np.testing.assert_allclose(e.re, np.exp(-0.5 * t[:, 0] ** 2),
                                   atol=5e-3)
        np.testing.assert_allclose(e.im, np.zeros(3), atol=5e-3)

    def test_modulus_at_zero_is_one(self, rng):
        x = rng.normal(size=(128, 3))
        t = np.zeros((1, 3))
        e = ecf(ad.as_tensor(x), ad.as_tensor(t))
        np.testing.assert_allclose(e.re, [1.0], rtol=1e-15)
        np.testing.assert_allclose(e.im, [0.0], atol=1e-15)

    def test_modulus_never_exceeds_one(self, rng):
        x, _, t = _clouds(rng)
        e = ecf(ad.as_tensor(x), ad.as_tensor(t))
        assert np.all(e.modulus() <= 1.0 + 1e-12)


class TestDistance:
    def test_identical_sets_hit_sqrt_eps(self, rng):
        x, _, t = _clouds(rng)
        cfg = CfLossConfig()
        d = cf_distance(ad.as_tensor(x), ad.as_tensor(x.copy()),
                        ad.as_tensor(t), cfg)
        # cancellation in the phase term can perturb c by ~1e-17, which
        # moves sqrt(c + eps) a few parts in 1e7 away from sqrt(eps)
        assert abs(d.item() - 1e-6) <= 1e-6 * 1e-5

    def test_symmetry(self, rng):
        x, y, t = _clouds(rng)
        cfg = CfLossConfig(alpha=0.3)
        d_xy = cf_distance(ad.as_tensor(x), ad.as_tensor(y),
                           ad.as_tensor(t), cfg).item()
        d_yx = cf_distance(ad.as_tensor(y), ad.as_tensor(x),
                           ad.as_tensor(t), cfg).item()
        assert d_xy == pytest.approx(d_yx, abs=1e-15)

    def test_bounded_by_two(self, rng):
        # opposing point masses maximize the phase difference
        x = np.full((64, 1), 0.0)
        y = np.full((64, 1), np.pi)
        t = np.ones((8, 1))
        for alpha in (0.0, 0.5, 1.0):
            cfg = CfLossConfig(alpha=alpha)
            d = cf_distance(ad.as_tensor(x), ad.as_tensor(y),
                            ad.as_tensor(t), cfg).item()
            assert d <= 2.0 + 1e-12

    def test_separated_clouds_farther_than_close_ones(self, rng):
        x, _, t = _clouds(rng)
        near = x + 0.1
        far = x + 2.0
        cfg = CfLossConfig()
        d_near = cf_distance(ad.as_tensor(x), ad.as_tensor(near),
                             ad.as_tensor(t), cfg).item()
        d_far = cf_distance(ad.as_tensor(x), ad.as_tensor(far),
                            ad.as_tensor(t), cfg).item()
        assert d_far > d_near

    def test_triangle_inequality(self, rng):
        t = rng.normal(size=(16, 2))
        cfg = CfLossConfig(alpha=0.5)
        for _ in range(20):
            a = rng.normal(size=(128, 2))
            b = rng.normal(size=(128, 2)) + rng.normal(size=2)
            c = rng.normal(size=(128, 2)) * rng.uniform(0.5, 2.0)
            ta = ad.as_tensor(t)
            d_ab = cf_distance(ad.as_tensor(a), ad.as_tensor(b), ta, cfg).item()
            d_bc = cf_distance(ad.as_tensor(b), ad.as_tensor(c), ta, cfg).item()
            d_ac = cf_distance(ad.as_tensor(a), ad.as_tensor(c), ta, cfg).item()
            assert d_ac <= d_ab + d_bc + 1e-9

    def test_requires_shared_frequencies(self, rng):
        x, y, t = _clouds(rng)
        e_x = ecf(ad.as_tensor(x), ad.as_tensor(t))
        e_y = ecf(ad.as_tensor(y), ad.as_tensor(t.copy() + 1.0))
        with pytest.raises(FrequencyMismatchError):
            distance_between(e_x, e_y, 0.5, 1e-12)

    def test_same_array_object_accepted(self, rng):
        x, y, _ = _clouds(rng)
        t = ad.as_tensor(rng.normal(size=(8, 2)))
        d = distance_between(ecf(ad.as_tensor(x), t),
                             ecf(ad.as_tensor(y), t), 0.5, 1e-12)
        assert np.isfinite(d.item())


class TestDecomposition:
    def test_alpha_half_is_half_squared_diff(self, rng):
        x, y, t = _clouds(rng)
        ta = ad.as_tensor(t)
        e_x = ecf(ad.as_tensor(x), ta)
        e_y = ecf(ad.as_tensor(y), ta)
        c = squared_diff(e_x, e_y).data
        c_half = alpha_weighted_diff(e_x, e_y, 0.5).data
        np.testing.assert_allclose(c_half, c / 2.0, rtol=0, atol=1e-12)

    def test_endpoints_isolate_components(self, rng):
        x, y, t = _clouds(rng)
        ta = ad.as_tensor(t)
        e_x = ecf(ad.as_tensor(x), ta)
        e_y = ecf(ad.as_tensor(y), ta)
        amp = alpha_weighted_diff(e_x, e_y, 1.0).data
        phase = alpha_weighted_diff(e_x, e_y, 0.0).data
        mid = alpha_weighted_diff(e_x, e_y, 0.5).data
        np.testing.assert_allclose(0.5 * amp + 0.5 * phase, mid,
                                   rtol=0, atol=1e-12)
        assert np.all(amp >= -1e-15)
        assert np.all(phase >= -1e-15)

    def test_amplitude_ignores_location_shift(self, rng):
        # |ECF| is shift-invariant, so a pure translation has zero
        # amplitude component up to sampling noise
        x = rng.normal(size=(4096, 1))
        y = x + 3.0
        t = np.linspace(0.1, 2.0, 9)[:, None]
        ta = ad.as_tensor(t)
        e_x = ecf(ad.as_tensor(x), ta)
        e_y = ecf(ad.as_tensor(y), ta)
        amp = alpha_weighted_diff(e_x, e_y, 1.0).data
        assert np.all(amp <= 1e-25)

    def test_amplitude_phase_views(self, rng):
        x, _, t = _clouds(rng)
        e = ecf(ad.as_tensor(x), ad.as_tensor(t))
        amp, phase = amplitude_phase(e)
        np.testing.assert_allclose(amp, np.hypot(e.re, e.im), rtol=1e-12)
        assert np.all(np.abs(phase) <= np.pi)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            CfLossConfig(alpha=1.5)
        with pytest.raises(ValueError):
            CfLossConfig(num_freqs=0)
        with pytest.raises(ValueError):
            CfLossConfig(eps=0.0)

    def test_distance_differentiable_end_to_end(self, rng):
        x0 = rng.normal(size=(32, 2))
        y0 = rng.normal(size=(32, 2)) + 1.0
        t0 = rng.normal(size=(8, 2))
        x = Tensor(x0.copy(), requires_grad=True)
        d = cf_distance(x, ad.as_tensor(y0), ad.as_tensor(t0), CfLossConfig())
        ad.backward(d)
        assert x.grad is not None
        assert np.linalg.norm(x.grad) > 0
        assert np.all(np.isfinite(x.grad))


def test_ecf_requires_2d_inputs():
    with pytest.raises(ShapeError):
        ecf(ad.as_tensor(np.zeros(4)), ad.as_tensor(np.zeros((2, 1))))
