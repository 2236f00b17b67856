"""Oriented filter bank: kernels, replicate-border convolution, min-rule field."""

import numpy as np
import pytest

from texdesc.errors import ConfigError
from texdesc.gabor import (
    GaborParams,
    build_bank,
    convolve_replicate,
    gabor_kernel,
    gabor_response,
    gradient_response,
)
from texdesc.patchio import ImagePatch


def conv_oracle(image, kernel):
    """Same-size correlation with replicate borders, written independently:
    indexes the source with clipped coordinates instead of padding."""
    m, n = image.shape
    r = kernel.shape[0] // 2
    out = np.zeros_like(image)
    for a in range(kernel.shape[0]):
        for b in range(kernel.shape[1]):
            rows = np.clip(np.arange(m) + a - r, 0, m - 1)
            cols = np.clip(np.arange(n) + b - r, 0, n - 1)
            out += kernel[a, b] * image[np.ix_(rows, cols)]
    return out


class TestKernelValues:
    def test_origin_value_matches_closed_form(self):
        """At the center tap the oscillation is cos(0)=1, leaving only the
        envelope amplitude 1/(2*pi*sigma^2)."""
        for sigma in (1.0, 2.0, 5.0):
            k = gabor_kernel(GaborParams(sigma=sigma), 0.0)
            r = k.shape[0] // 2
            assert k[r, r] == pytest.approx(1.0 / (2.0 * np.pi * sigma * sigma), rel=1e-12)

    def test_scalar_spot_check_off_center(self):
        sigma = 1.0
        params = GaborParams(sigma=sigma)
        k = gabor_kernel(params, 0.0)
        r = k.shape[0] // 2
        x, y = 1.0, 2.0
        mu = 1.0 / np.sqrt(2.0 * sigma)
        want = (
            1.0
            / (2.0 * np.pi * sigma * sigma)
            * np.exp(-(x * x + y * y) / (2.0 * sigma * sigma))
            * np.cos(2.0 * np.pi * mu * x)
        )
        assert k[r + 1, r + 2] == pytest.approx(want, rel=1e-12)

    def test_quarter_turn_is_transpose(self):
        params = GaborParams(sigma=2.0)
        k0 = gabor_kernel(params, 0.0)
        k90 = gabor_kernel(params, np.pi / 2.0)
        np.testing.assert_allclose(k0, k90.T, atol=1e-15)

    def test_even_symmetry(self):
        k = gabor_kernel(GaborParams(sigma=3.0), np.pi / 8.0)
        np.testing.assert_allclose(k, k[::-1, ::-1], atol=1e-15)

    def test_radius_grows_with_sigma(self):
        assert gabor_kernel(GaborParams(sigma=1.0), 0.0).shape == (7, 7)
        assert gabor_kernel(GaborParams(sigma=0.2), 0.0).shape == (5, 5)
        assert gabor_kernel(GaborParams(sigma=5.0), 0.0).shape == (31, 31)

    def test_bank_has_eight_evenly_spaced_orientations(self):
        params = GaborParams(sigma=1.0)
        np.testing.assert_allclose(params.thetas, np.arange(8) * np.pi / 8.0)
        bank = build_bank(1.0)
        assert len(bank) == 8


class TestConvolution:
    def test_matches_clip_indexing_oracle_bitwise(self, rng):
        img = rng.uniform(size=(20, 20))
        k = gabor_kernel(GaborParams(sigma=1.0), np.pi / 4.0)
        got = convolve_replicate(img, k)
        want = conv_oracle(img, k)
        np.testing.assert_array_equal(got, want)

    def test_constant_image_times_kernel_sum(self):
        k = gabor_kernel(GaborParams(sigma=2.0), 0.0)
        img = np.full((16, 16), 0.5)
        out = convolve_replicate(img, k)
        np.testing.assert_allclose(out, 0.5 * k.sum(), atol=1e-12)

    def test_output_shape_preserved(self, rng):
        img = rng.uniform(size=(15, 23))
        k = gabor_kernel(GaborParams(sigma=1.0), 0.0)
        assert convolve_replicate(img, k).shape == (15, 23)


class TestMinRuleResponse:
    def test_magnitude_is_pointwise_minimum(self, rng):
        p = ImagePatch(rng.uniform(size=(24, 24)))
        field = gabor_response(p, sigma=1.0)
        bank = build_bank(1.0)
        stack = np.stack([convolve_replicate(p.pixels, k) for k in bank])
        np.testing.assert_array_equal(field.magnitude, stack.min(axis=0))

    def test_orientation_comes_from_argmin(self, rng):
        p = ImagePatch(rng.uniform(size=(24, 24)))
        field = gabor_response(p, sigma=1.0)
        bank = build_bank(1.0)
        params = GaborParams(sigma=1.0)
        stack = np.stack([convolve_replicate(p.pixels, k) for k in bank])
        want = params.thetas[stack.argmin(axis=0)]
        np.testing.assert_array_equal(field.orientation, want)

    def test_tie_breaks_to_lowest_orientation_index(self):
        """An all-zero image yields a bitwise-exact zero response at every
        orientation, so the argmin must settle on index 0 everywhere."""
        p = ImagePatch(np.zeros((16, 16)))
        field = gabor_response(p, sigma=1.0)
        assert np.all(field.magnitude == 0.0)
        assert np.all(field.orientation == 0.0)

    def test_max_abs_rule_selects_largest_magnitude(self, rng):
        p = ImagePatch(rng.uniform(size=(16, 16)))
        field = gabor_response(p, sigma=1.0, rule="max_abs")
        bank = build_bank(1.0)
        stack = np.stack([convolve_replicate(p.pixels, k) for k in bank])
        np.testing.assert_array_equal(np.abs(field.magnitude), np.abs(stack).max(axis=0))

    def test_transposed_image_transposes_min_field(self):
        """For a vertical-stripe grating the strongest negative response sits
        at the orientation tracking the stripes, and rotating the image by a
        quarter turn transposes the response field."""
        x = np.arange(32)[:, None]
        img = 0.5 + 0.4 * np.cos(2.0 * np.pi * x / 8.0) * np.ones((1, 32))
        f_rows = gabor_response(ImagePatch(np.ascontiguousarray(img)), sigma=1.0)
        f_cols = gabor_response(ImagePatch(np.ascontiguousarray(img.T)), sigma=1.0)
        np.testing.assert_allclose(f_rows.magnitude, f_cols.magnitude.T, atol=1e-12)

    def test_unknown_rule_rejected(self, random_patch):
        with pytest.raises(ConfigError):
            gabor_response(random_patch, sigma=1.0, rule="median")


class TestGradientResponse:
    def test_central_differences_interior(self):
        m, n = 12, 12
        x = np.arange(m)[:, None] * np.ones((1, n))
        img = x / (m - 1.0)
        field = gradient_response(ImagePatch(img))
        step = 1.0 / (m - 1.0)
        np.testing.assert_allclose(field.magnitude[1:-1, :], 2.0 * step, atol=1e-12)

    def test_replicate_borders_halve_edge_span(self):
        m = 8
        img = (np.arange(m)[:, None] / (m - 1.0)) * np.ones((1, m))
        field = gradient_response(ImagePatch(img))
        step = 1.0 / (m - 1.0)
        np.testing.assert_allclose(field.magnitude[0, :], step, atol=1e-12)
        np.testing.assert_allclose(field.magnitude[-1, :], step, atol=1e-12)

    def test_orientation_in_half_open_interval(self, rng):
        field = gradient_response(ImagePatch(rng.uniform(size=(32, 32))))
        assert field.orientation.min() >= 0.0
        assert field.orientation.max() < np.pi

    def test_antiparallel_gradients_share_orientation(self):
        up = np.arange(8)[:, None] / 7.0 * np.ones((1, 8))
        down = up[::-1].copy()
        f_up = gradient_response(ImagePatch(up))
        f_down = gradient_response(ImagePatch(down))
        np.testing.assert_allclose(
            f_up.orientation[2:-2], f_down.orientation[2:-2], atol=1e-12
        )


class TestParamsValidation:
    @pytest.mark.parametrize("sigma", [0.0, -1.0, np.nan])
    def test_bad_sigma_rejected(self, sigma):
        with pytest.raises(ConfigError):
            GaborParams(sigma=sigma)

    def test_wavelength_tracks_sigma(self):
        p = GaborParams(sigma=2.0)
        assert p.mu == pytest.approx(1.0 / np.sqrt(4.0))
