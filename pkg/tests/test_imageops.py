import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from castid import errors
from castid.imageops import (
    RasterImage,
    augment_set,
    bicubic_resize,
    contrast_stretch,
    horizontal_flip,
    to_grayscale,
)


def image(arr):
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    return RasterImage(arr)


def random_image(seed, h=6, w=7, channels=3):
    rng = np.random.default_rng(seed)
    return RasterImage(rng.random((h, w, channels)))


class TestContrastStretch:
    def test_default_limits_map_full_range(self):
        img = image([[0.0, 1.0]])
        out = contrast_stretch(img, 0.4, 1.0)
        assert out.pixels[0, 0, 0] == pytest.approx(0.4)
        assert out.pixels[0, 1, 0] == pytest.approx(1.0)

    def test_constant_image_maps_to_midpoint(self):
        out = contrast_stretch(image([[0.3, 0.3]]), 0.4, 1.0)
        assert np.allclose(out.pixels, 0.7)

    def test_midpoint_pixel(self):
        # 0.4 + 0.5 * 0.6 = 0.7 on a full-range channel
        out = contrast_stretch(image([[0.0, 0.5, 1.0]]), 0.4, 1.0)
        assert out.pixels[0, 1, 0] == pytest.approx(0.7)

    def test_bad_limits(self):
        with pytest.raises(errors.BadLimits):
            contrast_stretch(image([[0.5]]), 0.8, 0.4)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_output_endpoints_on_non_constant(self, seed):
        img = random_image(seed)
        out = contrast_stretch(img, 0.4, 1.0)
        for c in range(3):
            assert out.pixels[:, :, c].min() == pytest.approx(0.4, abs=1e-12)
            assert out.pixels[:, :, c].max() == pytest.approx(1.0, abs=1e-12)


class TestBicubicResize:
    def test_identity_same_dims(self):
        img = random_image(1)
        out = bicubic_resize(img, img.width, img.height)
        assert np.allclose(out.pixels, img.pixels, atol=1e-6)

    def test_constant_stays_constant(self):
        img = image(np.full((5, 4), 0.37))
        out = bicubic_resize(img, 9, 2)
        assert np.allclose(out.pixels, 0.37, atol=1e-9)

    def test_ramp_matches_direct_kernel_sum(self):
        # independent oracle: evaluate the separable Catmull-Rom sum at each
        # of the 4 output sample points with clamped indices
        ramp = np.arange(16, dtype=np.float64).reshape(4, 4) / 15.0
        img = image(ramp)
        out = bicubic_resize(img, 2, 2)

        def kernel(t):
            a, t = -0.5, abs(t)
            if t <= 1:
                return (a + 2) * t**3 - (a + 3) * t**2 + 1
            if t < 2:
                return a * t**3 - 5 * a * t**2 + 8 * a * t - 4 * a
            return 0.0

        def sample(y, x):
            total = 0.0
            for dy in range(-1, 3):
                for dx in range(-1, 3):
                    iy = min(max(int(np.floor(y)) + dy, 0), 3)
                    ix = min(max(int(np.floor(x)) + dx, 0), 3)
                    w = kernel(y - (np.floor(y) + dy)) * kernel(x - (np.floor(x) + dx))
                    total += w * ramp[iy, ix]
            return min(max(total, 0.0), 1.0)

        for j in range(2):
            for i in range(2):
                y = (j + 0.5) * 2.0 - 0.5
                x = (i + 0.5) * 2.0 - 0.5
                assert out.pixels[j, i, 0] == pytest.approx(sample(y, x), abs=1e-9)

    def test_output_stays_in_range(self):
        img = random_image(3)
        out = bicubic_resize(img, 13, 3)
        assert out.pixels.min() >= 0.0 and out.pixels.max() <= 1.0


class TestFlipAndGray:
    def test_flip_is_involution(self):
        img = random_image(4)
        assert np.array_equal(horizontal_flip(horizontal_flip(img)).pixels,
                              img.pixels)

    def test_flip_width_one_unchanged(self):
        img = random_image(5, w=1)
        assert np.array_equal(horizontal_flip(img).pixels, img.pixels)

    def test_flip_two_pixels(self):
        out = horizontal_flip(image([[0.2, 0.9]]))
        assert out.pixels[0, 0, 0] == 0.9 and out.pixels[0, 1, 0] == 0.2

    def test_gray_white(self):
        out = to_grayscale(RasterImage(np.ones((1, 1, 3))))
        assert out.pixels[0, 0, 0] == pytest.approx(1.0)

    def test_gray_pure_red(self):
        arr = np.zeros((1, 1, 3))
        arr[0, 0, 0] = 1.0
        assert to_grayscale(RasterImage(arr)).pixels[0, 0, 0] == pytest.approx(0.299)

    def test_gray_preserves_grays(self):
        arr = np.full((2, 2, 3), 0.42)
        out = to_grayscale(RasterImage(arr))
        assert np.allclose(out.pixels, 0.42, atol=1e-6)

    def test_gray_of_gray_errors(self):
        with pytest.raises(errors.AlreadyGray):
            to_grayscale(image([[0.5]]))


class TestAugmentSet:
    def test_four_times_larger(self):
        images = [random_image(i) for i in range(10)]
        assert len(augment_set(images)) == 40

    def test_empty(self):
        assert augment_set([]) == []

    def test_variant_order(self):
        img = random_image(7)
        out = augment_set([img])
        assert len(out) == 4
        assert np.array_equal(out[0].pixels, img.pixels)
        assert np.array_equal(out[1].pixels, contrast_stretch(img, 0.4, 1.0).pixels)
        assert out[2].width == img.width // 2
        assert np.array_equal(out[3].pixels, horizontal_flip(img).pixels)

    def test_grayscale_flag(self):
        out = augment_set([random_image(8)], grayscale=True)
        assert all(v.channels == 1 for v in out)

    def test_outputs_in_range_and_channels_kept(self):
        out = augment_set([random_image(9)])
        for v in out:
            assert v.channels == 3
            assert v.pixels.min() >= 0.0 and v.pixels.max() <= 1.0
