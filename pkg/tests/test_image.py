import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rgcache.image import (
    ImageFormatError,
    lightness_of,
    load_image,
    reconstruct_color,
    save_image,
)


def write_ppm(path, data, maxval=255):
    h, w = data.shape[:2]
    dtype = np.uint8 if maxval == 255 else ">u2"
    path.write_bytes(f"P6\n{w} {h}\n{maxval}\n".encode() + np.asarray(data, dtype=dtype).tobytes())


class TestLoad:
    def test_single_red_ppm(self, tmp_path):
        p = tmp_path / "red.ppm"
        write_ppm(p, np.array([[[255, 0, 0]]]))
        np.testing.assert_array_equal(load_image(p), [[[1.0, 0.0, 0.0]]])

    def test_ppm_with_comment_and_16_bit(self, tmp_path):
        p = tmp_path / "deep.ppm"
        body = np.array([[[65535, 0, 32768]]], dtype=">u2").tobytes()
        p.write_bytes(b"P6\n# made by hand\n1 1\n65535\n" + body)
        np.testing.assert_allclose(load_image(p), [[[1.0, 0.0, 32768 / 65535]]])

    def test_black_png(self, tmp_path):
        p = tmp_path / "black.png"
        save_image(np.zeros((2, 2, 3)), p)
        img = load_image(p)
        assert img.shape == (2, 2, 3)
        assert np.all(img == 0.0)

    def test_gray_png_expands_to_rgb(self, tmp_path):
        import cv2

        p = tmp_path / "gray.png"
        cv2.imwrite(str(p), np.array([[0, 51], [255, 102]], dtype=np.uint8))
        img = load_image(p)
        assert img.shape == (2, 2, 3)
        np.testing.assert_array_equal(img[..., 0], img[..., 2])
        np.testing.assert_allclose(img[0, 1], [0.2, 0.2, 0.2])

    def test_16_bit_png(self, tmp_path):
        import cv2

        p = tmp_path / "deep.png"
        bgr = np.array([[[0, 1000, 65535]]], dtype=np.uint16)
        cv2.imwrite(str(p), bgr)
        np.testing.assert_allclose(load_image(p), [[[1.0, 1000 / 65535, 0.0]]])

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_image(tmp_path / "nope.png")

    @pytest.mark.parametrize(
        "payload",
        [b"GIF89a....", b"P3\n1 1\n255\n255 0 0\n", b"P6\n0 4\n255\n", b"P6\n2 2\n255\n\x00\x00"],
    )
    def test_bad_files(self, tmp_path, payload):
        p = tmp_path / "bad.img"
        p.write_bytes(payload)
        with pytest.raises(ImageFormatError):
            load_image(p)


class TestSave:
    def test_rounding_convention(self, tmp_path):
        p = tmp_path / "px.ppm"
        save_image(np.array([[[1.0, 0.5, 0.0]]]), p)
        assert p.read_bytes().endswith(bytes([255, 128, 0]))

    def test_black(self, tmp_path):
        p = tmp_path / "px.ppm"
        save_image(np.zeros((1, 1, 3)), p)
        assert p.read_bytes().endswith(bytes([0, 0, 0]))

    def test_unknown_suffix(self, tmp_path):
        with pytest.raises(ImageFormatError):
            save_image(np.zeros((1, 1, 3)), tmp_path / "x.jpg")

    @pytest.mark.parametrize("suffix", [".png", ".ppm"])
    def test_round_trip_random_8bit(self, tmp_path, rng, suffix):
        for i in range(50):
            h, w = rng.integers(1, 20, size=2)
            data = rng.integers(0, 256, size=(h, w, 3)) / 255.0
            p = tmp_path / f"img{i}{suffix}"
            save_image(data, p)
            np.testing.assert_array_equal(load_image(p), data)

    def test_save_load_idempotent(self, tmp_path, lowlight_paths):
        first = load_image(lowlight_paths[0])
        p = tmp_path / "again.png"
        save_image(first, p)
        np.testing.assert_array_equal(load_image(p), first)


class TestLightness:
    @pytest.mark.parametrize(
        "rgb, expected", [((0.2, 0.5, 0.3), 0.5), ((0.0, 0.0, 0.0), 0.0), ((0.4, 0.4, 0.4), 0.4)]
    )
    def test_max_of_channels(self, rgb, expected):
        assert lightness_of(np.array([[rgb]]))[0, 0] == expected

    def test_equals_hsv_value(self, rng):
        import cv2

        img = rng.random((8, 9, 3)).astype(np.float32)
        v = cv2.cvtColor(img, cv2.COLOR_RGB2HSV)[..., 2]
        np.testing.assert_allclose(lightness_of(img), v, rtol=1e-6)


class TestReconstruct:
    def test_doubling(self):
        c = np.array([[[0.2, 0.4, 0.1]]])
        out = reconstruct_color(c, np.array([[0.4]]), np.array([[0.8]]))
        np.testing.assert_allclose(out, [[[0.4, 0.8, 0.2]]])

    def test_identity(self, rng):
        c = rng.random((5, 6, 3))
        a = lightness_of(c)
        np.testing.assert_allclose(reconstruct_color(c, a, a), c, rtol=0, atol=1e-15)

    def test_black_pixel_becomes_gray(self):
        out = reconstruct_color(np.zeros((1, 1, 3)), np.zeros((1, 1)), np.array([[0.3]]))
        np.testing.assert_array_equal(out, [[[0.3, 0.3, 0.3]]])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            reconstruct_color(np.zeros((2, 2, 3)), np.zeros((2, 2)), np.zeros((2, 3)))

    def test_inconsistent_lightness(self):
        with pytest.raises(ValueError):
            reconstruct_color(np.full((1, 1, 3), 0.5), np.array([[0.4]]), np.array([[0.4]]))

    @settings(max_examples=60, deadline=None)
    @given(
        arrays(np.float64, (4, 5, 3), elements=st.floats(0, 1)),
        arrays(np.float64, (4, 5), elements=st.floats(0, 1)),
    )
    def test_max_channel_is_target_and_hue_kept(self, c, a_out):
        a_in = lightness_of(c)
        out = reconstruct_color(c, a_in, a_out)
        np.testing.assert_allclose(out.max(axis=2), a_out, atol=1e-12)
        lit = a_in > 1e-3
        # ratios channel / max are the hue-defining quantities
        ratio_in = c[lit] / a_in[lit][:, None]
        ratio_out = out[lit] / np.where(a_out[lit] > 0, a_out[lit], 1.0)[:, None]
        keep = a_out[lit] > 1e-6  # subnormal targets underflow
        np.testing.assert_allclose(ratio_out[keep], ratio_in[keep], atol=1e-9)
        np.testing.assert_allclose(lightness_of(out)[lit], a_out[lit], atol=1e-12)
