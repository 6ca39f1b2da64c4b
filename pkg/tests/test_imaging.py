import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose, assert_array_equal

from sketchguide.imaging import (
    GrayImage,
    Latent,
    RgbImage,
    cosine_similarity,
    gray_to_rgb,
    load_gray_png,
    load_rgb_png,
    resize_bilinear,
    rgb_to_gray,
    save_png,
)


def gray(rows) -> GrayImage:
    return GrayImage(np.asarray(rows, dtype=np.float64))


unit_grays = arrays(
    np.float64,
    st.tuples(st.integers(1, 8), st.integers(1, 8)),
    elements=st.floats(0.0, 1.0, allow_nan=False),
)

# PNG-backed sketches quantize to multiples of 1/255; intensities tiny enough
# to underflow a squared norm cannot occur, so keep them out of the domain.
sketch_grays = arrays(
    np.float64,
    st.tuples(st.integers(1, 8), st.integers(1, 8)),
    elements=st.one_of(st.just(0.0), st.floats(1.0 / 255.0, 1.0)),
)


class TestTypes:
    def test_gray_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            gray([[1.5]])
        with pytest.raises(ValueError):
            gray([[-0.1]])

    def test_gray_rejects_empty(self):
        with pytest.raises(ValueError):
            GrayImage(np.zeros((0, 4)))

    def test_rgb_shape_checked(self):
        with pytest.raises(ValueError):
            RgbImage(np.zeros((4, 4)))
        with pytest.raises(ValueError):
            RgbImage(np.zeros((4, 4, 4)))

    def test_latent_requires_four_channels(self):
        with pytest.raises(ValueError):
            Latent(np.zeros((3, 8, 8)))

    def test_latent_rejects_nan(self):
        d = np.zeros((4, 8, 8))
        d[0, 0, 0] = np.nan
        with pytest.raises(ValueError):
            Latent(d)

    def test_images_are_immutable(self):
        img = gray([[0.5, 0.5]])
        with pytest.raises(ValueError):
            img.data[0, 0] = 1.0


class TestCosineSimilarity:
    def test_identity(self):
        a = gray([[0.25, 0.75], [1.0, 0.125]])
        assert cosine_similarity(a, a) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        a = gray([[1.0, 0.0]])
        b = gray([[0.0, 1.0]])
        assert cosine_similarity(a, b) == 0.0

    def test_hand_value(self):
        # [1,1] vs [1,0]: (1*1 + 1*0) / (sqrt(2) * 1) = 1/sqrt(2)
        a = gray([[1.0, 1.0]])
        b = gray([[1.0, 0.0]])
        assert cosine_similarity(a, b) == pytest.approx(0.7071067811865475, abs=1e-12)

    def test_blank_canvas_is_zero(self):
        blank = GrayImage.full(4, 4, 0.0)
        inked = GrayImage.full(4, 4, 0.9)
        assert cosine_similarity(blank, inked) == 0.0
        assert cosine_similarity(inked, blank) == 0.0
        assert cosine_similarity(blank, blank) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            cosine_similarity(GrayImage.full(2, 2, 0.5), GrayImage.full(3, 2, 0.5))

    @given(sketch_grays)
    def test_self_similarity_one(self, arr):
        if arr.max() == 0.0:
            assert cosine_similarity(GrayImage(arr), GrayImage(arr)) == 0.0
        else:
            c = cosine_similarity(GrayImage(arr), GrayImage(arr))
            assert c == pytest.approx(1.0, abs=1e-12)

    @given(sketch_grays, st.floats(0.01, 1.0))
    def test_scale_invariance(self, arr, c):
        if arr.max() == 0.0:
            return
        a = GrayImage(arr)
        b = GrayImage(arr * c)
        assert cosine_similarity(a, b) == pytest.approx(1.0, abs=1e-12)

    @given(sketch_grays, sketch_grays)
    def test_bounded(self, xa, xb):
        if xa.shape != xb.shape:
            return
        assert abs(cosine_similarity(GrayImage(xa), GrayImage(xb))) <= 1.0 + 1e-15

    def test_symmetry(self):
        rng = np.random.default_rng(7)
        a = GrayImage(rng.random((6, 5)))
        b = GrayImage(rng.random((6, 5)))
        assert cosine_similarity(a, b) == cosine_similarity(b, a)


class TestResize:
    def test_constant_invariance(self):
        img = GrayImage.full(512, 512, 0.5)
        out = resize_bilinear(img, 256, 256)
        assert out.width == 256 and out.height == 256
        assert_array_equal(out.data, np.full((256, 256), 0.5))

    def test_identity_resize_bit_exact(self):
        rng = np.random.default_rng(3)
        img = GrayImage(rng.random((17, 23)))
        out = resize_bilinear(img, 23, 17)
        assert_array_equal(out.data, img.data)

    def test_align_corners_upsample(self):
        # 2x1 [0, 1] -> 4x1 samples positions 0, 1/3, 2/3, 1
        img = gray([[0.0, 1.0]])
        out = resize_bilinear(img, 4, 1)
        assert_allclose(out.data[0], [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0], atol=1e-15)

    def test_rgb_resize(self):
        img = RgbImage(np.full((8, 8, 3), 0.25))
        out = resize_bilinear(img, 4, 2)
        assert out.data.shape == (2, 4, 3)
        assert_array_equal(out.data, np.full((2, 4, 3), 0.25))

    def test_constant_roundtrip_exact(self):
        img = GrayImage.full(16, 16, 0.7)
        back = resize_bilinear(resize_bilinear(img, 5, 9), 16, 16)
        assert_array_equal(back.data, img.data)

    @given(unit_grays, st.integers(1, 12), st.integers(1, 12))
    @settings(max_examples=50)
    def test_output_in_range(self, arr, w, h):
        out = resize_bilinear(GrayImage(arr), w, h)
        assert out.data.min() >= 0.0 and out.data.max() <= 1.0
        assert (out.width, out.height) == (w, h)

    def test_rejects_bad_dims(self):
        with pytest.raises(ValueError):
            resize_bilinear(GrayImage.full(4, 4), 0, 4)


class TestGrayConversion:
    def test_white(self):
        img = RgbImage(np.ones((2, 2, 3)))
        assert_array_equal(rgb_to_gray(img).data, np.ones((2, 2)))

    def test_black(self):
        img = RgbImage(np.zeros((2, 2, 3)))
        assert_array_equal(rgb_to_gray(img).data, np.zeros((2, 2)))

    def test_pure_red(self):
        d = np.zeros((1, 1, 3))
        d[0, 0, 0] = 1.0
        assert rgb_to_gray(RgbImage(d)).data[0, 0] == pytest.approx(0.299, abs=1e-15)

    def test_lift_roundtrip(self):
        rng = np.random.default_rng(11)
        img = GrayImage(rng.random((5, 7)))
        lifted = gray_to_rgb(img)
        assert lifted.data.shape == (5, 7, 3)
        back = rgb_to_gray(lifted)
        assert_allclose(back.data, img.data, atol=1e-15)


class TestPngIO:
    def test_gray_roundtrip_quantized(self, tmp_path):
        levels = np.arange(256, dtype=np.float64) / 255.0
        img = GrayImage(np.tile(levels, (4, 1)))
        p = tmp_path / "g.png"
        save_png(img, p)
        back = load_gray_png(p)
        assert_array_equal(back.data, img.data)

    def test_rgb_roundtrip_quantized(self, tmp_path):
        rng = np.random.default_rng(5)
        raw = rng.integers(0, 256, size=(9, 6, 3)).astype(np.float64) / 255.0
        img = RgbImage(raw)
        p = tmp_path / "c.png"
        save_png(img, p)
        assert_array_equal(load_rgb_png(p).data, img.data)

    def test_quantization_rounds(self, tmp_path):
        img = gray([[0.5001]])
        p = tmp_path / "q.png"
        save_png(img, p)
        assert load_gray_png(p).data[0, 0] == np.rint(0.5001 * 255) / 255.0

    def test_save_is_deterministic(self, tmp_path):
        rng = np.random.default_rng(13)
        img = GrayImage(rng.random((32, 32)))
        p1, p2 = tmp_path / "a.png", tmp_path / "b.png"
        save_png(img, p1)
        save_png(img, p2)
        assert p1.read_bytes() == p2.read_bytes()
