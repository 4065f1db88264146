import numpy as np
import pytest

from instamatte.core import (
    TRIMAP_BG,
    TRIMAP_FG,
    TRIMAP_UNKNOWN,
    BoundingBox,
    bbox_dimensions,
    bbox_of_mask,
    binary_dilate,
    binary_erode,
    round_half_up,
    trimap_decode,
    trimap_encode,
)
from instamatte.errors import MalformedTrimapError

from conftest import dilate_bruteforce, erode_bruteforce, random_mask, random_trimap


class TestBoundingBox:
    def test_dimensions(self):
        assert bbox_dimensions(BoundingBox(10, 20, 110, 220)) == (100, 200)
        assert bbox_dimensions(BoundingBox(0, 0, 1, 1)) == (1, 1)
        assert bbox_dimensions(BoundingBox(5, 7, 8, 19)) == (3, 12)

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            BoundingBox(5, 5, 5, 9)
        with pytest.raises(ValueError):
            BoundingBox(5, 5, 9, 4)

    def test_bbox_of_mask(self):
        m = np.zeros((10, 12), bool)
        m[3:7, 2:9] = True
        assert bbox_of_mask(m) == BoundingBox(2, 3, 9, 7)


def test_round_half_up():
    assert round_half_up(2.5) == 3
    assert round_half_up(3.75) == 4
    assert round_half_up(4.15) == 4
    assert round_half_up(7.5) == 8


class TestDilate:
    def test_zero_radius_identity(self, rng):
        m = random_mask(rng, (9, 11))
        assert np.array_equal(binary_dilate(m, 0), m)

    def test_center_pixel_plus_shape(self):
        m = np.zeros((5, 5), bool)
        m[2, 2] = True
        expected = dilate_bruteforce(m, 1)
        got = binary_dilate(m, 1)
        assert got.sum() == 5
        assert np.array_equal(got, expected)

    def test_all_true_fixed_point(self):
        m = np.ones((6, 8), bool)
        for r in (1, 2, 5):
            assert binary_dilate(m, r).all()

    def test_matches_bruteforce_random(self, rng):
        for _ in range(5):
            m = random_mask(rng, (12, 12), p=0.2)
            for r in (1, 2, 3):
                assert np.array_equal(binary_dilate(m, r), dilate_bruteforce(m, r))

    def test_monotone_in_mask_and_radius(self, rng):
        m = random_mask(rng, (16, 16), p=0.3)
        d1 = binary_dilate(m, 1)
        d3 = binary_dilate(m, 3)
        assert (m <= d1).all()
        assert (d1 <= d3).all()


class TestErode:
    def test_zero_radius_identity(self, rng):
        m = random_mask(rng, (9, 11))
        assert np.array_equal(binary_erode(m, 0), m)

    def test_border_counts_as_background(self):
        m = np.ones((7, 7), bool)
        got = binary_erode(m, 1)
        expected = np.zeros((7, 7), bool)
        expected[1:6, 1:6] = True
        assert np.array_equal(got, expected)
        assert np.array_equal(got, erode_bruteforce(m, 1))

    def test_matches_bruteforce_random(self, rng):
        for _ in range(5):
            m = random_mask(rng, (12, 12), p=0.7)
            for r in (1, 2):
                assert np.array_equal(binary_erode(m, r), erode_bruteforce(m, r))

    def test_duality_on_padded_plane(self, rng):
        # erode(m, r) = ~dilate(~m, r) once the plane beyond the border is
        # explicitly background; padding wide enough makes that exact.
        for _ in range(5):
            m = random_mask(rng, (16, 16), p=0.5)
            for r in (1, 2, 3):
                pad = r + 1
                padded = np.pad(m, pad, constant_values=False)
                dual = ~binary_dilate(~padded, r)
                assert np.array_equal(binary_erode(m, r), dual[pad:-pad, pad:-pad])

    def test_anti_monotone(self, rng):
        m = random_mask(rng, (16, 16), p=0.7)
        assert (binary_erode(m, 2) <= m).all()


class TestTrimapCodec:
    def test_all_foreground(self):
        t = np.full((4, 4), TRIMAP_FG, np.uint8)
        assert (trimap_encode(t) == 255).all()

    def test_round_trip_random(self, rng):
        for _ in range(10):
            t = random_trimap(rng, (13, 9))
            assert np.array_equal(trimap_decode(trimap_encode(t)), t)

    def test_rejects_stray_byte(self):
        raster = np.full((4, 4), TRIMAP_BG, np.uint8)
        raster[2, 2] = 17
        with pytest.raises(MalformedTrimapError):
            trimap_decode(raster)

    def test_label_values(self):
        assert (TRIMAP_BG, TRIMAP_UNKNOWN, TRIMAP_FG) == (0, 128, 255)
