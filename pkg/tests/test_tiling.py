import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from changediff import (
    TileBox,
    compute_tile_boxes,
    extract_tile,
    pad_to_multiple,
    stitch_tiles,
)


def coverage_map(boxes, height, width):
    cov = np.zeros((height, width), dtype=int)
    for b in boxes:
        cov[b.y0 : b.y1, b.x0 : b.x1] += 1
    return cov


class TestComputeTileBoxes:
    def test_exact_grid_without_overlap(self):
        boxes = compute_tile_boxes(8, 8, 4)
        assert len(boxes) == 4
        cov = coverage_map(boxes, 8, 8)
        assert np.all(cov == 1)

    def test_overlap_never_leaves_gaps(self):
        boxes = compute_tile_boxes(10, 7, 4, overlap=2)
        cov = coverage_map(boxes, 10, 7)
        assert np.all(cov >= 1)
        for b in boxes:
            assert (b.height, b.width) == (4, 4)

    def test_small_scene_yields_one_spanning_box(self):
        boxes = compute_tile_boxes(3, 5, 8)
        assert boxes == [TileBox(0, 0, 3, 5)]

    def test_border_windows_are_flush(self):
        boxes = compute_tile_boxes(10, 10, 4, overlap=0)
        assert max(b.y1 for b in boxes) == 10
        assert max(b.x1 for b in boxes) == 10
        # No window may extend past the scene.
        assert all(b.y1 <= 10 and b.x1 <= 10 and b.y0 >= 0 and b.x0 >= 0 for b in boxes)

    def test_no_duplicate_boxes(self):
        boxes = compute_tile_boxes(12, 12, 4, overlap=2)
        assert len(boxes) == len(set(boxes))

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            compute_tile_boxes(8, 8, 0)
        with pytest.raises(ValueError):
            compute_tile_boxes(8, 8, 4, overlap=4)
        with pytest.raises(ValueError):
            compute_tile_boxes(8, 8, 4, overlap=-1)

    @settings(deadline=None, max_examples=100)
    @given(
        height=st.integers(1, 64),
        width=st.integers(1, 64),
        tile=st.integers(1, 32),
        overlap_frac=st.floats(0.0, 0.99),
    )
    def test_full_coverage_for_any_geometry(self, height, width, tile, overlap_frac):
        overlap = int(tile * overlap_frac)
        boxes = compute_tile_boxes(height, width, tile, overlap)
        assert np.all(coverage_map(boxes, height, width) >= 1)


class TestStitching:
    def test_partition_restitches_exactly(self):
        rng = np.random.default_rng(0)
        image = rng.normal(size=(3, 8, 12))
        boxes = compute_tile_boxes(8, 12, 4)
        tiles = [extract_tile(image, b) for b in boxes]
        out = stitch_tiles(tiles, boxes, 8, 12)
        assert out.dtype == image.dtype
        np.testing.assert_array_equal(out, image)

    def test_overlapping_restitch_recovers_the_image(self):
        rng = np.random.default_rng(1)
        image = rng.normal(size=(2, 11, 9))
        boxes = compute_tile_boxes(11, 9, 4, overlap=2)
        tiles = [extract_tile(image, b) for b in boxes]
        out = stitch_tiles(tiles, boxes, 11, 9)
        np.testing.assert_allclose(out, image, atol=1e-12)

    def test_overlap_averages_disagreeing_tiles(self):
        boxes = [TileBox(0, 0, 2, 2), TileBox(0, 1, 2, 3)]
        tiles = [np.zeros((2, 2)), np.ones((2, 2))]
        out = stitch_tiles(tiles, boxes, 2, 3)
        np.testing.assert_array_equal(out[:, 0], [0.0, 0.0])
        np.testing.assert_array_equal(out[:, 1], [0.5, 0.5])
        np.testing.assert_array_equal(out[:, 2], [1.0, 1.0])

    def test_rejects_incomplete_coverage(self):
        with pytest.raises(ValueError, match="cover"):
            stitch_tiles([np.ones((2, 2))], [TileBox(0, 0, 2, 2)], 4, 4)

    def test_rejects_mismatched_inputs(self):
        with pytest.raises(ValueError):
            stitch_tiles([np.ones((2, 2))], [], 2, 2)
        with pytest.raises(ValueError):
            stitch_tiles([], [], 2, 2)
        with pytest.raises(ValueError, match="match"):
            stitch_tiles([np.ones((3, 3))], [TileBox(0, 0, 2, 2)], 2, 2)

    @settings(deadline=None, max_examples=60)
    @given(
        height=st.integers(1, 40),
        width=st.integers(1, 40),
        tile=st.integers(1, 16),
        overlap_frac=st.floats(0.0, 0.99),
        channels=st.integers(1, 3),
    )
    def test_cut_and_restitch_is_lossless(
        self, height, width, tile, overlap_frac, channels
    ):
        overlap = int(tile * overlap_frac)
        rng = np.random.default_rng(height * 1000 + width)
        image = rng.normal(size=(channels, height, width))
        boxes = compute_tile_boxes(height, width, tile, overlap)
        out = stitch_tiles([extract_tile(image, b) for b in boxes], boxes, height, width)
        # Deep overlaps average hundreds of identical copies per pixel, so
        # allow for accumulated rounding in the running sums.
        np.testing.assert_allclose(out, image, atol=1e-9)


class TestPadToMultiple:
    def test_aligned_input_is_returned_unchanged(self):
        image = np.zeros((3, 8, 16))
        out, (ph, pw) = pad_to_multiple(image, 8)
        assert out is image
        assert (ph, pw) == (0, 0)

    def test_padded_shape_is_divisible(self):
        image = np.zeros((1, 5, 13))
        out, (ph, pw) = pad_to_multiple(image, 4)
        assert out.shape == (1, 8, 16)
        assert (ph, pw) == (3, 3)

    def test_pad_mirrors_border_content(self):
        image = np.arange(6, dtype=float).reshape(1, 2, 3)
        out, _ = pad_to_multiple(image, 4)
        want = np.pad(image, [(0, 0), (0, 2), (0, 1)], mode="symmetric")
        np.testing.assert_array_equal(out, want)

    def test_pad_larger_than_image_works(self):
        image = np.ones((1, 1, 1))
        out, (ph, pw) = pad_to_multiple(image, 8)
        assert out.shape == (1, 8, 8)
        np.testing.assert_array_equal(out, np.ones((1, 8, 8)))

    def test_cropping_back_recovers_the_original(self):
        rng = np.random.default_rng(0)
        image = rng.normal(size=(2, 7, 10))
        out, (ph, pw) = pad_to_multiple(image, 8)
        np.testing.assert_array_equal(out[..., : 7, : 10], image)


def test_extract_tile_is_a_view_of_the_trailing_axes():
    image = np.arange(24).reshape(2, 3, 4)
    tile = extract_tile(image, TileBox(1, 2, 3, 4))
    np.testing.assert_array_equal(tile, image[:, 1:3, 2:4])
    assert np.shares_memory(tile, image)  # no copy
