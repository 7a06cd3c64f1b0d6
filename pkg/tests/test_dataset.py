import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from lintra import ImageSet, ImageShape, load_directory, permute, save_directory, split_shuffle
from lintra.dataset import quantize

from conftest import image_set, random_images


def test_shape_validation():
    with pytest.raises(ValueError):
        ImageShape(0, 4, 1)
    with pytest.raises(ValueError):
        ImageShape(4, 4, 2)
    assert ImageShape(4, 6, 3).dim == 72


def test_imageset_invariants():
    with pytest.raises(ValueError):
        image_set(np.full((2, 4), 1.5), 2, 2)  # out of range
    with pytest.raises(ValueError):
        ImageSet(np.zeros((2, 4)), ImageShape(2, 2, 1), ("a", "a"))  # duplicate ids
    with pytest.raises(ValueError):
        image_set(np.zeros((2, 5)), 2, 2)  # row length mismatch


def test_inputs_are_immutable():
    images = random_images(3, 4, 4, seed=1)
    with pytest.raises(ValueError):
        images.data[0, 0] = 0.5


def test_load_all_black_directory(tmp_path):
    for i in range(4):
        Image.fromarray(np.zeros((2, 2), dtype=np.uint8), mode="L").save(tmp_path / f"{i}.png")
    images = load_directory(tmp_path)
    assert len(images) == 4
    assert images.dim == 4
    assert np.all(images.data == 0.0)
    assert images.ids == ("0.png", "1.png", "2.png", "3.png")


def test_load_mixed_dimensions_fails(tmp_path):
    Image.fromarray(np.zeros((2, 2), dtype=np.uint8), mode="L").save(tmp_path / "a.png")
    Image.fromarray(np.zeros((3, 3), dtype=np.uint8), mode="L").save(tmp_path / "b.png")
    with pytest.raises(ValueError, match="mixed"):
        load_directory(tmp_path)


def test_load_unsupported_mode_fails(tmp_path):
    Image.fromarray(np.zeros((2, 2, 4), dtype=np.uint8), mode="RGBA").save(tmp_path / "a.png")
    with pytest.raises(ValueError, match="mode"):
        load_directory(tmp_path)


def test_load_unreadable_file_fails(tmp_path):
    (tmp_path / "bad.png").write_bytes(b"not an image at all")
    with pytest.raises(ValueError, match="unreadable"):
        load_directory(tmp_path)


def test_load_empty_directory_fails(tmp_path):
    with pytest.raises(ValueError, match="no supported images"):
        load_directory(tmp_path)


def test_rgb_round_trip_within_quantization(tmp_path):
    images = random_images(100, 8, 8, channels=3, seed=7)
    save_directory(images, tmp_path / "out")
    reloaded = load_directory(tmp_path / "out")
    assert reloaded.ids == images.ids
    assert reloaded.shape == images.shape
    # One quantization step of 1/255 per pixel, at most half of it from rounding.
    assert np.abs(reloaded.data - images.data).max() <= 1.0 / 255.0


def test_save_load_save_is_idempotent(tmp_path):
    images = random_images(10, 4, 4, seed=3)
    save_directory(images, tmp_path / "one")
    first = load_directory(tmp_path / "one")
    save_directory(first, tmp_path / "two")
    second = load_directory(tmp_path / "two")
    assert np.array_equal(first.data, second.data)


def test_quantize_rounds_half_to_even():
    # 0.5/255 sits exactly between codes 0 and 1; half-to-even picks 0.
    assert quantize(np.array([0.5 / 255.0]))[0] == 0
    assert quantize(np.array([1.5 / 255.0]))[0] == 2


def test_netpbm_round_trip(tmp_path):
    gray = random_images(3, 5, 4, channels=1, seed=11)
    gray = ImageSet(gray.data, gray.shape, ("a.pgm", "b.pgm", "c.pgm"))
    save_directory(gray, tmp_path / "g")
    back = load_directory(tmp_path / "g")
    assert back.ids == gray.ids
    assert np.abs(back.data - gray.data).max() <= 1.0 / 255.0

    rgb = random_images(2, 4, 4, channels=3, seed=12)
    rgb = ImageSet(rgb.data, rgb.shape, ("x.ppm", "y.ppm"))
    save_directory(rgb, tmp_path / "c")
    back = load_directory(tmp_path / "c")
    assert back.ids == rgb.ids
    assert np.abs(back.data - rgb.data).max() <= 1.0 / 255.0


def test_expected_shape_mismatch(tmp_path):
    from lintra import DataMismatchError

    save_directory(random_images(2, 4, 4, seed=1), tmp_path / "d")
    with pytest.raises(DataMismatchError):
        load_directory(tmp_path / "d", expected_shape=ImageShape(8, 8, 1))


def test_split_deterministic_and_sized():
    images = random_images(10, 2, 2, seed=0)
    a1, b1 = split_shuffle(images, 0.5, seed=7)
    a2, b2 = split_shuffle(images, 0.5, seed=7)
    assert a1.ids == a2.ids and b1.ids == b2.ids
    assert len(a1) == 5 and len(b1) == 5


def test_split_small_fraction():
    images = random_images(3, 2, 2, seed=0)
    a, b = split_shuffle(images, 0.34, seed=1)
    assert len(a) == 1 and len(b) == 2
    assert set(a.ids).isdisjoint(b.ids)


def test_split_empty_side_fails():
    images = random_images(4, 2, 2, seed=0)
    with pytest.raises(ValueError, match="empty side"):
        split_shuffle(images, 0.01, seed=0)
    with pytest.raises(ValueError):
        split_shuffle(images, 1.5, seed=0)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 40), fraction=st.floats(0.05, 0.95), seed=st.integers(0, 2**31))
def test_split_partitions_exhaustively(n, fraction, seed):
    images = random_images(n, 2, 2, seed=0)
    try:
        a, b = split_shuffle(images, fraction, seed)
    except ValueError:
        assert round(fraction * n) in (0, n)
        return
    assert set(a.ids) | set(b.ids) == set(images.ids)
    assert set(a.ids).isdisjoint(b.ids)
    assert len(a) + len(b) == n


def test_permute_singleton_unchanged():
    images = random_images(1, 2, 2, seed=0)
    assert permute(images, seed=5).ids == images.ids


def test_permute_deterministic_and_preserves_rows():
    images = random_images(12, 3, 3, seed=4)
    p1 = permute(images, seed=9)
    p2 = permute(images, seed=9)
    assert p1.ids == p2.ids
    assert sorted(p1.ids) == sorted(images.ids)
    # Each id still names its original row.
    lookup = dict(zip(images.ids, images.data))
    for image_id, row in zip(p1.ids, p1.data):
        assert np.array_equal(lookup[image_id], row)
