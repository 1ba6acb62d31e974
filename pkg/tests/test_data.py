import gzip
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import requires_mnist
from srrisk.data import (
    Dataset,
    load_idx_images,
    load_idx_labels,
    load_mnist,
    mnist_paths,
    normalize_and_pack,
    subset,
    synth_blobs,
)
from srrisk.errors import DomainError, FormatError, LengthError, ShapeError

IMAGES = bytes([0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2,
                0, 51, 128, 255,
                1, 2, 3, 254])
LABELS = bytes([0, 0, 8, 1, 0, 0, 0, 2, 7, 3])


@pytest.fixture
def idx_files(tmp_path):
    img, lab = tmp_path / "img.idx", tmp_path / "lab.idx"
    img.write_bytes(IMAGES)
    lab.write_bytes(LABELS)
    return img, lab


def test_images_fixture_exact(idx_files):
    arr = load_idx_images(idx_files[0])
    assert arr.dtype == np.uint8
    np.testing.assert_array_equal(arr, [[0, 51, 128, 255], [1, 2, 3, 254]])


def test_labels_fixture_exact(idx_files):
    np.testing.assert_array_equal(load_idx_labels(idx_files[1]), [7, 3])


def test_gzip_transparent(tmp_path):
    p = tmp_path / "img.idx.gz"
    p.write_bytes(gzip.compress(IMAGES))
    np.testing.assert_array_equal(load_idx_images(p)[1], [1, 2, 3, 254])


def test_wrong_magic(idx_files):
    with pytest.raises(FormatError):
        load_idx_images(idx_files[1])
    with pytest.raises(FormatError):
        load_idx_labels(idx_files[0])


def test_truncated_and_empty(tmp_path):
    p = tmp_path / "t"
    p.write_bytes(IMAGES[:-1])
    with pytest.raises(LengthError):
        load_idx_images(p)
    p.write_bytes(b"")
    with pytest.raises(LengthError):
        load_idx_labels(p)
    p.write_bytes(LABELS[:6])
    with pytest.raises(LengthError):
        load_idx_labels(p)


def test_label_range_check(idx_files):
    with pytest.raises(DomainError):
        load_idx_labels(idx_files[1], class_count=5)


def test_normalization_exact():
    ds = normalize_and_pack(np.array([[0, 255, 51]], dtype=np.uint8), np.array([1]))
    assert ds.inputs.tolist() == [[0.0, 1.0, 0.2]]


@settings(max_examples=50, deadline=None)
@given(arrays(np.uint8, (3, 5)))
def test_pack_round_trip(pixels):
    ds = normalize_and_pack(pixels, np.zeros(3, dtype=np.uint8))
    np.testing.assert_array_equal(np.rint(ds.inputs * 255).astype(np.uint8), pixels)
    assert np.all(ds.inputs * 255 == pixels)


def test_round_trip_via_files(tmp_path):
    rng = np.random.default_rng(0)
    pix = rng.integers(0, 256, (4, 3, 3), dtype=np.uint8)
    raw = struct.pack(">IIII", 0x803, 4, 3, 3) + pix.tobytes()
    (tmp_path / "i").write_bytes(raw)
    (tmp_path / "l").write_bytes(struct.pack(">II", 0x801, 4) + bytes([0, 1, 2, 3]))
    ds = load_mnist(tmp_path / "i", tmp_path / "l")
    assert np.all(ds.inputs * 255 == pix.reshape(4, 9))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 4), st.integers(1, 4), st.integers(-2, 12), st.sampled_from(["nan", "shape", "label", "ok"]))
def test_dataset_invariants(n, d, label, defect):
    x = np.zeros((n, d))
    y = np.full(n, min(max(label, 0), 9))
    if defect == "nan" and n:
        x[0, 0] = np.nan
    if defect == "shape":
        y = np.zeros(n + 1, dtype=int)
    if defect == "label" and n:
        y[0] = label
    bad = (defect == "nan" and n) or defect == "shape" or (defect == "label" and n and not 0 <= label < 10)
    if bad:
        with pytest.raises((DomainError, ShapeError)):
            Dataset(x, y, 10)
    else:
        ds = Dataset(x, y, 10)
        assert len(ds) == n
        with pytest.raises(ValueError):
            ds.inputs[...] = 1.0


def test_blobs_deterministic_and_separable():
    a = synth_blobs(50, 2, 2, separation=20.0, seed=4)
    b = synth_blobs(50, 2, 2, separation=20.0, seed=4)
    assert a.inputs.tobytes() == b.inputs.tobytes() and np.array_equal(a.labels, b.labels)
    # centres at (s/sqrt2, 0) and (0, s/sqrt2); the bisector x0 = x1 separates them
    pred = (a.inputs[:, 1] > a.inputs[:, 0]).astype(int)
    assert np.array_equal(pred, a.labels)


def test_blobs_empty():
    with pytest.raises(DomainError):
        synth_blobs(0, 2, 2, 1.0, 0)


def test_subset_full_is_permutation():
    ds = synth_blobs(7, 3, 3, 5.0, seed=1)
    sub = subset(ds, len(ds), seed=2)
    assert sorted(map(tuple, sub.inputs)) == sorted(map(tuple, ds.inputs))


def test_subset_one_per_class():
    ds = synth_blobs(20, 4, 10, 5.0, seed=1)
    sub = subset(ds, 10, seed=0)
    assert sorted(sub.labels.tolist()) == list(range(10))


def test_subset_stratification_counter():
    rng = np.random.default_rng(3)
    labels = rng.choice(5, size=997, p=[0.5, 0.2, 0.15, 0.1, 0.05])
    ds = Dataset(rng.normal(size=(997, 2)), labels, 5)
    n = 200
    sub = subset(ds, n, seed=1)
    counts = {c: int(np.sum(labels == c)) for c in range(5)}
    got = {c: int(np.sum(sub.labels == c)) for c in range(5)}
    assert sum(got.values()) == n
    for c in range(5):
        assert abs(got[c] - counts[c] * n / 997) < 1
    assert len({tuple(r) for r in sub.inputs}) == n


@requires_mnist
def test_official_mnist_shapes():
    p = mnist_paths()
    images = load_idx_images(p["train_images"])
    labels = load_idx_labels(p["train_labels"], class_count=10)
    assert images.shape == (60000, 784)
    assert labels.shape == (60000,) and labels.min() == 0 and labels.max() == 9
    assert load_idx_images(p["test_images"]).shape == (10000, 784)
