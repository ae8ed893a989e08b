import io
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from palette_forge.colorspace import ColorHsv
from palette_forge.histogram import (
    DIMS,
    N_BINS,
    BinIndex,
    HsvHistogram,
    bin_center_hsv,
    bin_center_lab,
    bin_centers_lab,
    bin_index_array,
    bin_of,
    entropy_bits,
    histogram_from_json_dict,
    histogram_of_image,
    histogram_to_json_dict,
    load_histogram,
    phst_bytes,
    phst_from_bytes,
    pixel_bin_counts,
    read_phst,
    save_histogram,
    write_phst,
)


def test_dims_constants():
    assert DIMS == (34, 12, 10)
    assert N_BINS == 4080


def test_bin_of_known_values():
    assert bin_of(ColorHsv(0.0, 0.0, 0.0)) == BinIndex(0, 0, 0)
    assert bin_of(ColorHsv(180.0, 0.5, 0.5)) == BinIndex(17, 6, 5)
    assert bin_of(ColorHsv(359.999, 0.999, 0.999)) == BinIndex(33, 11, 9)
    # top-edge inputs clamp into the last bin instead of overflowing
    assert bin_of(ColorHsv(360.0, 1.0, 1.0)) == BinIndex(33, 11, 9)


def test_flat_round_trip():
    for flat in (0, 1, 119, 120, 4079):
        b = BinIndex.from_flat(flat)
        assert b.flat() == flat
    assert BinIndex(1, 0, 0).flat() == 120
    assert BinIndex(0, 1, 0).flat() == 10
    assert BinIndex(0, 0, 1).flat() == 1
    with pytest.raises(ValueError):
        BinIndex.from_flat(4080)
    with pytest.raises(ValueError):
        BinIndex.from_flat(-1)


def test_every_bin_center_maps_to_its_own_bin():
    """The binning is onto: every bin is hit, by its own center."""
    idx = np.arange(N_BINS)
    h_bin, rest = np.divmod(idx, 120)
    s_bin, v_bin = np.divmod(rest, 10)
    centers = np.stack(
        [(h_bin + 0.5) * 360.0 / 34, (s_bin + 0.5) / 12, (v_bin + 0.5) / 10], axis=-1
    )
    np.testing.assert_array_equal(bin_index_array(centers), idx)


def test_bin_center_helpers_agree():
    center = bin_center_hsv(BinIndex(3, 4, 5))
    assert center == bin_center_hsv(BinIndex(3, 4, 5).flat())
    lab = bin_center_lab(BinIndex(3, 4, 5))
    table = bin_centers_lab(DIMS)
    np.testing.assert_allclose(table[BinIndex(3, 4, 5).flat()], lab.as_array())


def test_histogram_of_image_counts():
    # four pixels, two in the same bin
    px = np.array(
        [
            [1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0],
        ]
    )
    hist = histogram_of_image(px)
    sparse = hist.to_sparse()
    assert hist.is_normalized
    assert len(sparse) == 3
    assert sorted(sparse.values()) == [0.25, 0.25, 0.5]
    counts = pixel_bin_counts(px)
    assert counts.sum() == 4
    assert counts.max() == 2


def test_histogram_accepts_image_shaped_input():
    rng = np.random.default_rng(5)
    img = rng.random((16, 16, 3))
    a = histogram_of_image(img)
    b = histogram_of_image(img.reshape(-1, 3))
    np.testing.assert_array_equal(a.mass, b.mass)


def test_histogram_pixel_order_invariance_is_exact():
    rng = np.random.default_rng(6)
    px = rng.random((4096, 3))
    shuffled = px[rng.permutation(4096)]
    np.testing.assert_array_equal(
        histogram_of_image(px).mass, histogram_of_image(shuffled).mass
    )


def test_histogram_empty_input_rejected():
    with pytest.raises(ValueError):
        histogram_of_image(np.empty((0, 3)))


def test_histogram_validation():
    with pytest.raises(ValueError):
        HsvHistogram(np.ones(7), DIMS)
    with pytest.raises(ValueError):
        HsvHistogram(-np.ones(N_BINS), DIMS)
    with pytest.raises(ValueError):
        HsvHistogram(np.full(N_BINS, np.nan), DIMS)
    hist = HsvHistogram(np.ones(N_BINS), DIMS)
    assert not hist.is_normalized
    with pytest.raises(ValueError):
        hist.mass[0] = 2.0  # mass is frozen


def test_normalize():
    hist = HsvHistogram(np.ones(N_BINS), DIMS)
    normed = hist.normalize()
    assert normed.is_normalized
    assert normed.total() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        HsvHistogram(np.zeros(N_BINS), DIMS).normalize()


def test_entropy_uniform_and_delta():
    uniform = HsvHistogram(np.full(N_BINS, 1.0 / N_BINS), DIMS)
    assert entropy_bits(uniform) == pytest.approx(np.log2(N_BINS), abs=1e-9)
    delta = HsvHistogram.from_sparse({17: 1.0}, DIMS)
    assert entropy_bits(delta) == 0.0


def test_entropy_eight_equal_bins_exact():
    hist = HsvHistogram.from_sparse({i * 13: 0.125 for i in range(8)}, DIMS)
    assert entropy_bits(hist) == 3.0


def test_entropy_requires_normalized():
    with pytest.raises(ValueError):
        entropy_bits(HsvHistogram(np.ones(N_BINS), DIMS))


def test_entropy_mass_permutation_invariance():
    rng = np.random.default_rng(9)
    mass = rng.random(N_BINS)
    mass /= mass.sum()
    a = entropy_bits(HsvHistogram(mass, DIMS))
    b = entropy_bits(HsvHistogram(np.sort(mass), DIMS))
    assert a == pytest.approx(b, abs=1e-12)


# ---------------------------------------------------------------------------
# Serialization


def _random_normalized(rng, support=40):
    idx = rng.choice(N_BINS, size=support, replace=False)
    mass = np.zeros(N_BINS)
    mass[idx] = rng.random(support)
    return HsvHistogram(mass / mass.sum(), DIMS)


def test_phst_round_trip_file_and_buffer(tmp_path):
    rng = np.random.default_rng(1)
    hist = _random_normalized(rng)
    path = tmp_path / "h.phst"
    write_phst(hist, path)
    back = read_phst(path)
    assert back.dims == hist.dims
    assert back.is_normalized
    np.testing.assert_allclose(back.mass, hist.mass, atol=1e-6)

    buf = io.BytesIO()
    write_phst(hist, buf)
    buf.seek(0)
    np.testing.assert_array_equal(read_phst(buf).mass, back.mass)


def test_phst_bytes_round_trip_is_byte_identical():
    """Decoding then re-encoding reproduces the exact byte stream."""
    rng = np.random.default_rng(2)
    original = phst_bytes(_random_normalized(rng))
    hist, consumed = phst_from_bytes(original)
    assert consumed == len(original)
    assert phst_bytes(hist) == original


def test_phst_renormalizes_float32_rounding():
    rng = np.random.default_rng(3)
    hist = _random_normalized(rng, support=500)
    back, _ = phst_from_bytes(phst_bytes(hist))
    assert back.is_normalized
    assert back.total() == pytest.approx(1.0, abs=1e-9)


def test_phst_preserves_unnormalized_payloads():
    hist = HsvHistogram(np.full(N_BINS, 2.0), DIMS)
    back, _ = phst_from_bytes(phst_bytes(hist))
    assert not back.is_normalized
    assert back.total() == pytest.approx(2.0 * N_BINS, rel=1e-6)


def test_phst_rejects_malformed():
    rng = np.random.default_rng(4)
    good = phst_bytes(_random_normalized(rng))
    with pytest.raises(ValueError):
        phst_from_bytes(b"JUNK" + good[4:])
    with pytest.raises(ValueError):
        phst_from_bytes(good[:2] )
    with pytest.raises(ValueError):
        phst_from_bytes(good[:-8])
    bad_version = bytearray(good)
    bad_version[4] = 9
    with pytest.raises(ValueError):
        phst_from_bytes(bytes(bad_version))
    negative = bytearray(good)
    negative[12:16] = np.array([-0.5], dtype="<f4").tobytes()
    with pytest.raises(ValueError):
        phst_from_bytes(bytes(negative))
    with pytest.raises(ValueError):
        read_phst(io.BytesIO(good + b"x"))


def test_phst_small_dims_round_trip():
    hist = HsvHistogram(np.arange(24, dtype=float) / np.arange(24).sum(), (4, 3, 2))
    back, _ = phst_from_bytes(phst_bytes(hist))
    assert back.dims == (4, 3, 2)
    np.testing.assert_allclose(back.mass, hist.mass, atol=1e-7)


def test_json_round_trip():
    rng = np.random.default_rng(5)
    hist = _random_normalized(rng, support=12)
    doc = histogram_to_json_dict(hist)
    assert doc["dims"] == [34, 12, 10]
    back = histogram_from_json_dict(json.loads(json.dumps(doc)))
    np.testing.assert_array_equal(back.mass, hist.mass)


def test_json_rejects_bad_documents():
    with pytest.raises(ValueError):
        histogram_from_json_dict({"bins": {}})
    with pytest.raises(ValueError):
        histogram_from_json_dict({"dims": [34, 12], "bins": {}})
    with pytest.raises(ValueError):
        histogram_from_json_dict({"dims": [34, 12, 10], "bins": {"4080": 1.0}})


def test_save_load_dispatch(tmp_path):
    rng = np.random.default_rng(6)
    hist = _random_normalized(rng, support=9)
    for name in ("h.phst", "h.json"):
        path = tmp_path / name
        save_histogram(hist, path)
        back = load_histogram(path)
        assert back.dims == hist.dims
        np.testing.assert_allclose(back.mass, hist.mass, atol=1e-6)


@given(st.dictionaries(st.integers(0, N_BINS - 1), st.floats(0.001, 10.0), min_size=1, max_size=20))
def test_sparse_round_trip(bins):
    hist = HsvHistogram.from_sparse(bins, DIMS)
    assert hist.to_sparse() == {k: float(v) for k, v in bins.items()}
