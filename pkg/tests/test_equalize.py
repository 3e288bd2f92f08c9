import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import brute_force_he_lut, double_loop_density
from rgcache.equalize import (
    IntensityMapping,
    apply_mapping,
    mapping_from,
    plain_histogram,
    quantize,
    weighted_histogram,
    write_histogram_csv,
)

every_level = np.arange(256).reshape(16, 16) / 255.0


def random_density_model(rng, K=256):
    """Weighted histogram of a random image with random weights."""
    a = rng.random((16, 16))
    return weighted_histogram(a, rng.random((16, 16)) + 1e-3, K)


class TestPlainHistogram:
    def test_constant_black(self):
        h = plain_histogram(np.zeros((4, 5)))
        assert h.density[0] == 1.0 and h.density[1:].sum() == 0.0
        assert h.counts[0] == 20 and h.n == 20

    def test_two_extremes(self):
        h = plain_histogram(np.array([[0.0, 1.0]]))
        assert h.density[0] == 0.5 and h.density[255] == 0.5

    def test_counting_oracle(self, rng):
        a = rng.random((16, 16))
        counts = np.zeros(256, int)
        for v in a.ravel():
            counts[int(np.floor(v * 255 + 0.5))] += 1
        h = plain_histogram(a)
        np.testing.assert_array_equal(h.counts, counts)
        np.testing.assert_array_equal(h.density, counts / 256)

    def test_invariants(self, rng):
        h = plain_histogram(rng.random((9, 7)), K=32)
        assert abs(h.density.sum() - 1) <= 1e-9 and abs(h.cdf[-1] - 1) <= 1e-9
        assert np.all(np.diff(h.cdf) >= 0)

    def test_errors(self):
        with pytest.raises(ValueError):
            plain_histogram(np.zeros((0, 3)))
        with pytest.raises(ValueError):
            plain_histogram(np.zeros((2, 2)), K=1)


class TestWeightedHistogram:
    def test_hand_example(self):
        a = np.array([[0.0, 0.0], [0.5, 1.0]])  # bins 0, 0, 1, 2 with K=3
        h = weighted_histogram(a, np.array([[1.0, 1.0], [2.0, 4.0]]), K=3)
        np.testing.assert_allclose(h.density, [0.25, 0.25, 0.5], rtol=0, atol=1e-15)

    @pytest.mark.parametrize("c", [1e-6, 0.37, 1.0, 123.0])
    def test_constant_weights_equal_plain(self, rng, c):
        a = rng.random((13, 11))
        plain = plain_histogram(a)
        weighted = weighted_histogram(a, np.full(a.shape, c))
        np.testing.assert_array_equal(weighted.density, plain.density)
        np.testing.assert_array_equal(weighted.cdf, plain.cdf)

    def test_double_loop_oracle(self, rng):
        a = rng.random((8, 8))
        phi = rng.uniform(1e-3, 5.0, (8, 8))
        h = weighted_histogram(a, phi)
        assert np.max(np.abs(h.density - double_loop_density(a, phi))) <= 1e-12

    def test_errors(self):
        with pytest.raises(ValueError):
            weighted_histogram(np.zeros((2, 2)), np.ones((2, 3)))
        with pytest.raises(ValueError):
            weighted_histogram(np.zeros((2, 2)), np.array([[1.0, 0.0], [1.0, 1.0]]))
        with pytest.raises(ValueError):
            weighted_histogram(np.zeros((2, 2)), -np.ones((2, 2)))


class TestMapping:
    def test_single_bin_step(self):
        a = np.full((3, 3), 100 / 255)
        m = mapping_from(plain_histogram(a))
        assert np.all(m.table[:100] == 0) and np.all(m.table[100:] == 255)

    def test_uniform_closed_form(self):
        m = mapping_from(plain_histogram(every_level))
        k = np.arange(256)
        np.testing.assert_array_equal(m.table, np.floor(255 * (k + 1) / 256 + 0.5))
        assert m.table[0] == 1 and m.table[255] == 255

    def test_gain_identity(self, rng):
        for _ in range(20):
            h = random_density_model(rng)
            m = mapping_from(h)
            np.testing.assert_allclose(np.diff(m.table_real), 255 * h.density[1:], rtol=0, atol=1e-12)

    def test_matches_brute_force_he(self, rng):
        a = rng.random((16, 16))
        np.testing.assert_array_equal(mapping_from(plain_histogram(a)).table, brute_force_he_lut(a))

    def test_monotone_with_endpoint(self, rng):
        for K in (2, 16, 256):
            for _ in range(30):
                m = mapping_from(random_density_model(rng, K))
                assert np.all(np.diff(m.table) >= 0) and m.table[-1] == K - 1


class TestApply:
    def test_identity_lut_quantizes(self, rng):
        a = rng.random((6, 6))
        ident = IntensityMapping(table=np.arange(256), table_real=np.arange(256.0))
        np.testing.assert_array_equal(apply_mapping(a, ident), quantize(a) / 255)

    def test_constant_image(self, rng):
        m = mapping_from(random_density_model(rng))
        out = apply_mapping(np.full((4, 4), 0.3), m)
        assert np.all(out == out[0, 0])

    def test_lookup_oracle(self, rng):
        a = rng.random((10, 10))
        lut = np.sort(rng.integers(0, 256, 256))
        lut[-1] = 255
        m = IntensityMapping(table=lut, table_real=lut.astype(float))
        out = apply_mapping(a, m)
        for i in range(10):
            for j in range(10):
                assert out[i, j] == lut[int(np.floor(a[i, j] * 255 + 0.5))] / 255

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, (5, 6), elements=st.floats(0, 1)), arrays(np.float64, (5, 6), elements=st.floats(0.01, 10)))
    def test_order_preserved(self, a, phi):
        out = apply_mapping(a, mapping_from(weighted_histogram(a, phi)))
        order = np.argsort(a.ravel(), kind="stable")
        assert np.all(np.diff(out.ravel()[order]) >= 0)

    @settings(max_examples=80, deadline=None)
    @given(arrays(np.int64, (32, 32), elements=st.integers(0, 255)))
    def test_he_peak_grows_by_less_than_one_level(self, levels):
        # bins can only merge when their CDF values round alike, so a merge
        # adds less than 1/(K-1) of mass to any output bin
        a = levels / 255.0
        before = plain_histogram(a)
        if before.density.max() > 0.5:
            return
        after = plain_histogram(apply_mapping(a, mapping_from(before)))
        assert after.density.max() < before.density.max() + 1 / 255

    def test_he_peak_can_grow_through_merging(self):
        a = np.zeros((32, 32))
        flat = a.ravel()
        flat[:400] = 10 / 255
        flat[400] = 11 / 255
        flat[401:] = np.linspace(0.2, 1.0, flat.size - 401)
        before = plain_histogram(a)
        after = plain_histogram(apply_mapping(a, mapping_from(before)))
        assert before.density.max() < after.density.max() < before.density.max() + 1 / 255


def test_csv_export(tmp_path, rng):
    h = plain_histogram(rng.random((5, 5)), K=8)
    m = mapping_from(h)
    p = tmp_path / "h.csv"
    write_histogram_csv(p, h, m)
    lines = p.read_text().splitlines()
    assert lines[0] == "k,p,P,T" and len(lines) == 9
    k, pk, cdf, t = lines[-1].split(",")
    assert (k, float(cdf), int(t)) == ("7", pytest.approx(1.0), 7)
