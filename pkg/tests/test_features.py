import warnings

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from rollator.core import RAW_CHANNELS, FeatureSequence, RawSequence
from rollator.errors import DataError
from rollator.features import (
    COP_FEATURES,
    DEFAULT_BINS,
    NL_FEATURES,
    Calibration,
    Discretizer,
    apply_discretizer,
    build_features,
    compute_cop,
    compute_speed,
    fit_discretizer,
    fit_load_calibration,
    normalize_load,
)

loads = st.integers(0, 65535)


def column(values, name="x"):
    return FeatureSequence("p", (name,), np.asarray(values, dtype=float)[:, None])


def raw(channels, labels=None):
    channels = np.asarray(channels)
    return RawSequence("p", np.arange(channels.shape[0]), channels, labels, RAW_CHANNELS)


class TestNormalizeLoad:
    @pytest.mark.parametrize("value, expected", [(50, 0.5), (0, 0.0), (100, 1.0), (120, 1.0),
                                                 (-5, 0.0)])
    def test_examples(self, value, expected):
        assert normalize_load(value, 0, 100) == expected

    def test_degenerate_range(self):
        with pytest.raises(DataError, match="degenerate"):
            normalize_load(3, 7, 7)

    @given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
    def test_monotone(self, a, b):
        lo, hi = -1000.0, 5000.0
        if a <= b:
            assert normalize_load(a, lo, hi) <= normalize_load(b, lo, hi)


class TestCop:
    @pytest.mark.parametrize("args, expected", [((100, 100, 100, 100), (0, 0, 400)),
                                                ((200, 0, 200, 0), (1, 0, 400)),
                                                ((0, 0, 0, 0), (0, 0, 0)),
                                                ((0, 0, 50, 50), (0, 1, 100))])
    def test_examples(self, args, expected):
        assert compute_cop(*args) == pytest.approx(expected)

    def test_negative_load(self):
        with pytest.raises(DataError):
            compute_cop(-1, 0, 0, 0)

    @given(loads, loads, loads, loads, st.floats(0.01, 100))
    def test_scale_invariant_and_bounded(self, a, b, c, d, s):
        f1, g1, t1 = compute_cop(a, b, c, d)
        f2, g2, t2 = compute_cop(a * s, b * s, c * s, d * s)
        assert f2 == pytest.approx(f1, abs=1e-12) and g2 == pytest.approx(g1, abs=1e-12)
        assert -1 <= f1 <= 1 and -1 <= g1 <= 1
        assert t2 == pytest.approx(t1 * s)

    def test_vectorised(self):
        f, g, t = compute_cop([100, 0], [100, 0], [100, 0], [100, 0])
        np.testing.assert_array_equal(t, [400, 0])


class TestSpeed:
    def test_constant_encoder(self):
        np.testing.assert_array_equal(compute_speed([7, 7, 7]), [0, 0, 0])

    def test_constant_increment(self):
        np.testing.assert_allclose(compute_speed([0, 3, 6, 9], ticks_per_meter=2.0),
                                   [0, 75, 75, 75])

    def test_backward_is_negative(self):
        assert np.all(compute_speed([10, 8, 5])[1:] < 0)

    def test_bad_calibration(self):
        with pytest.raises(DataError):
            compute_speed([1, 2], ticks_per_meter=0)


class TestDiscretizer:
    def test_uniform_grid(self):
        disc = fit_discretizer([column(np.arange(1, 101))], 20)
        bins = disc.transform(np.arange(1, 101))
        np.testing.assert_array_equal(np.bincount(bins[:, 0])[1:], np.full(20, 5))

    def test_default_bins(self):
        assert DEFAULT_BINS == 20

    def test_identical_values(self):
        with pytest.warns(RuntimeWarning, match="duplicate"):
            disc = fit_discretizer([column(np.full(10, 3.0))], 4)
        np.testing.assert_array_equal(disc.transform(np.full(5, 3.0)), np.ones((5, 1)))

    def test_out_of_range_values(self):
        disc = fit_discretizer([column(np.arange(10))], 5)
        np.testing.assert_array_equal(disc.transform([-1e9, 1e9])[:, 0], [1, 5])

    def test_edge_goes_to_lower_bin(self):
        disc = Discretizer(3, (np.array([1.0, 2.0]),))
        np.testing.assert_array_equal(disc.transform([1.0, 1.5, 2.0, 2.5])[:, 0], [1, 2, 2, 3])

    def test_bad_D(self):
        with pytest.raises(DataError):
            fit_discretizer([column([1, 2])], 1)

    def test_layout_checked(self):
        disc = fit_discretizer([column([1, 2, 3], "a")], 2)
        with pytest.raises(DataError):
            apply_discretizer(disc, column([1, 2], "b"))

    def test_apply_marks_bins(self):
        seq = column([1.0, 2.0, 3.0, 4.0])
        out = apply_discretizer(fit_discretizer([seq], 2), seq)
        np.testing.assert_array_equal(out.discretized[:, 0], [1, 1, 2, 2])
        assert out.D == 2

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 10), st.integers(1, 20), st.integers(0, 2**32 - 1))
    def test_equal_frequency_without_ties(self, D, per_bin, seed):
        x = np.random.default_rng(seed).permutation(D * per_bin).astype(float) * 0.37
        bins = fit_discretizer([column(x)], D).transform(x)[:, 0]
        np.testing.assert_array_equal(np.bincount(bins, minlength=D + 1)[1:], per_bin)

    @settings(max_examples=50, deadline=None)
    @given(hnp.arrays(float, st.integers(2, 60), elements=st.floats(-100, 100)),
           st.integers(2, 8), st.floats(-200, 200), st.floats(-200, 200))
    def test_monotone_and_in_range(self, x, D, a, b):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            disc = fit_discretizer([column(x)], D)
        lo, hi = sorted((a, b))
        blo, bhi = disc.transform([lo, hi])[:, 0]
        assert 1 <= blo <= bhi <= D

    @settings(max_examples=50, deadline=None)
    @given(hnp.arrays(float, st.integers(4, 80), elements=st.integers(0, 6).map(float)),
           st.integers(2, 6))
    def test_bin_counts_within_tie_slack(self, x, D):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            disc = fit_discretizer([column(x)], D)
        bins = disc.transform(x)[:, 0]
        counts = np.bincount(bins, minlength=D + 1)[1:]
        edges = disc.edges[0]
        for j in range(D):
            slack = sum(int(np.sum(x == e)) for e in set(edges[max(0, j - 1):j + 1]))
            assert abs(counts[j] - x.size / D) <= slack + 1


class TestBuildFeatures:
    def frames(self, T=4):
        ch = np.zeros((T, 8), dtype=int)
        ch[:, 0:3] = [100, 200, 300]
        ch[:, 3:7] = 1000
        ch[:, 7] = 500
        return ch

    def test_cop_columns(self):
        f = build_features(raw(self.frames()), "cop")
        assert f.feature_names == COP_FEATURES and f.n == 7

    def test_nl_columns(self):
        ch = self.frames()
        ch[0, 3] = 0
        f = build_features(raw(ch), "nl")
        assert f.feature_names == NL_FEATURES and f.n == 8
        assert f.values[0, 4] == 0.0 and f.values[1, 4] == 1.0

    def test_still_symmetric(self):
        f = build_features(raw(self.frames()), "cop")
        np.testing.assert_array_equal(f.values[:, 3:6], np.zeros((4, 3)))
        np.testing.assert_array_equal(f.values[:, 6], 4000)
        np.testing.assert_array_equal(f.values[:, 0:3], np.tile([100, 200, 300], (4, 1)))

    def test_labels_carried(self):
        f = build_features(raw(self.frames(2), ("WF", "WB")), "cop")
        assert f.labels == ("WF", "WB")

    def test_calibration_range(self):
        ch = self.frames()
        calib = Calibration(500, 1500)
        f = build_features(raw(ch), "nl", calib)
        np.testing.assert_allclose(f.values[:, 4:8], 0.5)

    def test_fit_calibration_pools_cells(self):
        a = self.frames()
        a[0, 4] = 10
        b = self.frames()
        b[1, 6] = 9000
        calib = fit_load_calibration([raw(a), raw(b)], 2.0)
        assert (calib.load_min, calib.load_max, calib.ticks_per_meter) == (10, 9000, 2.0)

    def test_unknown_mode(self):
        with pytest.raises(DataError):
            build_features(raw(self.frames()), "xyz")

    def test_layout_mismatch(self):
        r = RawSequence("p", [0], np.zeros((1, 2)), channel_names=("a", "b"))
        with pytest.raises(DataError, match="layout"):
            build_features(r, "cop")

    @given(st.lists(st.tuples(loads, loads, loads, loads), min_size=1, max_size=10))
    def test_nl_in_unit_interval(self, rows):
        ch = np.zeros((len(rows), 8), dtype=int)
        ch[:, 3:7] = rows
        assume(ch[:, 3:7].max() > ch[:, 3:7].min())
        f = build_features(raw(ch), "nl")
        assert f.values[:, 4:].min() >= 0 and f.values[:, 4:].max() <= 1
