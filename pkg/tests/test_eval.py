import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from rollator.core import LabelSet
from rollator.errors import DataError
from rollator.evaluation import (
    DEFAULT_WINDOWS,
    Recipe,
    TransitionCounts,
    evaluate,
    evaluate_many,
    loocv,
    make_folds,
    per_behaviour_accuracy,
    pool,
    transition_metrics,
    window_sweep,
    windowed_accuracy,
    windowed_confusion,
    write_crossval,
)
from rollator.simgen import simulate_participants

AB = LabelSet(["NTW", "ST"])
ABC = LabelSet(["NTW", "ST", "WF"])
CODES = ABC.members

label_lists = st.lists(st.sampled_from(CODES), min_size=1, max_size=40)


@st.composite
def pairs(draw):
    a = draw(label_lists)
    p = draw(st.lists(st.sampled_from(CODES), min_size=len(a), max_size=len(a)))
    return a, p


def brute_hits(a, p, x):
    T = len(a)
    return [a[t] in p[max(0, t - x):min(T, t + x + 1)] for t in range(T)]


def brute_cpt(a, p, x):
    """Maximum one-to-one matching of same-pair transitions within the window."""
    at = [(t, a[t - 1], a[t]) for t in range(1, len(a)) if a[t] != a[t - 1]]
    pt = [(t, p[t - 1], p[t]) for t in range(1, len(p)) if p[t] != p[t - 1]]
    if not at or not pt:
        return 0
    ok = np.array([[int(f == g and h == k and abs(t - u) <= x) for (u, g, k) in at]
                   for (t, f, h) in pt])
    r, c = linear_sum_assignment(ok, maximize=True)
    return int(ok[r, c].sum())


def formula_cpt(a, p):
    return sum(p[t] != p[t - 1] and a[t] == p[t] and a[t - 1] == p[t - 1]
               for t in range(1, len(a)))


class TestWindowedAccuracy:
    def test_exact_match(self):
        assert windowed_accuracy(list("AAB"), list("ABB"), 0) == pytest.approx(2 / 3)

    def test_window_admits_neighbour(self):
        assert windowed_accuracy(list("AAB"), list("ABB"), 1) == 1.0

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            windowed_accuracy(["A"], ["A", "B"], 0)

    def test_negative_window(self):
        with pytest.raises(DataError):
            windowed_accuracy(["A"], ["A"], -1)

    @given(pairs(), st.integers(0, 10))
    def test_matches_brute_force(self, ap, x):
        a, p = ap
        assert windowed_accuracy(a, p, x) == pytest.approx(np.mean(brute_hits(a, p, x)))

    @given(pairs())
    def test_monotone_in_window(self, ap):
        a, p = ap
        acc = [windowed_accuracy(a, p, x) for x in range(0, 12)]
        assert all(b >= c for b, c in zip(acc[1:], acc[:-1]))

    @given(label_lists, st.integers(0, 10))
    def test_self_is_perfect(self, a, x):
        assert windowed_accuracy(a, a, x) == 1.0

    def test_random_baseline(self):
        rng = np.random.default_rng(0)
        ls = LabelSet.experiment2()
        a = rng.choice(ls.members, 100_000)
        p = rng.choice(ls.members, 100_000)
        assert abs(windowed_accuracy(a, p, 0) - 1 / 13) < 0.01


class TestConfusion:
    def test_perfect_is_diagonal(self):
        a = ["NTW", "ST", "ST", "WF"]
        np.testing.assert_array_equal(windowed_confusion(a, a, ABC), np.diag([1, 2, 1]))

    def test_total_confusion(self):
        conf = windowed_confusion(["NTW", "NTW"], ["ST", "ST"], AB, 0)
        np.testing.assert_array_equal(conf, [[0, 2], [0, 0]])

    def test_window_hit_goes_to_diagonal(self):
        conf = windowed_confusion(["NTW", "NTW", "ST"], ["NTW", "ST", "ST"], AB, 1)
        np.testing.assert_array_equal(conf, [[2, 0], [0, 1]])

    @given(pairs(), st.integers(0, 6))
    def test_rows_and_trace(self, ap, x):
        a, p = ap
        conf = windowed_confusion(a, p, ABC, x)
        counts = [a.count(b) for b in CODES]
        np.testing.assert_array_equal(conf.sum(axis=1), counts)
        assert conf.sum() == len(a)
        assert np.trace(conf) / len(a) == pytest.approx(windowed_accuracy(a, p, x))

    def test_per_behaviour_nan_for_absent(self):
        acc = per_behaviour_accuracy(np.array([[3, 1], [0, 0]]))
        assert acc[0] == 0.75 and np.isnan(acc[1])

    def test_unknown_label(self):
        with pytest.raises(DataError):
            windowed_confusion(["NTW"], ["XX"], AB)


class TestTransitions:
    def test_identical(self):
        a = ["NTW", "ST", "ST", "WF", "NTW"]
        t = transition_metrics(a, a, 0)
        assert (t.at, t.pt, t.cpt) == (3, 3, 3)
        assert t.cpt_over_at == t.cpt_over_pt == 1.0

    def test_hand_fixture(self):
        t = transition_metrics(list("AABB"), list("ABBB"), 0)
        assert (t.at, t.pt, t.cpt) == (1, 1, 0)

    def test_constant_prediction(self):
        t = transition_metrics(list("ABAB"), list("AAAA"), 3)
        assert (t.pt, t.cpt) == (0, 0)
        assert t.cpt_over_pt == 0.0 and t.cpt_over_at == 0.0

    def test_window_shift(self):
        t = transition_metrics(list("AABB"), list("ABBB"), 1)
        assert t.cpt == 1

    def test_each_actual_matched_once(self):
        # one actual A->B, two predicted A->B inside the window
        t = transition_metrics(list("AAABBB"), list("ABABBB"), 3)
        assert (t.at, t.pt, t.cpt) == (1, 3, 1)

    def test_cpt_bound_enforced(self):
        with pytest.raises(DataError):
            TransitionCounts(1, 0, 1)

    @given(pairs())
    def test_window_zero_matches_formula(self, ap):
        a, p = ap
        t = transition_metrics(a, p, 0)
        assert t.at == sum(a[i] != a[i - 1] for i in range(1, len(a)))
        assert t.pt == sum(p[i] != p[i - 1] for i in range(1, len(p)))
        assert t.cpt == formula_cpt(a, p)

    @settings(max_examples=200)
    @given(pairs(), st.integers(0, 8))
    def test_greedy_is_maximum_matching(self, ap, x):
        a, p = ap
        t = transition_metrics(a, p, x)
        assert t.cpt == brute_cpt(a, p, x)
        assert t.cpt <= min(t.at, t.pt)


class TestReports:
    def test_pool_sums_counts(self):
        r1 = evaluate(["NTW", "ST"], ["NTW", "NTW"], AB, 0)
        r2 = evaluate(["ST", "ST", "ST"], ["ST", "ST", "ST"], AB, 0)
        p = pool([r1, r2])
        assert p.total == 5
        assert p.accuracy == pytest.approx(4 / 5)

    def test_pool_rejects_mixed_windows(self):
        with pytest.raises(DataError):
            evaluate(["NTW"], ["NTW"], AB, 0) + evaluate(["NTW"], ["NTW"], AB, 5)

    def test_windows_do_not_cross_sequences(self):
        reps = evaluate_many([["NTW"], ["ST"]], [["ST"], ["NTW"]], AB, [0, 10])
        assert reps[10].accuracy == 0.0

    def test_default_grid(self):
        assert DEFAULT_WINDOWS == (0, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50)

    def test_sweep_rows(self):
        a, p = ["NTW", "NTW", "ST", "ST"], ["NTW", "ST", "ST", "ST"]
        reps = evaluate_many([a], [p], AB, [5, 0])
        rows = window_sweep(reps)
        assert [r[0] for r in rows] == [0, 5]
        assert rows[0][1:] == (0.75, 0.0, 0.0) and rows[1][1:] == (1.0, 1.0, 1.0)

    def test_json_fields(self):
        r = evaluate(["NTW", "ST"], ["NTW", "ST"], AB, 0).to_json()
        assert r["accuracy_pct"] == 100.0
        assert r["transitions"] == {"AT": 1, "PT": 1, "CPT": 1, "cpt_over_at": 1.0,
                                    "cpt_over_pt": 1.0}
        json.dumps(r)


@pytest.fixture(scope="module")
def exp2_raws():
    return simulate_participants(3, "exp2", seed=5)


@pytest.fixture(scope="module")
def exp2_cv(exp2_raws):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return loocv(exp2_raws, LabelSet.experiment2(), Recipe(), "exp2")


class TestLoocv:
    def test_fold_count_and_disjointness(self, exp2_raws):
        folds = make_folds(exp2_raws, "exp2")
        assert len(folds) == 3
        for f in folds:
            assert not set(f.train) & set(f.test)
            assert {exp2_raws[i].participant_id for i in f.test} == {f.participant}
            assert f.participant not in {exp2_raws[i].participant_id for i in f.train}

    def test_exp1_keeps_own_other_runs(self):
        raws = simulate_participants(2, "exp1", runs=2, seed=1)
        folds = make_folds(raws, "exp1")
        assert len(folds) == 2
        for f in folds:
            assert len(f.test) == 1
            assert f.test[0] not in f.train
            own = [i for i in f.train if raws[i].participant_id == f.participant]
            assert len(own) == 1 and len(f.train) == 3

    def test_exp1_needs_two_runs(self, exp2_raws):
        with pytest.raises(DataError, match="2 runs"):
            make_folds(exp2_raws, "exp1")

    def test_needs_two_participants(self, exp2_raws):
        with pytest.raises(DataError):
            make_folds(exp2_raws[:1], "exp2")

    def test_pooled_is_tick_weighted(self, exp2_cv):
        for x in exp2_cv.windows:
            accs = np.array([f.reports[x].accuracy for f in exp2_cv.folds])
            ticks = np.array([f.ticks for f in exp2_cv.folds])
            assert exp2_cv.pooled(x).accuracy == pytest.approx((accs * ticks).sum() / ticks.sum())

    def test_accuracy_is_high_on_synthetic_course(self, exp2_cv):
        assert exp2_cv.pooled().accuracy >= 0.9

    def test_window_grid_includes_report_window(self, exp2_raws):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            cv = loocv(exp2_raws, LabelSet.experiment2(), Recipe(), windows=[0], window=7)
        assert cv.windows == (0, 7)

    def test_deterministic(self, exp2_raws, exp2_cv):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            again = loocv(exp2_raws, LabelSet.experiment2(), Recipe(), "exp2")
        for f, g in zip(exp2_cv.folds, again.folds):
            assert f.predicted == g.predicted

    def test_unsupervised_recipe_emits_behaviour_codes(self, exp2_raws):
        recipe = Recipe(family="hmm-em", restarts=2, em_iters=20)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            cv = loocv(exp2_raws[:2], LabelSet.experiment2(), recipe, windows=[0], window=0)
        codes = set(LabelSet.experiment2().members)
        for f in cv.folds:
            assert set(f.predicted[0]) <= codes

    def test_writes_reports(self, exp2_cv, tmp_path):
        write_crossval(exp2_cv, tmp_path)
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert len(summary["folds"]) == 3
        assert summary["pooled_accuracy"] == exp2_cv.pooled().accuracy
        sweep = (tmp_path / "pooled" / "window_sweep.csv").read_text().splitlines()
        assert sweep[0] == "window,accuracy,cpt_over_at,cpt_over_pt"
        assert len(sweep) == 1 + len(DEFAULT_WINDOWS)
        for p in ("p01", "p02", "p03"):
            assert (tmp_path / "folds" / p / "confusion.csv").exists()
            assert (tmp_path / "folds" / p / "predictions_0.csv").exists()


class TestRecipe:
    def test_defaults(self):
        r = Recipe()
        assert (r.D, r.tau, r.sigma2, r.restarts, r.crf_iters) == (20, 4000.0, 1.0, 20, 100)

    def test_round_trip(self):
        r = Recipe(family="crf", sigma2=2.0)
        assert Recipe.from_json(json.loads(json.dumps(r.to_json()))) == r

    @pytest.mark.parametrize("bad", [{"family": "svm"}, {"D": 1}, {"sigma2": 0.0},
                                     {"sweeps": 10, "burn_in": 10}, {"bogus": 1}])
    def test_rejects_bad_values(self, bad):
        with pytest.raises(DataError):
            Recipe.from_json(bad)
