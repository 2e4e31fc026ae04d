import numpy as np
import pytest

from rollator.errors import DataError
from rollator.features import build_features, compute_speed
from rollator.hmm import HmmModel
from rollator.simgen import (
    CourseScript,
    default_course,
    load_emission_table,
    sample_hmm,
    simulate_course,
    simulate_participants,
)


def one_segment(b, d=400, noise=1.0, seed=0):
    return simulate_course(CourseScript(((b, d),), noise, seed))


def total_load(raw):
    return raw.channels[:, 3:7].sum(axis=1)


class TestSampleHmm:
    def test_one_hot_is_deterministic(self):
        model = HmmModel([0, 1], [[0, 1], [1, 0]], [[[1, 0, 0]], [[0, 0, 1]]])
        states, obs = sample_hmm(model, 6, rng_seed=3)
        np.testing.assert_array_equal(states, [1, 0, 1, 0, 1, 0])
        np.testing.assert_array_equal(obs[:, 0], [3, 1, 3, 1, 3, 1])

    def test_same_seed_same_output(self):
        rng = np.random.default_rng(0)
        model = HmmModel(rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3), 3),
                         rng.dirichlet(np.ones(4), (3, 2)))
        a = sample_hmm(model, 200, 11)
        b = sample_hmm(model, 200, 11)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])

    def test_transition_frequencies(self):
        theta = np.array([[0.7, 0.2, 0.1], [0.3, 0.5, 0.2], [0.25, 0.25, 0.5]])
        model = HmmModel(np.full(3, 1 / 3), theta, np.full((3, 1, 2), 0.5))
        states, _ = sample_hmm(model, 100_000, rng_seed=1)
        counts = np.zeros((3, 3))
        np.add.at(counts, (states[:-1], states[1:]), 1)
        np.testing.assert_allclose(counts / counts.sum(axis=1, keepdims=True), theta, atol=0.01)

    def test_emission_frequencies(self):
        phi = np.array([[[0.6, 0.3, 0.1]], [[0.1, 0.1, 0.8]]])
        model = HmmModel([0.5, 0.5], np.full((2, 2), 0.5), phi)
        states, obs = sample_hmm(model, 100_000, rng_seed=2)
        for b in range(2):
            freq = np.bincount(obs[states == b, 0], minlength=4)[1:] / np.sum(states == b)
            np.testing.assert_allclose(freq, phi[b, 0], atol=0.01)

    def test_bad_length(self):
        with pytest.raises(DataError):
            sample_hmm(HmmModel([1.0], [[1.0]], [[[1.0]]]), 0)


class TestCourseHypotheses:
    def test_untouched_walker(self):
        raw = one_segment("NTW")
        base = load_emission_table()["baseline"]["load"]
        assert abs(raw.channels[:, 3:7].mean() - base) < 0.05 * base
        assert np.ptp(raw.channel("encoder")) == 0

    def test_sitting_is_heaviest(self):
        sw = total_load(one_segment("SW")).mean()
        for b in ("WF", "ST", "TL", "TR", "WB", "RT"):
            assert sw > total_load(one_segment(b)).mean()

    def test_walking_backward_decreases_encoder(self):
        raw = one_segment("WB", noise=0.0)
        assert np.all(np.diff(raw.channel("encoder").astype(float)) <= 0)
        assert raw.channel("encoder")[-1] < raw.channel("encoder")[0]
        assert compute_speed(raw.channel("encoder"))[1:].mean() < 0

    def test_walking_forward_increases_encoder(self):
        assert compute_speed(one_segment("WF").channel("encoder"))[1:].mean() > 0

    @pytest.mark.parametrize("turn, side", [("TL", 1), ("TR", -1)])
    def test_turns_load_the_turn_side(self, turn, side):
        f = build_features(one_segment(turn), "cop")
        assert side * f.values[:, f.feature_names.index("frontal_cop")].mean() > 0.1

    def test_curbs_jolt_vertical_axis(self):
        flat = np.std(one_segment("WF").channel("accel_z"))
        assert np.std(one_segment("GUC").channel("accel_z")) > 2 * flat

    def test_ramps_shift_longitudinal_axis(self):
        rest = one_segment("WF").channel("accel_x").mean()
        assert one_segment("GUR").channel("accel_x").mean() > rest + 300
        assert one_segment("GDR").channel("accel_x").mean() < rest - 300

    def test_rest_is_one_sided(self):
        f = build_features(one_segment("RT"), "cop")
        assert abs(f.values[:, f.feature_names.index("frontal_cop")].mean()) > 0.3


class TestCourse:
    def test_zero_noise_is_piecewise_deterministic(self):
        raw = simulate_course(CourseScript((("ST", 50), ("WF", 50)), 0.0, 4))
        np.testing.assert_array_equal(np.ptp(raw.channels[:50, :7], axis=0), 0)
        np.testing.assert_array_equal(np.diff(raw.channel("encoder")[51:100]), 3)

    def test_same_seed_bit_identical(self):
        s = default_course("exp2", 2, seed=7)
        np.testing.assert_array_equal(simulate_course(s).channels, simulate_course(s).channels)

    def test_labels_follow_segments(self):
        raw = simulate_course(CourseScript((("NTW", 3), ("ST", 2))))
        assert raw.labels == ("NTW",) * 3 + ("ST",) * 2

    def test_clamped_to_16_bits(self):
        raw = simulate_course(CourseScript((("SW", 200),), noise_level=60.0))
        assert raw.channels.min() >= 0 and raw.channels.max() <= 65535

    def test_script_json_round_trip(self):
        s = default_course("exp1", 3, seed=1)
        assert CourseScript.from_json(s.to_json()) == s

    @pytest.mark.parametrize("segments", [(), (("NTW", 0),), (("XX", 5),)])
    def test_bad_scripts(self, segments):
        with pytest.raises(DataError):
            CourseScript(segments)

    def test_exp2_covers_thirteen_behaviours(self):
        raw = simulate_course(default_course("exp2", 1))
        assert len(set(raw.labels)) == 13

    def test_participants_and_runs(self):
        raws = simulate_participants(2, "exp1", runs=2, seed=0)
        assert [r.participant_id for r in raws] == ["p01", "p01", "p02", "p02"]
        assert not np.array_equal(raws[0].channels[:100], raws[1].channels[:100])
