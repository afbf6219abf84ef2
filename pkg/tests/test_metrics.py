import pytest
from hypothesis import given, strategies as st

from dlms.errors import ConfigError
from dlms.metrics import (
    RunRecord,
    convergence_iteration,
    crossing_iteration,
    default_band,
    msd_series,
    steady_state_variance,
    weighted_sum_variance,
)
from dlms.prng import RandomStream


def _record(trajs, w_opt=(2.0,)):
    agents = sorted(trajs)
    return RunRecord(
        seed=0, w_opt=list(w_opt), agents=agents,
        ws={a: [[v] for v in t] for a, t in trajs.items()},
        psis={a: [[v] for v in t] for a, t in trajs.items()},
        es={a: [0.0] * len(t) for a, t in trajs.items()},
    )


class TestMsdSeries:
    def test_zero_deviation(self):
        rec = _record({"a": [2.0, 2.0, 2.0]})
        assert msd_series([rec], "a") == [0.0, 0.0, 0.0]

    def test_squared_distance(self):
        rec = _record({"a": [0.5]})
        assert msd_series([rec], "a") == [2.25]

    def test_ensemble_mean(self):
        r1 = _record({"a": [0.0]}, w_opt=(1.0,))
        r2 = _record({"a": [1.0]}, w_opt=(1.0,))
        assert msd_series([r1, r2], "a") == [0.5]

    def test_reorder_invariant(self):
        r1 = _record({"a": [0.1, 0.4]})
        r2 = _record({"a": [0.9, 1.3]})
        assert msd_series([r1, r2], "a") == msd_series([r2, r1], "a")

    def test_empty_rejected(self):
        with pytest.raises(ConfigError):
            msd_series([], "a")


class TestSteadyStateVariance:
    def test_constant_trajectory(self):
        rec = _record({"a": [1.0] * 20})
        assert steady_state_variance(rec, "a") == 0.0

    def test_alternating_window(self):
        # window of 4 over 0,1,0,1: sample variance 1/3
        rec = _record({"a": [0.0, 1.0, 0.0, 1.0]})
        assert steady_state_variance(rec, "a", 1.0) == pytest.approx(1 / 3)

    def test_window_too_short(self):
        rec = _record({"a": [1.0, 2.0, 3.0, 4.0]})
        with pytest.raises(ConfigError):
            steady_state_variance(rec, "a", 0.2)


class TestConvergenceIteration:
    def test_immediate(self):
        rec = _record({"a": [2.0, 2.01, 1.99]})
        assert convergence_iteration(rec, "a", 0.1) == 1

    def test_never(self):
        rec = _record({"a": [0.0, 0.5, 1.0]})
        assert convergence_iteration(rec, "a", 0.1) is None

    def test_reentry(self):
        # inside at 10, out at 12, inside for good at 30
        traj = [0.0] * 9 + [2.0, 2.0, 0.0] + [0.0] * 17 + [2.0] * 11
        assert len(traj) == 40
        rec = _record({"a": traj})
        assert convergence_iteration(rec, "a", 0.1) == 30

    def test_band_must_be_positive(self):
        rec = _record({"a": [2.0]})
        with pytest.raises(ConfigError):
            convergence_iteration(rec, "a", 0.0)


class TestCrossingIteration:
    def test_identical_trajectories(self):
        rec = _record({"p": [0.0, 1.0], "q": [0.0, 1.0]})
        assert crossing_iteration(rec, "p", "q") is None

    def test_order_preserved(self):
        rec = _record({"p": [1.9, 1.95], "q": [0.0, 0.5]})
        assert crossing_iteration(rec, "p", "q") is None

    def test_crossing_at_five(self):
        p = [0.0, 0.4, 0.8, 1.2, 1.8, 1.9]
        q = [1.0, 1.2, 1.4, 1.5, 1.6, 1.7]
        rec = _record({"p": p, "q": q})
        assert crossing_iteration(rec, "p", "q") == 5

    def test_vector_weights_rejected(self):
        rec = RunRecord(seed=0, w_opt=[1.0, 1.0], agents=["p", "q"],
                        ws={"p": [[0.0, 0.0]], "q": [[1.0, 1.0]]},
                        psis={}, es={})
        with pytest.raises(ConfigError):
            crossing_iteration(rec, "p", "q")


class TestWeightedSumVariance:
    def test_table_values(self):
        # balanced weights on variances 0.01^2 and 0.2^2
        assert weighted_sum_variance(0.5, 0.5, 0.01**2, 0.2**2) == \
            pytest.approx(0.010025)

    def test_degenerate_weights(self):
        assert weighted_sum_variance(1.0, 0.0, 0.7, 0.3) == 0.7

    def test_averaging_halves_equal_variance(self):
        v = 0.4
        assert weighted_sum_variance(0.5, 0.5, v, v) == pytest.approx(v / 2)

    @given(
        st.floats(0, 1),
        st.floats(0, 10), st.floats(0, 10),
    )
    def test_dominance(self, s, var_x, var_y):
        """With independent inputs and convex weights the combined variance
        never exceeds the larger input variance."""
        z = weighted_sum_variance(s, 1.0 - s, var_x, var_y)
        assert z <= max(var_x, var_y) + 1e-12

    def test_empirical_match(self):
        s1, s2 = RandomStream(21), RandomStream(22)
        n = 100_000
        zs = [0.5 * s1.next_gaussian(0, 0.01) + 0.5 * s2.next_gaussian(0, 0.2)
              for _ in range(n)]
        mean = sum(zs) / n
        var = sum((z - mean) ** 2 for z in zs) / (n - 1)
        assert abs(var - 0.010025) / 0.010025 < 0.05


def test_default_band():
    assert default_band([(0.0,), (1.0,)], (2.0,)) == pytest.approx(0.15)
    with pytest.raises(ConfigError):
        default_band([(2.0,)], (2.0,))
