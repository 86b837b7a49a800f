import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zsregret.adversaries import Adversary
from zsregret.environment import NoiseModel, RandomStream
from zsregret.game_core import GameMatrix
from zsregret.harness import (FixedLearner, MatchSpec, SweepSpec, aggregate, horizon_sweep,
                              loglog_slopes, monte_carlo, play_trial, run_match, stream_id,
                              write_aggregate_csv, write_raw_csv)

FIG = GameMatrix.from_unit([[2 / 3, 0.0], [0.0, 1 / 3]])
NOISELESS = NoiseModel("none")


def test_pure_row_against_best_response():
    rec = run_match(FixedLearner([1.0, 0.0]), Adversary("best_response", FIG), FIG, NOISELESS,
                    1000, RandomStream(1, 1))
    assert rec.nash_regret == pytest.approx(2000 / 9, rel=1e-12)


def test_equilibrium_against_nash_has_zero_regret():
    rec = run_match(FixedLearner([1 / 3, 2 / 3]), Adversary("nash", FIG), FIG, NOISELESS,
                    5000, RandomStream(1, 2))
    assert abs(rec.nash_regret) < 1e-9


def test_same_seed_same_record():
    spec = MatchSpec("exp3", "hybrid", FIG, 2000, "fig1")
    a, b = play_trial(spec, 3), play_trial(spec, 3)
    assert a.nash_regret == b.nash_regret and a.realized_total == b.realized_total
    assert play_trial(spec, 4).expected_total != a.expected_total


def test_stream_id_depends_on_every_field():
    base = stream_id("ours", "hybrid", "fig1", 100, 0)
    assert base == stream_id("ours", "hybrid", "fig1", 100, 0)
    for other in (("ucb", "hybrid", "fig1", 100, 0), ("ours", "nash", "fig1", 100, 0),
                  ("ours", "hybrid", "x", 100, 0), ("ours", "hybrid", "fig1", 101, 0),
                  ("ours", "hybrid", "fig1", 100, 1)):
        assert stream_id(*other) != base


def test_single_trial_has_zero_stderr():
    res = monte_carlo(MatchSpec("ucb", "nash", FIG, 100), 1)
    assert res.stderr == 0.0 and res.nash.trials == 1


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40), st.randoms())
def test_aggregate_order_insensitive(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    a, b = aggregate(values), aggregate(shuffled)
    assert a.mean == b.mean and a.stderr == b.stderr


def test_slopes():
    Ts = [10.0 ** k for k in range(1, 7)]
    np.testing.assert_allclose(loglog_slopes(Ts, [3 * math.sqrt(T) for T in Ts]), 0.5, atol=1e-12)
    np.testing.assert_allclose(loglog_slopes(Ts, [7.0] * 6), 0.0, atol=1e-12)
    s = loglog_slopes([1e5, 1e6], [2 * math.log(1e5) ** 2, 2 * math.log(1e6) ** 2])[0]
    assert s == pytest.approx(2 * math.log(6 / 5) / math.log(10), rel=1e-12)
    assert s == pytest.approx(0.158, abs=5e-4)
    assert math.isnan(loglog_slopes([10, 100], [0.0, 1.0])[0])


@pytest.mark.parametrize("learner", ["ours", "ucb", "exp3", "full_info"])
def test_ledger_identity_from_trace(learner):
    spec = MatchSpec(learner, "hybrid", FIG, 3000)
    rec = play_trial(spec, 0, trace=True)
    log = rec.log
    A = FIG.rescaled
    expected = np.einsum("ti,ij,tj->t", log.x, A, log.y)
    np.testing.assert_allclose(log.expected, expected, atol=1e-13)
    assert rec.nash_regret == pytest.approx(rec.horizon * rec.value - math.fsum(expected), abs=1e-9)
    best = max(math.fsum(c) for c in (log.y @ A.T).T)
    assert rec.external_regret == pytest.approx(best - math.fsum(expected), abs=1e-9)
    assert rec.external_regret >= rec.nash_regret - 1e-12 * rec.horizon
    assert rec.min_gap >= -1e-12 * rec.horizon


def test_realized_close_to_expected():
    recs = [play_trial(MatchSpec("exp3", "best_response", FIG, 20000), k) for k in range(8)]
    for r in recs:
        # Bernoulli rewards: variance at most T / 4
        assert abs(r.realized_total - r.expected_total) <= 3 * math.sqrt(r.horizon / 4) * 1.5


@pytest.mark.parametrize("learner", ["ours", "ours_skip", "ucb", "exp3", "fixed"])
@pytest.mark.parametrize("adversary", ["nash", "best_response", "hybrid", "adaptive", "ucb_killer"])
def test_kernel_matches_generic_loop(learner, adversary):
    spec = MatchSpec(learner, adversary, FIG, 1500)
    fast = play_trial(spec, 2)
    slow = play_trial(spec, 2, fast=False)
    assert fast.nash_regret == pytest.approx(slow.nash_regret, abs=1e-9)
    assert fast.external_regret == pytest.approx(slow.external_regret, abs=1e-9)
    assert fast.realized_total == slow.realized_total


def test_sweep_csv_independent_of_thread_count(tmp_path):
    spec = SweepSpec(FIG, [10, 100, 1000], {"ucb": ("ucb", {}), "exp3": ("exp3", {})},
                     {"hybrid": ("hybrid", {}), "br": ("best_response", {})}, trials=4,
                     matrix_id="fig1")
    outs = []
    for threads in (1, 4):
        res = horizon_sweep(spec, threads=threads)
        raw, agg = tmp_path / f"raw{threads}.csv", tmp_path / f"agg{threads}.csv"
        write_raw_csv(res.records(), raw)
        write_aggregate_csv(res, agg)
        outs.append((raw.read_bytes(), agg.read_bytes()))
    assert outs[0] == outs[1]


def test_sweep_rejects_unsorted_horizons():
    spec = SweepSpec(FIG, [100, 10], {"ucb": ("ucb", {})}, {"nash": ("nash", {})}, trials=1)
    with pytest.raises(ValueError):
        horizon_sweep(spec)


def test_error_keeps_partial_ledger():
    class Broken(FixedLearner):
        def next_strategy(self):
            self.calls = getattr(self, "calls", 0) + 1
            if self.calls > 5:
                return np.array([0.7, 0.7])
            return super().next_strategy()

    rec = run_match(Broken([1.0, 0.0]), Adversary("best_response", FIG), FIG, NOISELESS,
                    100, RandomStream(0, 0))
    assert rec.rounds == 5 and not rec.ok
    assert rec.nash_regret == pytest.approx(5 * 2 / 9, rel=1e-12)
