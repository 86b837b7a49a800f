import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zsregret.adversaries import (Adversary, external_regret_pair, generate_hard_instance,
                                  indistinguishable_pair, killer_horizon, myopic_bandit_instance,
                                  rock_paper_scissors, ucb_killer_instance)
from zsregret.errors import InvalidFamilyParams
from zsregret.game_core import GameMatrix, solve

FIG = GameMatrix.from_unit([[2 / 3, 0.0], [0.0, 1 / 3]])


def test_hybrid_starts_at_equilibrium():
    y = Adversary("hybrid", FIG).next_column_strategy(1, 100, np.array([0.9, 0.1]))
    np.testing.assert_allclose(y, [1 / 3, 2 / 3], atol=1e-12)


def test_hybrid_switches_to_best_response():
    adv = Adversary("hybrid", FIG)
    np.testing.assert_array_equal(adv.next_column_strategy(51, 100, np.array([1.0, 0.0])), [0.0, 1.0])
    np.testing.assert_allclose(adv.next_column_strategy(50, 100, np.array([1.0, 0.0])), [1 / 3, 2 / 3])


def test_ucb_killer_low_row():
    adv = Adversary("ucb_killer", FIG)
    np.testing.assert_array_equal(adv.next_column_strategy(1, 1000, np.array([0.30, 0.70])), [1.0, 0.0])
    np.testing.assert_array_equal(adv.next_column_strategy(1, 1000, np.array([0.40, 0.60])), [0.0, 1.0])
    np.testing.assert_allclose(adv.next_column_strategy(1, 1000, np.array([0.335, 0.665])), [1 / 3, 2 / 3])
    # after the first stage it best-responds
    t = int(killer_horizon(1000)) + 1
    np.testing.assert_array_equal(adv.next_column_strategy(t, 1000, np.array([0.335, 0.665])), [0.0, 1.0])


def test_best_response_tie_lowest_index():
    y = Adversary("best_response", FIG).next_column_strategy(5, 10, np.array([1 / 3, 2 / 3]))
    np.testing.assert_array_equal(y, [1.0, 0.0])


def test_adaptive_punishes_deviation():
    adv = Adversary("adaptive", FIG, threshold=0.05)
    np.testing.assert_allclose(adv.next_column_strategy(1, 100, np.array([0.36, 0.64])), [1 / 3, 2 / 3])
    np.testing.assert_array_equal(adv.next_column_strategy(1, 100, np.array([0.40, 0.60])), [0.0, 1.0])
    np.testing.assert_array_equal(adv.next_column_strategy(60, 100, np.array([0.34, 0.66])), [0.0, 1.0])


def test_fixed_needs_y():
    with pytest.raises(ValueError):
        Adversary("fixed", FIG)
    with pytest.raises(ValueError):
        Adversary("sneaky", FIG)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(["nash", "best_response", "hybrid", "adaptive", "ucb_killer"]),
       st.floats(0.0, 1.0), st.integers(1, 100))
def test_emitted_strategies_valid_and_best_response_optimal(kind, p, t):
    x = np.array([p, 1.0 - p])
    y = Adversary(kind, FIG).next_column_strategy(t, 100, x)
    assert y.min() >= 0.0 and abs(y.sum() - 1.0) < 1e-12
    if kind == "best_response":
        pay = x @ FIG.rescaled
        assert pay @ y <= pay.min()


def test_indistinguishable_pair_shift():
    inst = indistinguishable_pair(0.5, 0.2, 0.3, 0.4, 10 ** 4)
    assert inst.params["column1_shift"] == pytest.approx(math.sqrt(0.2) * 0.2 / 3200, rel=1e-12)
    assert inst.params["column1_shift"] == pytest.approx(2.795e-5, abs=5e-9)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.3, 0.5), st.floats(0.01, 0.14), st.floats(0.15, 0.29), st.floats(0.3, 0.5),
       st.integers(10 ** 3, 10 ** 8))
def test_indistinguishable_pair_equal_values(a, b, c, d, T):
    inst = indistinguishable_pair(a, b, c, d, T)
    v1, v2 = (solve(g).value for g in inst.games)
    D = a - b - c + d
    assert v1 == pytest.approx(v2, abs=1e-12)
    assert v1 == pytest.approx((a * d - b * c) / D, abs=1e-12)


def test_indistinguishable_pair_rejects():
    with pytest.raises(InvalidFamilyParams):
        indistinguishable_pair(0.1, 0.2, 0.3, 0.4, 100)
    with pytest.raises(InvalidFamilyParams):
        indistinguishable_pair(0.9, 0.2, 0.3, 0.8, 100)


def test_external_regret_pair_valid():
    inst = external_regret_pair(np.array([[2 / 3, 0.0], [0.0, 1 / 3]]), 10 ** 4)
    for y in inst.strategies:
        assert y.min() >= 0.0 and abs(y.sum() - 1.0) < 1e-12
    with pytest.raises(InvalidFamilyParams):
        external_regret_pair(np.array([[0.6, 0.4], [0.2, 0.1]]), 100)


def test_rock_paper_scissors_strategies():
    inst = rock_paper_scissors(10 ** 4)
    np.testing.assert_allclose(inst.strategies[0], [1 / 3 + 1 / 1600, 2 / 3 - 1 / 1600, 0.0], atol=1e-15)
    np.testing.assert_allclose(inst.strategies[1], [1 / 3 - 1 / 1600, 2 / 3 + 1 / 1600, 0.0], atol=1e-15)


def test_myopic_limit():
    inst = myopic_bandit_instance(10 ** 12)
    y = inst.strategies[0]
    np.testing.assert_allclose(y, [0.5, 0.5], atol=1e-7)
    np.testing.assert_allclose(inst.games[0].rescaled @ y, [0.5, 0.5], atol=1e-7)


def test_generate_dispatch():
    assert generate_hard_instance("ucb_killer").adversary == "ucb_killer"
    assert ucb_killer_instance().games[0] == FIG
    with pytest.raises(InvalidFamilyParams):
        generate_hard_instance("nope")
    with pytest.raises(InvalidFamilyParams):
        generate_hard_instance("rock_paper_scissors", bogus=1)
