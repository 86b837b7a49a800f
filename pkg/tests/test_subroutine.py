import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zsregret.errors import InfeasibleAnchor, ModeMismatch
from zsregret.game_core import solve_by_enumeration
from zsregret.subroutine import (Subroutine, SubroutineConfig, anchor_margin, init, next_strategy,
                                 observe, safeguard_anchor)
from zsregret.verify import subroutine_bound, subroutine_games

DIAG = np.array([[2 / 3, 0.0], [0.0, 1 / 3]])


def test_init_constants():
    st_ = init(SubroutineConfig([0.5, 0.5], 0.5, 100, 10, DIAG))
    assert st_.eta == pytest.approx(0.02, abs=1e-15)
    assert st_.radius == pytest.approx(0.2, abs=1e-15)
    np.testing.assert_allclose(st_.delta, [-0.2])


def test_infeasible_anchor():
    # r = 1 / (D1 sqrt(T1)) = 0.2 with D1 = 0.5, T1 = 100
    with pytest.raises(InfeasibleAnchor):
        init(SubroutineConfig([0.1, 0.9], 0.5, 100, 10, DIAG))


def test_feasible_uniform_three():
    # r = 0.1: margin 1/3 >= 2 * 0.1
    cfg = SubroutineConfig([1 / 3] * 3, 10.0, 1.0, 5, np.eye(3))
    assert cfg.radius == pytest.approx(0.1)
    assert cfg.feasible()


def test_next_strategy_examples():
    s = init(SubroutineConfig([0.5, 0.5], 0.5, 100, 10, DIAG))
    np.testing.assert_allclose(next_strategy(s), [0.3, 0.7])
    s = init(SubroutineConfig([1 / 3] * 3, 10.0, 1.0, 5, np.eye(3)))
    s.delta[:] = [0.1, -0.1]
    np.testing.assert_allclose(next_strategy(s), [1 / 3 + 0.1, 1 / 3 - 0.1, 1 / 3])
    s.delta[:] = 0.0
    np.testing.assert_allclose(next_strategy(s), [1 / 3] * 3)


def test_one_euler_step():
    A = np.array([[0.75, 0.2], [0.25, 0.9]])  # column 0 gap 0.5
    s = init(SubroutineConfig([0.5, 0.5], 0.5, 100, 10, A))
    s.delta[:] = 0.0
    observe(s, 0, A)
    assert s.delta[0] == pytest.approx(0.01, abs=1e-15)


def test_clamp_at_boundary():
    A = np.array([[0.75, 0.2], [0.25, 0.9]])
    s = init(SubroutineConfig([0.5, 0.5], 0.5, 100, 10, A))
    s.delta[:] = s.radius
    observe(s, 0, A)
    assert s.delta[0] == s.radius


def test_bandit_stopping():
    A = np.array([[0.75, 0.2], [0.25, 0.9]])
    s = init(SubroutineConfig([0.5, 0.5], 0.5, 100, 3, A, mode="bandit"))
    s.counts[:] = 2
    s.counts[0, 0] = 3
    s.counts[1, 1] = 3
    s.counts[0, 1] = 3
    _, done = observe(s, 0, (1, 1.0))
    assert done


def test_mode_mismatch():
    sub = Subroutine(SubroutineConfig([0.5, 0.5], 0.5, 100, 3, DIAG))
    with pytest.raises(ModeMismatch):
        sub.observe(0, (0, 1.0))
    sub = Subroutine(SubroutineConfig([0.5, 0.5], 0.5, 100, 3, DIAG, mode="bandit"))
    with pytest.raises(ModeMismatch):
        sub.observe(0, DIAG)


def test_safeguard_makes_feasible():
    x, r = safeguard_anchor([0.02, 0.98], 0.3)
    assert anchor_margin(x) >= r - 1e-12
    x, r = safeguard_anchor([0.01, 0.01, 0.98], 0.4)
    assert anchor_margin(x) >= 2 * r - 1e-12


games = subroutine_games()


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(sorted(games)), st.sampled_from([1.0, 4.0, 25.0]), st.floats(1.0, 3.0),
       st.lists(st.integers(0, 3), min_size=1, max_size=60))
def test_regret_bound_any_sequence(name, T1, slack, cols):
    """Regret against x* stays within 6n/D1 + 7n T2/(D1 T1) for every prefix."""
    P = games[name]
    sol = solve_by_enumeration(P)
    n, m = P.shape
    D1 = slack * (n - 1) / (anchor_margin(sol.x_star) * math.sqrt(T1))
    sub = Subroutine(SubroutineConfig(sol.x_star, D1, T1, len(cols), P))
    total = 0.0
    for t, j in enumerate(cols, start=1):
        j = j % m
        x = sub.next_strategy()
        assert x.min() >= -1e-12 and abs(x.sum() - 1.0) < 1e-12
        total += float(x @ P[:, j])
        assert t * sol.value - total <= subroutine_bound(n, D1, T1, t)
        sub.observe(j, P)
        assert np.abs(sub.state.delta).max() <= sub.state.radius


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=1, max_size=40))
def test_drift_telescopes_without_clamp(cols):
    P = games["rps3"]
    # a box so wide that the clamp never fires over 40 rounds
    cfg = SubroutineConfig([1 / 3] * 3, 1.0, 1.0e4, len(cols), P)
    cfg_r = cfg.radius
    sub = Subroutine(cfg)
    sub.state.delta[:] = 0.0  # start at the centre, away from the clamp
    start = sub.state.delta.copy()
    for j in cols:
        sub.observe(j, P)
    expect = start + cfg.eta * sum(P[:-1, j] - P[-1, j] for j in cols)
    assert np.abs(expect).max() < cfg_r
    np.testing.assert_allclose(sub.state.delta, expect, rtol=0, atol=1e-15)
