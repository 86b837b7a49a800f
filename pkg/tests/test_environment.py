import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zsregret.environment import Environment, NoiseModel, RandomStream, draw_entry, draw_full
from zsregret.errors import IndexOutOfRange
from zsregret.game_core import GameMatrix

FIG = GameMatrix([[2 / 3, 0.0], [0.0, 1 / 3]])


def test_noiseless_full_draw_is_rescaled_matrix():
    obs = draw_full(FIG, NoiseModel("none"), RandomStream(1, 2))
    assert np.array_equal(obs, FIG.rescaled)


def test_noiseless_entry():
    assert draw_entry(FIG, NoiseModel("none"), RandomStream(), 0, 0) == pytest.approx(5 / 6, abs=1e-15)


def test_bernoulli_degenerate_entry():
    g = GameMatrix.from_unit([[1.0, 0.0], [0.0, 1.0]])
    env = Environment(g, NoiseModel("bernoulli"), RandomStream(3, 4))
    assert all(env.draw_entry(0, 0) == 1.0 for _ in range(1000))
    assert all(env.draw_entry(0, 1) == 0.0 for _ in range(1000))


def test_bernoulli_half_mean():
    g = GameMatrix.from_unit([[0.5, 0.5], [0.5, 0.5]])
    env = Environment(g, NoiseModel("bernoulli"), RandomStream(5, 6))
    draws = np.array([env.draw_entry(1, 1) for _ in range(100_000)])
    assert set(np.unique(draws)) <= {0.0, 1.0}
    assert 0.494 <= draws.mean() <= 0.506


def test_point_mass_row():
    env = Environment(FIG, stream=RandomStream(7, 0))
    assert all(env.sample_row([1.0, 0.0]) == 0 for _ in range(1000))


def test_uniform_row_frequency():
    env = Environment(FIG, stream=RandomStream(8, 0))
    rows = np.array([env.sample_row([0.5, 0.5]) for _ in range(100_000)])
    assert 0.494 <= (rows == 0).mean() <= 0.506


def test_out_of_range_cell():
    env = Environment(FIG)
    with pytest.raises(IndexOutOfRange):
        env.draw_entry(2, 0)


def test_unknown_noise():
    with pytest.raises(ValueError):
        NoiseModel("gaussian")


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 2 ** 32 - 1))
def test_streams_reproduce_bit_for_bit(seed, sid):
    a = RandomStream(seed, sid).generator().random(16)
    b = RandomStream(seed, sid).generator().random(16)
    assert np.array_equal(a, b)


def test_distinct_streams_uncorrelated():
    a = RandomStream(11, 0).generator().random(50_000)
    b = RandomStream(11, 1).generator().random(50_000)
    assert not np.array_equal(a, b)
    # correlation of independent uniforms has sd 1/sqrt(n)
    assert abs(np.corrcoef(a, b)[0, 1]) < 4 / np.sqrt(50_000)


def test_bernoulli_means_within_radius():
    """Cell means land inside sqrt(2 ln(T^2) / n) on at least 99% of cells."""
    g = GameMatrix.from_unit([[0.2, 0.7, 0.4], [0.9, 0.1, 0.55]])
    T = 2000
    radius = np.sqrt(2 * np.log(T ** 2) / T)
    inside = total = 0
    for trial in range(20):
        env = Environment(g, NoiseModel("bernoulli"), RandomStream(12, trial))
        mean = np.mean([env.draw_full() for _ in range(T)], axis=0)
        inside += int((np.abs(mean - g.rescaled) <= radius).sum())
        total += mean.size
    assert inside / total >= 0.99
