"""Stochastic payoff environment with reproducible per-trial streams.

Every round consumes the stream in a fixed order: one uniform for the row
index, one for the column index, then the noise draws (one per observed
cell, none when the noise model is ``none``). The fast match kernels follow
the same order, which is what makes the two paths agree bit for bit.
"""
from dataclasses import dataclass

import numpy as np

from ._accel import njit
from .errors import IndexOutOfRange

NOISE_KINDS = ("bernoulli", "none")
NOISE_CODES = {"bernoulli": 0, "none": 1}
DEFAULT_SEED = 20240101


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "bernoulli"

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")

    @property
    def code(self) -> int:
        return NOISE_CODES[self.kind]


@dataclass(frozen=True)
class RandomStream:
    """Identifies one independent random stream: (base_seed, stream_id)."""

    base_seed: int = DEFAULT_SEED
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.base_seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.PCG64(seq))

    def seed_value(self) -> int:
        """A single integer identifying the stream, for CSV output."""
        seq = np.random.SeedSequence(int(self.base_seed), spawn_key=(int(self.stream_id),))
        return int(seq.generate_state(1, dtype=np.uint32)[0])


@njit
def sample_index(p, u):
    """Inverse-CDF draw from probability vector ``p`` given uniform ``u``."""
    acc = 0.0
    last = 0
    for i in range(p.shape[0]):
        if p[i] > 0.0:
            last = i
            acc += p[i]
            if u < acc:
                return i
    return last


@njit
def noisy_entry(mean, noise_code, rng):
    if noise_code == 1:
        return mean
    return 1.0 if rng.random() < mean else 0.0


@njit
def noisy_matrix(P, noise_code, rng, out):
    n, m = P.shape
    for i in range(n):
        for j in range(m):
            out[i, j] = noisy_entry(P[i, j], noise_code, rng)


class Environment:
    """Serves observations of a game under a noise model from one stream."""

    def __init__(self, game, noise=None, stream=None):
        self.game = game
        self.noise = noise if noise is not None else NoiseModel()
        self.stream = stream if stream is not None else RandomStream()
        self.rng = self.stream.generator()
        self._means = np.ascontiguousarray(game.rescaled, dtype=float)

    def sample_row(self, x) -> int:
        return int(sample_index(np.asarray(x, dtype=float), self.rng.random()))

    def sample_column(self, y) -> int:
        return int(sample_index(np.asarray(y, dtype=float), self.rng.random()))

    def sample_actions(self, x, y):
        i = self.sample_row(x)
        j = self.sample_column(y)
        return i, j

    def draw_entry(self, i: int, j: int) -> float:
        n, m = self._means.shape
        if not (0 <= i < n and 0 <= j < m):
            raise IndexOutOfRange(f"cell ({i}, {j}) outside a {n}x{m} game")
        return float(noisy_entry(self._means[i, j], self.noise.code, self.rng))

    def draw_full(self) -> np.ndarray:
        out = np.empty(self._means.shape)
        noisy_matrix(self._means, self.noise.code, self.rng, out)
        return out


def draw_full(game, noise, stream_or_env) -> np.ndarray:
    env = stream_or_env if isinstance(stream_or_env, Environment) else Environment(game, noise, stream_or_env)
    return env.draw_full()


def draw_entry(game, noise, stream_or_env, i, j) -> float:
    env = stream_or_env if isinstance(stream_or_env, Environment) else Environment(game, noise, stream_or_env)
    return env.draw_entry(i, j)
