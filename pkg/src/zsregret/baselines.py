"""Reference learners: optimistic UCB on the matrix and EXP3 over rows."""
from math import log, sqrt

import numpy as np

from ._accel import njit
from .errors import RewardOutOfRange
from .game_core import first_equilibrium, nash_2x2


# ---------------------------------------------------------------------------
# UCB

@njit
def ucb_radius(count, log_term):
    """sqrt(2 * log_term / max(1, count))."""
    c = count if count > 1 else 1
    return np.sqrt(2.0 * log_term / c)


@njit
def optimistic_matrix(counts, sums, log_term, out):
    """Empirical mean plus radius; unsampled cells get mean 1 and the count-1 radius."""
    n, m = counts.shape
    for i in range(n):
        for j in range(m):
            mean = sums[i, j] / counts[i, j] if counts[i, j] > 0 else 1.0
            out[i, j] = mean + ucb_radius(counts[i, j], log_term)


@njit
def maximin_2x2(a, b, c, d):
    """Probability on row 0 of a maximin strategy of [[a, b], [c, d]]."""
    x1, _, _, kind = nash_2x2(a, b, c, d)
    if kind >= 0:
        return x1
    # weakly dominated or tied rows: compare the pure rows and the crossing point
    best_x = 1.0
    best_v = min(a, b)
    v0 = min(c, d)
    if v0 > best_v:
        best_x, best_v = 0.0, v0
    D = a - b - c + d
    if D != 0.0:
        xc = (d - c) / D
        if 0.0 < xc < 1.0:
            vc = min(xc * a + (1.0 - xc) * c, xc * b + (1.0 - xc) * d)
            if vc > best_v:
                best_x = xc
    return best_x


@njit
def _any_unsampled(counts):
    n, m = counts.shape
    for i in range(n):
        for j in range(m):
            if counts[i, j] == 0:
                return True
    return False


@njit
def ucb_strategy(counts, sums, t, log_term, x_out):
    """Strategy for round ``t`` (0-based).

    While some cell is unsampled during the first n*m rounds the rows are
    played in round robin; afterwards the maximin of the optimistic matrix.
    """
    n, m = counts.shape
    if t < n * m and _any_unsampled(counts):
        x_out[:] = 0.0
        x_out[t % n] = 1.0
        return
    At = np.empty((n, m))
    optimistic_matrix(counts, sums, log_term, At)
    if n == 2 and m == 2:
        x1 = maximin_2x2(At[0, 0], At[0, 1], At[1, 0], At[1, 1])
        x_out[0] = x1
        x_out[1] = 1.0 - x1
        return
    y = np.empty(m)
    first_equilibrium(At, x_out, y)


def ucb_log_term(horizon: int, n: int, m: int) -> float:
    return log(2.0 * float(horizon) ** 2 * n * m)


class UcbLearner:
    """Plays the maximin strategy of the entrywise optimistic empirical matrix."""

    feedback = "bandit"
    name = "ucb"

    def __init__(self, horizon: int, n: int = 2, m: int = 2):
        self.horizon = int(horizon)
        self.counts = np.zeros((n, m), dtype=np.int64)
        self.sums = np.zeros((n, m))
        self.log_term = ucb_log_term(horizon, n, m)
        self.t = 0
        self.events = []

    @property
    def n(self) -> int:
        return self.counts.shape[0]

    def radii(self) -> np.ndarray:
        c = np.maximum(self.counts, 1)
        return np.sqrt(2.0 * self.log_term / c)

    def optimistic(self) -> np.ndarray:
        out = np.empty(self.counts.shape)
        optimistic_matrix(self.counts, self.sums, self.log_term, out)
        return out

    def next_strategy(self) -> np.ndarray:
        x = np.empty(self.n)
        ucb_strategy(self.counts, self.sums, self.t, self.log_term, x)
        return x

    def observe(self, i: int, j: int, reward: float) -> None:
        self.counts[i, j] += 1
        self.sums[i, j] += reward
        self.t += 1


# ---------------------------------------------------------------------------
# EXP3

@njit
def exp3_distribution(scores, eta, p_out):
    n = scores.shape[0]
    top = scores[0]
    for i in range(1, n):
        if scores[i] > top:
            top = scores[i]
    total = 0.0
    for i in range(n):
        p_out[i] = np.exp(eta * (scores[i] - top))
        total += p_out[i]
    for i in range(n):
        p_out[i] /= total


@njit
def exp3_update(scores, p, i, reward):
    scores[i] += reward / p[i]


def exp3_rate(horizon: int, n: int) -> float:
    return sqrt(log(n) / (n * float(horizon)))


class Exp3Learner:
    """Exponential weights on importance-weighted reward estimates."""

    feedback = "bandit"
    name = "exp3"

    def __init__(self, horizon: int, n: int = 2):
        self.horizon = int(horizon)
        self.eta = exp3_rate(horizon, n)
        self.scores = np.zeros(n)
        self.p = np.full(n, 1.0 / n)
        self.t = 0
        self.events = []

    def next_strategy(self) -> np.ndarray:
        exp3_distribution(self.scores, self.eta, self.p)
        return self.p.copy()

    def estimate(self, i: int, reward: float) -> np.ndarray:
        """Importance-weighted reward vector for one observation."""
        est = np.zeros_like(self.scores)
        est[i] = reward / self.p[i]
        return est

    def observe(self, i: int, j: int, reward: float) -> None:
        if not (0.0 <= reward <= 1.0):
            raise RewardOutOfRange(f"reward {reward} outside [0, 1]")
        exp3_update(self.scores, self.p, int(i), float(reward))
        self.t += 1


# ---------------------------------------------------------------------------

class FixedLearner:
    """Plays the same mixed strategy every round and ignores feedback."""

    feedback = "bandit"
    name = "fixed"

    def __init__(self, x):
        self.x = np.asarray(x, dtype=float).copy()
        self.events = []

    def next_strategy(self) -> np.ndarray:
        return self.x.copy()

    def observe(self, i: int, j: int, reward) -> None:
        pass
