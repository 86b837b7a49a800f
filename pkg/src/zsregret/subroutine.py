"""Box-constrained drift subroutine.

Plays ``x' + (delta, -sum(delta))`` and moves each ``delta[i]`` by
``eta * (A_hat[i, j_t] - A_hat[n-1, j_t])``, clipped to ``[-r, r]`` with
``eta = 1 / (D1 * T1)`` and ``r = 1 / (D1 * sqrt(T1))``. In full mode it
runs for exactly ``T2`` rounds; in bandit mode until every cell of the
frozen matrix has been observed ``T2`` times during the run.
"""
from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from ._accel import njit
from .errors import InfeasibleAnchor, ModeMismatch

FULL = 0
BANDIT = 1
_MODES = {"full": FULL, "bandit": BANDIT}
FEASIBILITY_TOL = 1e-12


@njit
def sub_strategy(x_prime, delta, out):
    n = x_prime.shape[0]
    total = 0.0
    for i in range(n - 1):
        out[i] = x_prime[i] + delta[i]
        total += delta[i]
    out[n - 1] = x_prime[n - 1] - total


@njit
def sub_drift(delta, A_hat, j, eta, r):
    n = A_hat.shape[0]
    for i in range(n - 1):
        v = delta[i] + eta * (A_hat[i, j] - A_hat[n - 1, j])
        if v > r:
            v = r
        elif v < -r:
            v = -r
        delta[i] = v


@njit
def min_count(counts):
    n, m = counts.shape
    best = counts[0, 0]
    for i in range(n):
        for j in range(m):
            if counts[i, j] < best:
                best = counts[i, j]
    return best


def step_size(D1: float, T1: float) -> float:
    return 1.0 / (D1 * T1)


def box_radius(D1: float, T1: float) -> float:
    return 1.0 / (D1 * sqrt(T1))


def anchor_margin(x_prime) -> float:
    x = np.asarray(x_prime, dtype=float)
    return float(np.minimum(x, 1.0 - x).min())


def safeguard_anchor(x_prime, r):
    """Shrink the box and pull the anchor toward uniform until it is feasible.

    Used by the outer learners when their estimates violate the feasibility
    condition (early rounds, or the rare failure of the confidence event).
    Returns the anchor and radius unchanged when they are already feasible.
    """
    x = np.asarray(x_prime, dtype=float)
    n = x.shape[0]
    if anchor_margin(x) >= (n - 1) * r - FEASIBILITY_TOL:
        return x.copy(), float(r)
    r = min(float(r), 1.0 / (n * (n - 1)))
    need = (n - 1) * r
    lo = x.min()
    if lo < need:
        lam = (need - lo) / (1.0 / n - lo)
        x = (1.0 - lam) * x + lam / n
    return x, r


@dataclass
class SubroutineConfig:
    x_prime: np.ndarray
    D1: float
    T1: float
    T2: int
    A_hat: np.ndarray
    mode: str = "full"

    def __post_init__(self):
        self.x_prime = np.array(self.x_prime, dtype=float)
        self.A_hat = np.array(self.A_hat, dtype=float)
        self.A_hat.setflags(write=False)
        if self.mode not in _MODES:
            raise ValueError(f"mode must be 'full' or 'bandit', got {self.mode!r}")
        if not (self.D1 > 0 and self.T1 > 0):
            raise ValueError("D1 and T1 must be positive")
        if int(self.T2) < 1:
            raise ValueError("T2 must be at least 1")
        self.T2 = int(self.T2)
        if self.A_hat.shape[0] != self.x_prime.shape[0]:
            raise ValueError("A_hat rows must match the anchor dimension")

    @property
    def eta(self) -> float:
        return step_size(self.D1, self.T1)

    @property
    def radius(self) -> float:
        return box_radius(self.D1, self.T1)

    @property
    def n(self) -> int:
        return self.x_prime.shape[0]

    def feasible(self) -> bool:
        return anchor_margin(self.x_prime) >= (self.n - 1) * self.radius - FEASIBILITY_TOL


@dataclass
class SubroutineState:
    config: SubroutineConfig
    delta: np.ndarray
    counts: np.ndarray
    t: int = 0
    eta: float = field(init=False)
    radius: float = field(init=False)

    def __post_init__(self):
        self.eta = self.config.eta
        self.radius = self.config.radius

    @property
    def finished(self) -> bool:
        if _MODES[self.config.mode] == FULL:
            return self.t >= self.config.T2
        return int(min_count(self.counts)) >= self.config.T2


def init(config: SubroutineConfig) -> SubroutineState:
    if not config.feasible():
        raise InfeasibleAnchor(
            f"anchor margin {anchor_margin(config.x_prime):.6g} is below "
            f"(n-1)*r = {(config.n - 1) * config.radius:.6g}"
        )
    r = config.radius
    delta = np.full(config.n - 1, -r)
    counts = np.zeros(config.A_hat.shape, dtype=np.int64)
    return SubroutineState(config=config, delta=delta, counts=counts)


def next_strategy(state: SubroutineState) -> np.ndarray:
    out = np.empty(state.config.n)
    sub_strategy(state.config.x_prime, state.delta, out)
    return out


def observe(state: SubroutineState, j_t: int, feedback):
    """Advance one round. ``feedback`` is the full matrix draw in full mode
    and the played cell ``(i_t, reward)`` in bandit mode."""
    mode = _MODES[state.config.mode]
    if mode == FULL:
        fb = np.asarray(feedback, dtype=float) if not isinstance(feedback, tuple) else None
        if fb is None or fb.shape != state.config.A_hat.shape:
            raise ModeMismatch("full mode expects the whole observed matrix")
        state.counts += 1
    else:
        if not (isinstance(feedback, tuple) and len(feedback) == 2):
            raise ModeMismatch("bandit mode expects the played cell (i_t, reward)")
        state.counts[int(feedback[0]), int(j_t)] += 1
    sub_drift(state.delta, state.config.A_hat, int(j_t), state.eta, state.radius)
    state.t += 1
    return state, state.finished


class Subroutine:
    """Object wrapper around init/next_strategy/observe."""

    def __init__(self, config: SubroutineConfig):
        self.state = init(config)

    @property
    def config(self) -> SubroutineConfig:
        return self.state.config

    def next_strategy(self) -> np.ndarray:
        return next_strategy(self.state)

    def observe(self, j_t, feedback) -> bool:
        _, done = observe(self.state, j_t, feedback)
        return done
