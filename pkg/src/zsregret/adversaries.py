"""Column players and hard-instance generators.

Adversaries see the row strategy ``x_t`` about to be played and the game.
Rounds ``t`` are 1-based. Every kind is also reachable through the compiled
``adversary_column`` so the fast match loop can use it.
"""
from dataclasses import dataclass, field
from math import log, sqrt
from typing import Optional, Tuple

import numpy as np

from ._accel import njit
from .errors import InvalidFamilyParams
from .game_core import TIE_TOL, GameMatrix, best_response_index, make_strategy, solve

FIXED = 0
NASH = 1
BEST_RESPONSE = 2
HYBRID = 3
ADAPTIVE = 4
UCB_KILLER = 5

KIND_CODES = {
    "fixed": FIXED,
    "nash": NASH,
    "best_response": BEST_RESPONSE,
    "hybrid": HYBRID,
    "adaptive": ADAPTIVE,
    "ucb_killer": UCB_KILLER,
}

DEFAULT_SWITCH_FRACTION = 0.5
DEFAULT_THRESHOLD = 0.05
KILLER_LOW = 0.33
KILLER_HIGH = 0.34


def killer_horizon(T: int) -> float:
    """Length of the first stage of the UCB-killing adversary: T/2 + sqrt(T ln T)."""
    return T / 2.0 + sqrt(T * log(T)) if T > 1 else T / 2.0


@njit
def _pure(y_out, j):
    y_out[:] = 0.0
    y_out[j] = 1.0


@njit
def adversary_column(code, t, T, P, x, x_star, y_star, y_fixed, fraction, threshold, y_out):
    """Fill ``y_out`` with the column strategy for round ``t`` (1-based)."""
    if code == FIXED:
        y_out[:] = y_fixed
    elif code == NASH:
        y_out[:] = y_star
    elif code == BEST_RESPONSE:
        _pure(y_out, best_response_index(P, x, TIE_TOL))
    elif code == HYBRID:
        if t <= fraction * T:
            y_out[:] = y_star
        else:
            _pure(y_out, best_response_index(P, x, TIE_TOL))
    elif code == ADAPTIVE:
        if t <= 0.5 * T:
            dev = 0.0
            for i in range(x.shape[0]):
                dev = max(dev, abs(x[i] - x_star[i]))
            if dev > threshold:
                _pure(y_out, best_response_index(P, x, TIE_TOL))
            else:
                y_out[:] = y_star
        else:
            _pure(y_out, best_response_index(P, x, TIE_TOL))
    else:
        t0 = 0.5 * T
        if T > 1:
            t0 += np.sqrt(T * np.log(T))
        if t <= t0:
            if x[0] < KILLER_LOW:
                _pure(y_out, 0)
            elif x[0] > KILLER_HIGH:
                _pure(y_out, 1)
            else:
                y_out[:] = y_star
        else:
            _pure(y_out, best_response_index(P, x, TIE_TOL))


class Adversary:
    """Column player of a given kind.

    kinds: ``fixed`` (needs ``y``), ``nash``, ``best_response``, ``hybrid``
    (``switch_fraction``), ``adaptive`` (``threshold``) and ``ucb_killer``.
    """

    def __init__(self, kind: str, game: GameMatrix, y=None,
                 switch_fraction: float = DEFAULT_SWITCH_FRACTION,
                 threshold: float = DEFAULT_THRESHOLD):
        if kind not in KIND_CODES:
            raise ValueError(f"unknown adversary {kind!r}; expected one of {sorted(KIND_CODES)}")
        self.kind = kind
        self.code = KIND_CODES[kind]
        self.game = game
        self._P = np.ascontiguousarray(game.rescaled)
        equilibrium = solve(game)
        self.x_star = equilibrium.x_star
        self.y_star = equilibrium.y_star
        if kind == "fixed":
            if y is None:
                raise ValueError("fixed adversary needs a strategy y")
            self.y_fixed = make_strategy(y, game.m)
        else:
            self.y_fixed = self.y_star.copy()
        self.switch_fraction = float(switch_fraction)
        self.threshold = float(threshold)

    def next_column_strategy(self, t: int, T: int, x) -> np.ndarray:
        y = np.empty(self.game.m)
        adversary_column(self.code, int(t), int(T), self._P, np.asarray(x, dtype=float),
                         self.x_star, self.y_star, self.y_fixed,
                         self.switch_fraction, self.threshold, y)
        return y

    def kernel_args(self):
        return self.code, self.x_star, self.y_star, self.y_fixed, self.switch_fraction, self.threshold


# ---------------------------------------------------------------------------
# hard instances

@dataclass
class HardInstance:
    family: str
    games: Tuple[GameMatrix, ...]
    strategies: Tuple[np.ndarray, ...] = ()
    params: dict = field(default_factory=dict)
    adversary: Optional[str] = None


def indistinguishable_pair(a: float, b: float, c: float, d: float, T: int) -> HardInstance:
    """Two 2x2 games with equal value that no learner watching only the
    matrix can tell apart at horizon T. Requires a > b, a > c, d > b, d > c
    and all entries in [0, 1/2]; the pair is played against best response."""
    if not (a > b and a > c and d > b and d > c):
        raise InvalidFamilyParams("need a > b, a > c, d > b and d > c")
    if min(a, b, c, d) < 0.0 or max(a, b, c, d) > 0.5:
        raise InvalidFamilyParams("entries must lie in [0, 1/2]")
    if T < 1:
        raise InvalidFamilyParams("T must be positive")
    dmin = min(b, c)
    p1 = sqrt(dmin) * (a - c) / (32.0 * sqrt(T))
    p2 = sqrt(dmin) * (d - b) / (32.0 * sqrt(T))
    A1 = np.array([[a - p1, b + p2], [c - p1, d + p2]])
    A2 = np.array([[a + p1, b - p2], [c + p1, d - p2]])
    games = (GameMatrix.from_unit(A1), GameMatrix.from_unit(A2))
    return HardInstance("indistinguishable_pair", games, (),
                        {"a": a, "b": b, "c": c, "d": d, "T": T,
                         "column1_shift": p1, "column2_shift": p2},
                        adversary="best_response")


def external_regret_pair(A, T: int) -> HardInstance:
    """Two fixed column strategies straddling y* by sqrt(dmin / (64 |D| T))."""
    game = A if isinstance(A, GameMatrix) else GameMatrix.from_unit(A)
    if game.shape != (2, 2):
        raise InvalidFamilyParams("the pair is defined for 2x2 games")
    sol = solve(game)
    if sol.is_psne or len(sol.support_x) != 2:
        raise InvalidFamilyParams("need a unique full-support equilibrium")
    (a, b), (c, d) = game.rescaled
    D = a - b - c + d
    dmin = min(abs(a - b), abs(a - c), abs(d - b), abs(d - c))
    eps = sqrt(dmin / (64.0 * abs(D) * T))
    y1 = sol.y_star + eps * np.array([1.0, -1.0])
    y2 = sol.y_star - eps * np.array([1.0, -1.0])
    if min(y1.min(), y2.min()) < 0.0:
        raise InvalidFamilyParams(f"T={T} too small: perturbation {eps:.3g} leaves the simplex")
    return HardInstance("external_regret_pair", (game,), (y1, y2),
                        {"T": T, "perturbation": eps}, adversary="fixed")


def rock_paper_scissors(T: int) -> HardInstance:
    """Rock-paper-scissors with two column strategies that mix over two actions."""
    if T < 1:
        raise InvalidFamilyParams("T must be positive")
    eps = 1.0 / (16.0 * sqrt(T))
    A = np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]])
    y1 = np.array([1.0 / 3.0 + eps, 2.0 / 3.0 - eps, 0.0])
    y2 = np.array([1.0 / 3.0 - eps, 2.0 / 3.0 + eps, 0.0])
    return HardInstance("rock_paper_scissors", (GameMatrix(A),), (y1, y2),
                        {"T": T, "perturbation": eps}, adversary="fixed")


def myopic_bandit_instance(T: int) -> HardInstance:
    """Game on which a row-only bandit sees two near-identical arms."""
    if T < 1:
        raise InvalidFamilyParams("T must be positive")
    eps = 1.0 / (100.0 * sqrt(T))
    A = np.array([[0.75, 0.25], [0.0, 1.0]])
    y = np.array([0.5 + eps, 0.5 - eps])
    return HardInstance("myopic_bandit", (GameMatrix.from_unit(A),), (y,),
                        {"T": T, "perturbation": eps}, adversary="fixed")


def ucb_killer_instance() -> HardInstance:
    A = np.array([[2.0 / 3.0, 0.0], [0.0, 1.0 / 3.0]])
    return HardInstance("ucb_killer", (GameMatrix.from_unit(A),), (), {}, adversary="ucb_killer")


FAMILIES = {
    "indistinguishable_pair": indistinguishable_pair,
    "external_regret_pair": external_regret_pair,
    "rock_paper_scissors": rock_paper_scissors,
    "myopic_bandit": myopic_bandit_instance,
    "ucb_killer": ucb_killer_instance,
}


def generate_hard_instance(family: str, **params) -> HardInstance:
    if family not in FAMILIES:
        raise InvalidFamilyParams(f"unknown family {family!r}")
    try:
        return FAMILIES[family](**params)
    except TypeError as exc:
        raise InvalidFamilyParams(str(exc)) from None
