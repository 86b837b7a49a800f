"""Logarithmic-regret learner for 2x2 games under bandit feedback.

Exploration is a state machine over a small ladder of strategies that
certifies the ordering of the four entries one row or column at a time.
Exploitation repeatedly runs the drift subroutine in bandit mode, doubling
the per-cell sample budget between invocations.

All state lives in two flat arrays (``f`` for floats and ``iv`` for ints)
so the same step functions serve the Python wrapper below and the compiled
match loop in :mod:`zsregret.fastpath`.
"""
from math import log

import numpy as np

from ._accel import njit
from .empirical import cell_radius, ratio_condition
from .errors import InconsistentObservation, UnsampledCell
from .game_core import nash_2x2
from .subroutine import FEASIBILITY_TOL

# stages
ONLINE = 0
UNIFORM = 1
ALTERNATE = 2
CASE1_X3X4 = 3
CASE1_X5X6 = 4
CASE2_X7 = 5
CASE2_X7X8 = 6
CASE2_X9X7 = 7
COMMIT = 8
EXPLOIT = 9

STAGE_NAMES = (
    "online", "uniform_half", "alternate_top_half", "case1_x3x4", "case1_x5x6",
    "case2_x7", "case2_x7x8", "case2_x9x7", "commit_row", "exploit",
)

# termination reasons
NOT_TERMINATED = 0
PSNE = 1
DOMINANT_ROW = 2
STOPPING_CONDITION = 3
REASON_NAMES = ("running", "psne", "dominant_row", "stopping_condition")

# float slots
F_LOG = 0        # ln(T^2)
F_D0 = 1
F_D1 = 2
F_D2 = 3
F_D3 = 4
F_DLT = 5        # delta for x7
F_ANCHOR = 6     # x'_1 of the current invocation
F_SUBDELTA = 7   # subroutine delta (one coordinate for n = 2)
F_ETA = 8
F_RADIUS = 9
F_AHAT = 10      # 4 slots, frozen matrix row-major
F_RAW_RADIUS = 14
NF = 16

# int slots
I_STAGE = 0
I_CUR = 1        # index of the ladder strategy being played (0 = uniform)
I_I1 = 2
I_I2 = 3
I_J1 = 4
I_J2 = 5
I_L = 6          # 0 when l = 1, 1 when l = 2
I_REASON = 7
I_ROW = 8        # committed row
I_T2 = 9
I_INVOCATIONS = 10
I_SUBN = 11      # 4 slots, per-invocation cell counts
I_SKIP = 15
I_SAFEGUARDS = 16
I_ROUNDS = 17
NI = 18

DEN_FLOOR = 1e-12
MAX_RADIUS = 0.5
# optimistic mean for cells that have never been observed (skip mode only)
UNSAMPLED_PRIOR = 1.0


@njit
def init_state(f, iv, horizon, skip_exploration):
    f[:] = 0.0
    iv[:] = 0
    f[F_LOG] = np.log(float(horizon) * float(horizon))
    iv[I_SKIP] = 1 if skip_exploration else 0
    iv[I_STAGE] = UNIFORM
    if skip_exploration:
        iv[I_STAGE] = ONLINE
        counts = np.zeros((2, 2), dtype=np.int64)
        A = np.full((2, 2), UNSAMPLED_PRIOR)
        _set_parameters(f, iv, A, counts)
        f[F_SUBDELTA] = -f[F_RADIUS]


@njit
def _means(counts, sums, A, prior=0.0):
    for i in range(2):
        for j in range(2):
            A[i, j] = sums[i, j] / counts[i, j] if counts[i, j] > 0 else prior


@njit
def _row_separated(A, counts, i, lt):
    if counts[i, 0] == 0 or counts[i, 1] == 0:
        return False
    w = max(cell_radius(counts[i, 0], lt), cell_radius(counts[i, 1], lt))
    return ratio_condition(abs(A[i, 0] - A[i, 1]), 2.0 * w)


@njit
def _col_separated(A, counts, j, lt):
    if counts[0, j] == 0 or counts[1, j] == 0:
        return False
    w = max(cell_radius(counts[0, j], lt), cell_radius(counts[1, j], lt))
    return ratio_condition(abs(A[0, j] - A[1, j]), 2.0 * w)


@njit
def _stopping_condition(A, counts, lt):
    w = 0.0
    for i in range(2):
        for j in range(2):
            if counts[i, j] == 0:
                return False
            w = max(w, cell_radius(counts[i, j], lt))
    g = min(min(abs(A[0, 0] - A[0, 1]), abs(A[1, 0] - A[1, 1])),
            min(abs(A[0, 0] - A[1, 0]), abs(A[0, 1] - A[1, 1])))
    return ratio_condition(g, 2.0 * w)


@njit
def _psne_row(A):
    """Row of a strict saddle point of A, or -1."""
    for i in range(2):
        for j in range(2):
            if A[i, j] < A[i, 1 - j] and A[i, j] > A[1 - i, j]:
                return i
    return -1


@njit
def _terminate(f, iv, A, counts, reason, row):
    iv[I_REASON] = reason
    if reason == STOPPING_CONDITION:
        r = _psne_row(A)
        if r >= 0:
            row = r
            iv[I_REASON] = PSNE
    if iv[I_REASON] != STOPPING_CONDITION:
        iv[I_STAGE] = COMMIT
        iv[I_ROW] = row
        return
    m = counts[0, 0]
    for i in range(2):
        for j in range(2):
            m = min(m, counts[i, j])
    iv[I_T2] = m
    _begin_invocation(f, iv, A, counts)


@njit
def _set_parameters(f, iv, A, counts):
    """Anchor, step size, box radius and frozen matrix from the empirical state."""
    lt = f[F_LOG]
    x1, _, _, kind = nash_2x2(A[0, 0], A[0, 1], A[1, 0], A[1, 1])
    if kind < 0:
        x1 = 0.5
    Dt = abs(A[0, 0] - A[0, 1] - A[1, 0] + A[1, 1])
    if Dt < DEN_FLOOR:
        Dt = DEN_FLOOR
    w = 0.0
    for i in range(2):
        for j in range(2):
            w = max(w, cell_radius(max(counts[i, j], 1), lt))
    D1 = Dt / 2.0
    T1 = max(1.0, 1.0 / (w * w))
    eta = 1.0 / (D1 * T1)
    r = 1.0 / (D1 * np.sqrt(T1))
    f[F_RAW_RADIUS] = r
    if min(x1, 1.0 - x1) < r - FEASIBILITY_TOL:
        # infeasible anchor: cap the box at the whole simplex and shift the
        # anchor inward, which keeps every feasible point of the old box
        iv[I_SAFEGUARDS] += 1
        if r > MAX_RADIUS:
            r = MAX_RADIUS
            # keep the crossing time of the box: eta / r = 1 / sqrt(T1)
            eta = r / np.sqrt(T1)
        lo = min(x1, 1.0 - x1)
        if lo < r:
            lam = (r - lo) / (0.5 - lo)
            x1 = (1.0 - lam) * x1 + lam * 0.5
    f[F_ANCHOR] = x1
    f[F_ETA] = eta
    f[F_RADIUS] = r
    for i in range(2):
        for j in range(2):
            f[F_AHAT + 2 * i + j] = A[i, j]


@njit
def _begin_invocation(f, iv, A, counts):
    """Freeze A, pick the anchor and box, and reset the per-run counts."""
    _set_parameters(f, iv, A, counts)
    f[F_SUBDELTA] = -f[F_RADIUS]
    for c in range(4):
        iv[I_SUBN + c] = 0
    iv[I_STAGE] = EXPLOIT
    iv[I_INVOCATIONS] += 1


@njit
def _drift(f, j):
    d = f[F_SUBDELTA] + f[F_ETA] * (f[F_AHAT + j] - f[F_AHAT + 2 + j])
    r = f[F_RADIUS]
    if d > r:
        d = r
    elif d < -r:
        d = -r
    f[F_SUBDELTA] = d


@njit
def _ladder_coordinate(f, iv):
    """(row index, probability on it) for the ladder strategy in play."""
    cur = iv[I_CUR]
    i1 = iv[I_I1]
    if cur == 1:
        return i1, 1.0
    if cur == 2:
        return i1, 0.5
    if cur == 3:
        return iv[I_I1 + iv[I_L]], 1.0 - f[F_D0]
    if cur == 4:
        return iv[I_I1 + iv[I_L]], 0.0
    if cur == 5:
        return i1, f[F_D2]
    if cur == 6:
        return i1, 1.0 - f[F_D1]
    if cur == 7:
        return i1, 1.0 - f[F_DLT]
    if cur == 8:
        return i1, 0.0
    if cur == 9:
        return i1, f[F_D3]
    return 0, 0.5


@njit
def strategy(f, iv, x):
    stage = iv[I_STAGE]
    if stage == UNIFORM:
        x[0] = 0.5
        x[1] = 0.5
    elif stage == COMMIT:
        x[0] = 1.0 if iv[I_ROW] == 0 else 0.0
        x[1] = 1.0 - x[0]
    elif stage == EXPLOIT or stage == ONLINE:
        # clamp: a box edge on the simplex boundary can round to -1e-17
        p = f[F_ANCHOR] + f[F_SUBDELTA]
        x[0] = min(1.0, max(0.0, p))
        x[1] = 1.0 - x[0]
    else:
        row, p = _ladder_coordinate(f, iv)
        x[row] = p
        x[1 - row] = 1.0 - p


@njit
def _switch(iv, i, j):
    stage = iv[I_STAGE]
    cur = iv[I_CUR]
    i1, i2, j1, j2 = iv[I_I1], iv[I_I2], iv[I_J1], iv[I_J2]
    if stage == ALTERNATE:
        if cur == 1 and j == j2:
            iv[I_CUR] = 2
        elif cur == 2:
            iv[I_CUR] = 1
    elif stage == CASE1_X3X4:
        l = iv[I_L]
        il_bar = iv[I_I1 + 1 - l]
        jl = iv[I_J1 + l]
        jl_bar = iv[I_J1 + 1 - l]
        if cur == 3 and i == il_bar and j == jl_bar:
            iv[I_CUR] = 4
        elif cur == 4 and i == il_bar and j == jl:
            iv[I_CUR] = 3
    elif stage == CASE1_X5X6:
        if cur == 5 and j == j1:
            iv[I_CUR] = 6
        elif cur == 6 and j == j2:
            iv[I_CUR] = 5
    elif stage == CASE2_X7X8:
        if cur == 7 and i == i2 and j == j2:
            iv[I_CUR] = 8
        elif cur == 8 and i == i2 and j == j1:
            iv[I_CUR] = 7
    elif stage == CASE2_X9X7:
        if cur == 9 and j == j1:
            iv[I_CUR] = 7
        elif cur == 7 and j == j2:
            iv[I_CUR] = 9


@njit
def _advance(f, iv, A, counts):
    stage = iv[I_STAGE]
    lt = f[F_LOG]
    i1, i2, j1, j2 = iv[I_I1], iv[I_I2], iv[I_J1], iv[I_J2]
    if stage == UNIFORM:
        for j in range(2):
            if _col_separated(A, counts, j, lt):
                iv[I_J1] = j
                iv[I_J2] = 1 - j
                top = 0 if A[0, j] > A[1, j] else 1
                iv[I_I1] = top
                iv[I_I2] = 1 - top
                iv[I_STAGE] = ALTERNATE
                iv[I_CUR] = 1
                return
    elif stage == ALTERNATE:
        if _col_separated(A, counts, j2, lt):
            # case 1
            if A[i1, j2] > A[i2, j2]:
                _terminate(f, iv, A, counts, DOMINANT_ROW, i1)
                return
            g1 = abs(A[i1, j1] - A[i1, j2])
            g2 = abs(A[i2, j1] - A[i2, j2])
            l = 0 if g1 >= g2 else 1
            il = iv[I_I1 + l]
            jl = iv[I_J1 + l]
            jl_bar = iv[I_J1 + 1 - l]
            if A[il, jl] < A[il, jl_bar]:
                _terminate(f, iv, A, counts, PSNE, il)
                return
            iv[I_L] = l
            f[F_D0] = max(g1, g2) / 3.0
            iv[I_STAGE] = CASE1_X3X4
            iv[I_CUR] = 3
        elif _row_separated(A, counts, i1, lt):
            # case 2
            if A[i1, j1] < A[i1, j2]:
                _terminate(f, iv, A, counts, PSNE, i1)
                return
            f[F_DLT] = abs(A[i1, j1] - A[i1, j2]) / 3.0
            iv[I_STAGE] = CASE2_X7
            iv[I_CUR] = 7
    elif stage == CASE1_X3X4:
        il_bar = iv[I_I1 + 1 - iv[I_L]]
        if _row_separated(A, counts, il_bar, lt):
            r = _psne_row(A)
            if r >= 0:
                _terminate(f, iv, A, counts, PSNE, r)
                return
            f[F_D1] = abs(A[i1, j1] - A[i1, j2]) / 3.0
            f[F_D2] = abs(A[i2, j1] - A[i2, j2]) / 3.0
            iv[I_STAGE] = CASE1_X5X6
            iv[I_CUR] = 5
    elif stage == CASE1_X5X6 or stage == CASE2_X9X7:
        if _stopping_condition(A, counts, lt):
            _terminate(f, iv, A, counts, STOPPING_CONDITION, -1)
    elif stage == CASE2_X7:
        if _col_separated(A, counts, j2, lt):
            if A[i1, j2] > A[i2, j2]:
                _terminate(f, iv, A, counts, DOMINANT_ROW, i1)
                return
            iv[I_STAGE] = CASE2_X7X8
            iv[I_CUR] = 7
    elif stage == CASE2_X7X8:
        if _row_separated(A, counts, i2, lt):
            r = _psne_row(A)
            if r >= 0:
                _terminate(f, iv, A, counts, PSNE, r)
                return
            f[F_D3] = abs(A[i2, j1] - A[i2, j2]) / 3.0
            iv[I_STAGE] = CASE2_X9X7
            iv[I_CUR] = 9


@njit
def update(f, iv, counts, sums, i, j, reward):
    counts[i, j] += 1
    sums[i, j] += reward
    iv[I_ROUNDS] += 1
    stage = iv[I_STAGE]
    if stage == COMMIT:
        return
    A = np.empty((2, 2))
    if stage == EXPLOIT:
        iv[I_SUBN + 2 * i + j] += 1
        _drift(f, j)
        t2 = iv[I_T2]
        for c in range(4):
            if iv[I_SUBN + c] < t2:
                return
        _means(counts, sums, A, UNSAMPLED_PRIOR)
        m = counts[0, 0]
        for a in range(2):
            for b in range(2):
                m = min(m, counts[a, b])
        iv[I_T2] = m
        _begin_invocation(f, iv, A, counts)
        return
    if stage == ONLINE:
        _drift(f, j)
        _means(counts, sums, A, UNSAMPLED_PRIOR)
        if _stopping_condition(A, counts, f[F_LOG]):
            _terminate(f, iv, A, counts, STOPPING_CONDITION, -1)
            return
        # optimistic estimates keep rarely observed cells in play
        for a in range(2):
            for b in range(2):
                A[a, b] += cell_radius(max(counts[a, b], 1), f[F_LOG])
        _set_parameters(f, iv, A, counts)
        r = f[F_RADIUS]
        f[F_SUBDELTA] = min(max(f[F_SUBDELTA], -r), r)
        return
    _switch(iv, i, j)
    _means(counts, sums, A)
    _advance(f, iv, A, counts)


# ---------------------------------------------------------------------------

def well_separated(counts, sums, axis: str, index: int, horizon: int) -> bool:
    """Ratio test on one row (``axis='row'``) or column of the empirical matrix."""
    counts = np.asarray(counts, dtype=np.int64)
    if axis == "row":
        cells = [(index, 0), (index, 1)]
    elif axis == "column":
        cells = [(0, index), (1, index)]
    else:
        raise ValueError("axis must be 'row' or 'column'")
    if any(counts[c] == 0 for c in cells):
        raise UnsampledCell(f"{axis} {index} has an unsampled cell")
    A = np.empty((2, 2))
    _means(counts, np.asarray(sums, dtype=float), A)
    lt = log(float(horizon) ** 2)
    if axis == "row":
        return bool(_row_separated(A, counts, index, lt))
    return bool(_col_separated(A, counts, index, lt))


class Bandit2x2Learner:
    """Row player for 2x2 games that observes only the played entry.

    ``skip_exploration=True`` drops the exploration ladder and plays the
    drift subroutine from the first round. Until the stopping condition
    holds, the subroutine's matrix is the optimistic one (empirical mean
    plus confidence radius, unsampled cells at mean 1 with the count-1
    radius) and it is refreshed together with the anchor and box after
    every round, carrying the drift over. After that the doubling loop
    runs as usual.
    """

    feedback = "bandit"
    name = "ours"

    def __init__(self, horizon: int, skip_exploration: bool = False):
        self.horizon = int(horizon)
        self.skip_exploration = bool(skip_exploration)
        self.f = np.zeros(NF)
        self.iv = np.zeros(NI, dtype=np.int64)
        self.counts = np.zeros((2, 2), dtype=np.int64)
        self.sums = np.zeros((2, 2))
        self.events = []
        self.t = 0
        self._last_x = None
        init_state(self.f, self.iv, self.horizon, self.skip_exploration)

    @property
    def stage(self) -> str:
        return STAGE_NAMES[self.iv[I_STAGE]]

    @property
    def reason(self) -> str:
        return REASON_NAMES[self.iv[I_REASON]]

    @property
    def invocations(self) -> int:
        return int(self.iv[I_INVOCATIONS])

    def means(self) -> np.ndarray:
        A = np.empty((2, 2))
        _means(self.counts, self.sums, A)
        return A

    def next_strategy(self) -> np.ndarray:
        x = np.empty(2)
        strategy(self.f, self.iv, x)
        self._last_x = x
        return x.copy()

    def observe(self, i: int, j: int, reward: float) -> None:
        if self._last_x is not None and self._last_x[i] <= 0.0:
            raise InconsistentObservation(f"row {i} had zero probability under the last strategy")
        before = (int(self.iv[I_STAGE]), int(self.iv[I_INVOCATIONS]))
        update(self.f, self.iv, self.counts, self.sums, int(i), int(j), float(reward))
        self.t += 1
        after = (int(self.iv[I_STAGE]), int(self.iv[I_INVOCATIONS]))
        if after != before:
            self.events.append({
                "t": self.t, "phase": STAGE_NAMES[after[0]], "reason": self.reason,
                "invocation": after[1], "t2": int(self.iv[I_T2]),
                "anchor": float(self.f[F_ANCHOR]), "radius": float(self.f[F_RADIUS]),
            })
