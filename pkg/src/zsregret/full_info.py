"""Full-feedback learner for n x m games.

Three phases, never revisited: identify the equilibrium submatrix from the
empirical matrix, burn in on that submatrix until its determinant
statistics have concentrated, then run the drift subroutine with a
doubling budget. A pure equilibrium short-circuits to committing on its row.
All statistics are computed on the [0, 1] scale.
"""
from math import factorial, log, sqrt

import numpy as np

from ._accel import njit
from .empirical import EmpiricalState, ratio_condition
from .errors import ModeMismatch, SupportMismatch
from .game_core import (DET_TOL, EXCLUSION_TOL, cramer_dets, enumerate_equilibria,
                        first_equilibrium)
from .subroutine import Subroutine, SubroutineConfig, anchor_margin, safeguard_anchor

IDENTIFY = "identify"
BURNIN = "burnin"
EXPLOIT = "exploit"
COMMIT_PSNE = "commit_psne"
EMPIRICAL = "empirical"


@njit
def _factorial(k):
    f = 1.0
    for i in range(2, k + 1):
        f *= i
    return f


@njit
def determinant_statistics(B):
    """(min over the whole Cramer determinant family, min of the two system determinants)."""
    k = B.shape[0]
    cols = np.empty(k)
    rows = np.empty(k)
    dB = abs(cramer_dets(B, cols))
    dBT = abs(cramer_dets(B.T.copy(), rows))
    low = min(dB, dBT)
    for a in range(k):
        low = min(low, abs(cols[a]), abs(rows[a]))
    return low, min(dB, dBT)


@njit
def separation_holds(B, delta):
    """Ratio test of the smallest determinant against 2 k^2 k! delta."""
    k = B.shape[0]
    low, _ = determinant_statistics(B)
    return ratio_condition(low, 2.0 * k * k * _factorial(k) * delta)


@njit
def exclusion_gaps(Abar, x, y, value):
    """V - best excluded row payoff, and worst excluded column payoff - V (inf if none)."""
    n, m = Abar.shape
    g1 = np.inf
    for i in range(n):
        if x[i] > 0.0:
            continue
        s = 0.0
        for j in range(m):
            s += y[j] * Abar[i, j]
        g1 = min(g1, value - s)
    g2 = np.inf
    for j in range(m):
        if y[j] > 0.0:
            continue
        s = 0.0
        for i in range(n):
            s += x[i] * Abar[i, j]
        g2 = min(g2, s - value)
    return g1, g2


@njit
def submatrix_return(Abar, x, y, value, rows, cols, delta):
    """Return test for a candidate support (row and column index arrays of equal size)."""
    k = rows.shape[0]
    B = np.empty((k, k))
    for a in range(k):
        for b in range(k):
            B[a, b] = Abar[rows[a], cols[b]]
    low, Dt = determinant_statistics(B)
    kf = _factorial(k)
    if not ratio_condition(low, 2.0 * k * k * kf * delta):
        return False
    g1, g2 = exclusion_gaps(Abar, x, y, value)
    g = min(g1, g2)
    wide = k * kf * delta
    return g >= 5.0 * k * wide / Dt + 2.0 * delta


@njit
def identify_step(Abar, t, log_term, x_out, y_out, rows_out, cols_out):
    """One identification round: write the empirical equilibrium into
    x_out/y_out and return the submatrix size k once the return test
    passes, else 0. ``rows_out``/``cols_out`` receive the support."""
    n, m = Abar.shape
    found, value = first_equilibrium(Abar, x_out, y_out)
    if not found:
        return 0
    kx = 0
    ky = 0
    for i in range(n):
        if x_out[i] > 0.0:
            rows_out[kx] = i
            kx += 1
    for j in range(m):
        if y_out[j] > 0.0:
            cols_out[ky] = j
            ky += 1
    if kx != ky:
        return 0
    delta = np.sqrt(2.0 * log_term / t)
    if submatrix_return(Abar, x_out, y_out, value, rows_out[:kx], cols_out[:kx], delta):
        return kx
    return 0


@njit
def unique_full_support(B):
    """Whether the square block B has exactly one equilibrium and it has full support."""
    k = B.shape[0]
    xs = np.empty((2, k))
    ys = np.empty((2, k))
    vals = np.empty(2)
    slacks = np.empty(2)
    c = enumerate_equilibria(B, xs, ys, vals, slacks, DET_TOL, EXCLUSION_TOL)
    if c != 1:
        return False
    for a in range(k):
        if xs[0, a] <= 0.0 or ys[0, a] <= 0.0:
            return False
    return True


# ---------------------------------------------------------------------------

def identification_log_term(n: int, m: int, horizon: int) -> float:
    return log(n * m * float(horizon) ** 2)


def check_separation_condition(empirical, t: int, k: int, horizon: int, rows=None, cols=None) -> bool:
    """Ratio test for the k x k block of the empirical matrix on ``rows`` x ``cols``
    (the leading block when omitted), with delta = sqrt(2 ln(k^2 T^2) / t)."""
    A = empirical.means() if isinstance(empirical, EmpiricalState) else np.asarray(empirical, dtype=float)
    rows = np.arange(k) if rows is None else np.asarray(rows)
    cols = np.arange(k) if cols is None else np.asarray(cols)
    B = np.ascontiguousarray(A[np.ix_(rows, cols)])
    delta = sqrt(2.0 * log(k * k * float(horizon) ** 2) / t)
    return bool(separation_holds(B, delta))


def check_submatrix_return(empirical, support, t: int, horizon: int, x=None, y=None) -> bool:
    """Return test of the identification phase for ``support = (rows, cols)``.

    The empirical equilibrium ``(x, y)`` defaults to the first one found by
    support enumeration on the empirical matrix.
    """
    A = empirical.means() if isinstance(empirical, EmpiricalState) else np.asarray(empirical, dtype=float)
    A = np.ascontiguousarray(A)
    rows, cols = (np.asarray(s, dtype=np.int64) for s in support)
    if rows.shape[0] != cols.shape[0]:
        raise SupportMismatch(f"row support has {rows.shape[0]} indices, column support {cols.shape[0]}")
    n, m = A.shape
    if x is None or y is None:
        x, y = np.empty(n), np.empty(m)
        first_equilibrium(A, x, y)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    value = float(x @ A @ y)
    delta = sqrt(2.0 * identification_log_term(n, m, horizon) / t)
    return bool(submatrix_return(A, x, y, value, rows, cols, delta))


class FullInfoLearner:
    """Row player that observes the whole noisy matrix every round."""

    feedback = "full"
    name = "full_info"

    def __init__(self, horizon: int, n: int, m: int):
        self.horizon = int(horizon)
        self.n, self.m = int(n), int(m)
        self.empirical = EmpiricalState(n, m)
        self.phase = IDENTIFY
        self.t = 0
        self.t_star = None
        self.t1 = None
        self.rows = None
        self.cols = None
        self.events = []
        self.invocations = 0
        self.safeguards = 0
        self._x = np.full(n, 1.0 / n)
        self._sub = None
        self._log_identify = identification_log_term(n, m, horizon)
        self._rows_buf = np.zeros(min(n, m), dtype=np.int64)
        self._cols_buf = np.zeros(min(n, m), dtype=np.int64)

    @property
    def selected_support(self):
        if self.rows is None:
            return None
        return tuple(int(i) for i in self.rows), tuple(int(j) for j in self.cols)

    def _event(self, **extra):
        rec = {"t": self.t, "phase": self.phase}
        rec.update(extra)
        self.events.append(rec)

    def _embed(self, x_block):
        x = np.zeros(self.n)
        x[self.rows] = x_block
        return x

    def _block(self):
        A = self.empirical.means()
        return A, np.ascontiguousarray(A[np.ix_(self.rows, self.cols)])

    def _block_equilibrium(self, B):
        k = B.shape[0]
        xb, yb = np.empty(k), np.empty(k)
        first_equilibrium(B, xb, yb)
        return xb

    def next_strategy(self) -> np.ndarray:
        if self.phase == EXPLOIT and self._sub is not None:
            return self._embed(self._sub.next_strategy())
        return self._x.copy()

    def observe(self, i: int, j: int, feedback) -> None:
        fb = np.asarray(feedback, dtype=float)
        if fb.shape != (self.n, self.m):
            raise ModeMismatch("full-feedback learner expects the whole observed matrix")
        self.empirical.update_full(fb)
        self.t += 1
        self._last = fb
        getattr(self, "_after_" + self.phase)(int(j))

    # phases ---------------------------------------------------------------

    def _after_identify(self, j):
        A = np.ascontiguousarray(self.empirical.means())
        y = np.empty(self.m)
        x = np.empty(self.n)
        k = identify_step(A, self.t, self._log_identify, x, y, self._rows_buf, self._cols_buf)
        self._x = x
        if k == 0:
            return
        self.rows = self._rows_buf[:k].copy()
        self.cols = self._cols_buf[:k].copy()
        if k == 1:
            self.phase = COMMIT_PSNE
            self._x = np.zeros(self.n)
            self._x[self.rows[0]] = 1.0
            self._event(support=self.selected_support)
            return
        self.phase = BURNIN
        self._event(support=self.selected_support)
        self._after_burnin(j)

    def _after_burnin(self, j):
        A, B = self._block()
        k = B.shape[0]
        self._x = self._embed(self._block_equilibrium(B))
        T = self.horizon
        delta = sqrt(2.0 * log(k * k * float(T) ** 2) / self.t)
        if self.t_star is None and separation_holds(B, delta):
            self.t_star = 6.25 * self.t
            self.events.append({"t": self.t, "phase": BURNIN, "t_star": self.t_star})
        if self.t_star is None or self.t < self.t_star:
            return
        if unique_full_support(B):
            self.phase = EXPLOIT
            self.t1 = self.t
            self._start_invocation()
        else:
            self.phase = EMPIRICAL
            self._event()

    def _after_empirical(self, j):
        A, B = self._block()
        self._x = self._embed(self._block_equilibrium(B))

    def _after_commit_psne(self, j):
        pass

    def _after_exploit(self, j):
        if self._sub is None:
            self._after_empirical(j)
            return
        done = self._sub.observe(j, self._last[self.rows, :])
        if done:
            self.t1 = 2 * self.t1
            self._start_invocation()

    def _start_invocation(self):
        T = self.horizon
        if self.t1 >= T:
            self._sub = None
            self._after_empirical(None)
            return
        A, B = self._block()
        k = B.shape[0]
        x_prime = self._block_equilibrium(B)
        cols = np.empty(k)
        D_tilde = abs(cramer_dets(np.ascontiguousarray(B.T), cols))
        delta = sqrt(2.0 * log(k * k * float(T) ** 2) / self.t1)
        D1 = D_tilde / (5.0 * k * factorial(k))
        T1 = 1.0 / delta ** 2
        T2 = int(min(self.t1, T - self.t1))
        if T2 < 1:
            self._sub = None
            return
        r = 1.0 / (D1 * sqrt(T1))
        if anchor_margin(x_prime) < (k - 1) * r:
            # shrink the box so the subroutine stays on the simplex
            x_prime, r_safe = safeguard_anchor(x_prime, r)
            D1 = 1.0 / (r_safe * sqrt(T1))
            self.safeguards += 1
        A_hat = A[self.rows, :]
        self._sub = Subroutine(SubroutineConfig(x_prime, D1, T1, T2, A_hat, "full"))
        self.invocations += 1
        self._event(t1=self.t1, D1=D1, T1=T1, T2=T2, anchor=x_prime.tolist())
