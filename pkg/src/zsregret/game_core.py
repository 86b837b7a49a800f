"""Exact statics of two-player zero-sum matrix games.

The row player maximizes ``x^T A y``. Equilibria are found by enumerating
square supports and solving each candidate with Cramer's rule on the
system ``M_B y = (0, ..., 0, 1)``, where the first ``k-1`` rows of ``M_B``
are ``B[0, :] - B[i, :]`` and the last row is all ones.
"""
from dataclasses import dataclass, field
from math import factorial, inf
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ._accel import njit
from .errors import DegenerateMatrix, InvalidMatrix, NonUniqueEquilibrium

DET_TOL = 1e-12
EXCLUSION_TOL = 1e-12
TIE_TOL = 1e-12
MAX_DIM = 8


# ---------------------------------------------------------------------------
# kernels shared with the learners

@njit
def det_small(M):
    """Determinant; Gaussian elimination with partial pivoting beyond 3x3."""
    k = M.shape[0]
    # closed forms for the sizes that dominate the learners' inner loops
    if k == 1:
        return M[0, 0]
    if k == 2:
        return M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    if k == 3:
        return (M[0, 0] * (M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1])
                - M[0, 1] * (M[1, 0] * M[2, 2] - M[1, 2] * M[2, 0])
                + M[0, 2] * (M[1, 0] * M[2, 1] - M[1, 1] * M[2, 0]))
    a = M.copy()
    det = 1.0
    for c in range(k):
        p = c
        best = abs(a[c, c])
        for r in range(c + 1, k):
            if abs(a[r, c]) > best:
                best = abs(a[r, c])
                p = r
        if best == 0.0:
            return 0.0
        if p != c:
            for q in range(k):
                tmp = a[c, q]
                a[c, q] = a[p, q]
                a[p, q] = tmp
            det = -det
        piv = a[c, c]
        det *= piv
        for r in range(c + 1, k):
            f = a[r, c] / piv
            if f != 0.0:
                for q in range(c, k):
                    a[r, q] -= f * a[c, q]
    return det


@njit
def cramer_matrix(B):
    """M_B for a k x k block ``B``."""
    k = B.shape[0]
    M = np.empty((k, k))
    for i in range(k - 1):
        for j in range(k):
            M[i, j] = B[0, j] - B[i + 1, j]
    for j in range(k):
        M[k - 1, j] = 1.0
    return M


@njit
def _cramer_into(B, transpose, M, W, out):
    """cramer_dets on B (or its transpose) using caller-owned scratch M, W."""
    k = B.shape[0]
    for i in range(k - 1):
        for j in range(k):
            if transpose:
                M[i, j] = B[j, 0] - B[j, i + 1]
            else:
                M[i, j] = B[0, j] - B[i + 1, j]
    for j in range(k):
        M[k - 1, j] = 1.0
    d = det_small(M)
    for l in range(k):
        for i in range(k):
            for j in range(k):
                W[i, j] = M[i, j]
        for i in range(k):
            W[i, l] = 0.0
        W[k - 1, l] = 1.0
        out[l] = det_small(W)
    return d


@njit
def cramer_dets(B, out):
    """Return det(M_B) and write det(M_{B,l}) for every column l into ``out``."""
    k = B.shape[0]
    return _cramer_into(B, False, np.empty((k, k)), np.empty((k, k)), out)


@njit
def _next_combination(c, n):
    k = c.shape[0]
    i = k - 1
    while i >= 0 and c[i] == n - k + i:
        i -= 1
    if i < 0:
        return False
    c[i] += 1
    for j in range(i + 1, k):
        c[j] = c[j - 1] + 1
    return True


@njit
def _try_support(A, rows, cols, x_out, y_out, det_tol, excl_tol, B, M, W, ycol, xrow):
    """Validate one square support. Returns (ok, value, slack).

    ``B``, ``M``, ``W`` are K x K work buffers and ``ycol``, ``xrow``
    length-K buffers, K at least the support size. Only the leading k
    entries are used, and sizes 1 and 2 avoid taking views altogether.
    """
    n, m = A.shape
    k = rows.shape[0]
    for a in range(k):
        for b in range(k):
            B[a, b] = A[rows[a], cols[b]]
    # sizes 1 and 2 inline the same arithmetic _cramer_into performs
    if k == 1:
        dB = 1.0
        dBT = 1.0
        ycol[0] = 1.0
        xrow[0] = 1.0
    elif k == 2:
        dB = (B[0, 0] - B[1, 0]) - (B[0, 1] - B[1, 1])
        if abs(dB) < det_tol:
            return False, 0.0, 0.0
        dBT = (B[0, 0] - B[0, 1]) - (B[1, 0] - B[1, 1])
        if abs(dBT) < det_tol:
            return False, 0.0, 0.0
        ycol[0] = -(B[0, 1] - B[1, 1])
        ycol[1] = B[0, 0] - B[1, 0]
        xrow[0] = -(B[1, 0] - B[1, 1])
        xrow[1] = B[0, 0] - B[0, 1]
    else:
        Bk = B[:k, :k]
        dB = _cramer_into(Bk, False, M[:k, :k], W[:k, :k], ycol[:k])
        if abs(dB) < det_tol:
            return False, 0.0, 0.0
        dBT = _cramer_into(Bk, True, M[:k, :k], W[:k, :k], xrow[:k])
        if abs(dBT) < det_tol:
            return False, 0.0, 0.0
    for a in range(k):
        ycol[a] /= dB
        xrow[a] /= dBT
        if ycol[a] <= 0.0 or xrow[a] <= 0.0:
            return False, 0.0, 0.0
    for i in range(n):
        x_out[i] = 0.0
    for j in range(m):
        y_out[j] = 0.0
    for a in range(k):
        x_out[rows[a]] = xrow[a]
        y_out[cols[a]] = ycol[a]
    value = 0.0
    for a in range(k):
        for b in range(k):
            value += xrow[a] * B[a, b] * ycol[b]
    slack = np.inf
    for i in range(n):
        if x_out[i] > 0.0:
            continue
        s = 0.0
        for j in range(m):
            s += A[i, j] * y_out[j]
        if value - s < slack:
            slack = value - s
    for j in range(m):
        if y_out[j] > 0.0:
            continue
        s = 0.0
        for i in range(n):
            s += x_out[i] * A[i, j]
        if s - value < slack:
            slack = s - value
    if slack < -excl_tol:
        return False, 0.0, 0.0
    return True, value, slack


@njit
def enumerate_equilibria(A, xs, ys, vals, slacks, det_tol, excl_tol):
    """Fill up to ``xs.shape[0]`` equilibria in support order; return the count.

    Supports are visited by size, then lexicographically by rows, then by
    columns, so the first hit is the one with the lexicographically
    smallest row support among the smallest supports.
    """
    n, m = A.shape
    cap = xs.shape[0]
    found = 0
    x = np.empty(n)
    y = np.empty(m)
    K = min(n, m)
    B = np.empty((K, K))
    M = np.empty((K, K))
    W = np.empty((K, K))
    ycol = np.empty(K)
    xrow = np.empty(K)
    for k in range(1, K + 1):
        rows = np.arange(k)
        more_rows = True
        while more_rows:
            cols = np.arange(k)
            more_cols = True
            while more_cols:
                ok, v, s = _try_support(A, rows, cols, x, y, det_tol, excl_tol, B, M, W, ycol, xrow)
                if ok:
                    xs[found, :] = x
                    ys[found, :] = y
                    vals[found] = v
                    slacks[found] = s
                    found += 1
                    if found >= cap:
                        return found
                more_cols = _next_combination(cols, m)
            more_rows = _next_combination(rows, n)
    return found


@njit
def first_equilibrium(A, x_out, y_out):
    """Equilibrium of a possibly noisy matrix with deterministic tie-breaking.

    Returns (found, value). Falls back to uniform play when nothing passes
    the determinant threshold.
    """
    n, m = A.shape
    xs = np.empty((1, n))
    ys = np.empty((1, m))
    vals = np.empty(1)
    slacks = np.empty(1)
    c = enumerate_equilibria(A, xs, ys, vals, slacks, DET_TOL, EXCLUSION_TOL)
    if c == 0:
        for i in range(n):
            x_out[i] = 1.0 / n
        for j in range(m):
            y_out[j] = 1.0 / m
        return False, 0.0
    x_out[:] = xs[0]
    y_out[:] = ys[0]
    return True, vals[0]


@njit
def nash_2x2(a, b, c, d):
    """Closed-form equilibrium of [[a, b], [c, d]].

    Returns (x1, y1, value, kind) with kind 1 for a strict saddle point,
    0 for the interior solution and -1 when neither applies.
    """
    # strict saddle: minimum of its row and maximum of its column
    if a < b and a > c:
        return 1.0, 1.0, a, 1
    if b < a and b > d:
        return 1.0, 0.0, b, 1
    if c < d and c > a:
        return 0.0, 1.0, c, 1
    if d < c and d > b:
        return 0.0, 0.0, d, 1
    D = a - b - c + d
    if D != 0.0:
        x1 = (d - c) / D
        y1 = (d - b) / D
        if 0.0 < x1 < 1.0 and 0.0 < y1 < 1.0:
            return x1, y1, (a * d - b * c) / D, 0
    return 0.5, 0.5, 0.0, -1


@njit
def best_response_index(A, x, tol):
    """Column minimizing x^T A e_j; lowest index among near-ties."""
    n, m = A.shape
    best = np.inf
    vals = np.empty(m)
    for j in range(m):
        s = 0.0
        for i in range(n):
            s += x[i] * A[i, j]
        vals[j] = s
        if s < best:
            best = s
    for j in range(m):
        if vals[j] <= best + tol:
            return j
    return m - 1


# ---------------------------------------------------------------------------
# value types

def _as_float_matrix(entries):
    try:
        arr = np.array(entries, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidMatrix(f"matrix entries are not numeric: {exc}") from None
    if arr.ndim != 2:
        raise InvalidMatrix(f"expected a 2-d matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class GameMatrix:
    """Payoff matrix for the maximizing row player.

    ``entries`` live in [-1, 1]; ``rescaled`` is the [0, 1] twin the learners
    and the noise model operate on. ``unit=True`` declares that the entries
    are already on the [0, 1] scale, in which case the two coincide.
    """

    entries: np.ndarray
    unit: bool = False
    rescaled: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        arr = _as_float_matrix(self.entries)
        n, m = arr.shape
        if n < 2 or m < 2:
            raise InvalidMatrix(f"need at least 2 rows and 2 columns, got {n}x{m}")
        if not np.all(np.isfinite(arr)):
            raise InvalidMatrix("matrix has non-finite entries")
        lo = 0.0 if self.unit else -1.0
        if arr.min() < lo or arr.max() > 1.0:
            raise InvalidMatrix(f"entries must lie in [{lo:g}, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)
        scaled = arr.copy() if self.unit else (arr + 1.0) / 2.0
        scaled.setflags(write=False)
        object.__setattr__(self, "rescaled", scaled)

    @classmethod
    def from_unit(cls, entries):
        return cls(entries, unit=True)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.entries.shape

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def m(self) -> int:
        return self.entries.shape[1]

    def __eq__(self, other):
        if not isinstance(other, GameMatrix):
            return NotImplemented
        return self.unit == other.unit and np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash((self.unit, self.entries.tobytes(), self.entries.shape))


def make_strategy(weights, size: Optional[int] = None, tol: float = 1e-9) -> np.ndarray:
    """Validate a probability vector and renormalize it exactly onto the simplex."""
    w = np.array(weights, dtype=float).ravel()
    if size is not None and w.shape[0] != size:
        raise ValueError(f"strategy has {w.shape[0]} weights, expected {size}")
    if not np.all(np.isfinite(w)):
        raise ValueError("strategy has non-finite weights")
    if w.min() < -tol:
        raise ValueError("strategy has negative weights")
    total = w.sum()
    if abs(total - 1.0) > tol:
        raise ValueError(f"strategy weights sum to {total!r}, not 1")
    w = np.clip(w, 0.0, None)
    return w / w.sum()


@dataclass(frozen=True, eq=False)
class NashSolution:
    x_star: np.ndarray
    y_star: np.ndarray
    value: float
    support_x: Tuple[int, ...]
    support_y: Tuple[int, ...]
    unique: bool = True
    is_psne: bool = False
    psne_cell: Optional[Tuple[int, int]] = None
    witness: Optional[Tuple[np.ndarray, np.ndarray]] = None


@dataclass(frozen=True)
class GapStatistics:
    delta_min: float
    D: float
    delta_g1: float
    delta_g2: float
    delta_g: float
    combinatorial_factor: float
    det_M: float
    det_MT: float
    det_cols: Tuple[float, ...]
    det_rows: Tuple[float, ...]
    support_x: Tuple[int, ...]
    support_y: Tuple[int, ...]


@dataclass(frozen=True)
class CramerSystem:
    M: np.ndarray
    b: np.ndarray
    det_M: float
    det_columns: np.ndarray

    def solution(self) -> np.ndarray:
        if abs(self.det_M) < DET_TOL:
            raise DegenerateMatrix("det(M_A) vanishes")
        return self.det_columns / self.det_M

    def residual(self) -> float:
        return float(np.max(np.abs(self.M @ self.solution() - self.b)))


def _matrix_of(game) -> np.ndarray:
    if isinstance(game, GameMatrix):
        return np.asarray(game.entries, dtype=float)
    return _as_float_matrix(game)


def cramer_system(matrix) -> CramerSystem:
    """M_A, b and the determinant family det(M_{A,l}) for a square matrix."""
    B = np.ascontiguousarray(_matrix_of(matrix))
    if B.shape[0] != B.shape[1]:
        raise InvalidMatrix("Cramer construction needs a square matrix")
    dets = np.empty(B.shape[0])
    d = cramer_dets(B, dets)
    b = np.zeros(B.shape[0])
    b[-1] = 1.0
    return CramerSystem(M=cramer_matrix(B), b=b, det_M=float(d), det_columns=dets)


def cramer_column_matrix(matrix, col: int) -> np.ndarray:
    """M_{A,col}: M_A with column ``col`` replaced by (0, ..., 0, 1)."""
    M = cramer_matrix(np.ascontiguousarray(_matrix_of(matrix)))
    M[:, col] = 0.0
    M[-1, col] = 1.0
    return M


# ---------------------------------------------------------------------------
# solvers

def _support(v) -> Tuple[int, ...]:
    return tuple(int(i) for i in np.flatnonzero(v > 0.0))


def _solution(x, y, value, unique=True, witness=None) -> NashSolution:
    sx, sy = _support(x), _support(y)
    psne = len(sx) == 1 and len(sy) == 1
    return NashSolution(
        x_star=x, y_star=y, value=float(value), support_x=sx, support_y=sy,
        unique=unique, is_psne=psne, psne_cell=(sx[0], sy[0]) if psne else None,
        witness=witness,
    )


def solve_2x2_closed_form(matrix) -> Optional[NashSolution]:
    """Closed form for 2x2 games; None if there is no strict saddle and no interior solution."""
    A = _matrix_of(matrix)
    if A.shape != (2, 2):
        raise InvalidMatrix("closed form needs a 2x2 matrix")
    x1, y1, v, kind = nash_2x2(A[0, 0], A[0, 1], A[1, 0], A[1, 1])
    if kind < 0:
        return None
    return _solution(np.array([x1, 1.0 - x1]), np.array([y1, 1.0 - y1]), v)


def solve_by_enumeration(matrix, allow_multiple: bool = False) -> NashSolution:
    """Support enumeration with uniqueness checking.

    With ``allow_multiple`` the first equilibrium in support order is
    returned and ``unique`` reports whether it is the only one.
    """
    A = np.ascontiguousarray(_matrix_of(matrix))
    n, m = A.shape
    if n > MAX_DIM or m > MAX_DIM:
        raise InvalidMatrix(f"solver supports at most {MAX_DIM}x{MAX_DIM} matrices")
    cap = 2
    xs, ys = np.empty((cap, n)), np.empty((cap, m))
    vals, slacks = np.empty(cap), np.empty(cap)
    count = enumerate_equilibria(A, xs, ys, vals, slacks, DET_TOL, EXCLUSION_TOL)
    if count == 0:
        raise DegenerateMatrix("all candidate determinants are below 1e-12")
    x, y, v = xs[0].copy(), ys[0].copy(), vals[0]
    if count > 1:
        witness = (xs[1].copy(), ys[1].copy())
        if not allow_multiple:
            raise NonUniqueEquilibrium("game has at least two equilibria", witness)
        return _solution(x, y, v, unique=False, witness=witness)
    if slacks[0] <= TIE_TOL:
        # a zero-slack excluded strategy means the equilibrium set is not a point
        if not allow_multiple:
            raise NonUniqueEquilibrium("an excluded strategy ties with the game value")
        return _solution(x, y, v, unique=False)
    return _solution(x, y, v)


def solve(game) -> NashSolution:
    """Unique equilibrium of ``game`` (a GameMatrix or a raw matrix)."""
    A = _matrix_of(game)
    n, m = A.shape
    if n == 2 and m == 2:
        sol = solve_2x2_closed_form(A)
        if sol is not None:
            return sol
    elif n == m and n <= MAX_DIM:
        sol = _solve_full_support(A)
        if sol is not None:
            return sol
    return solve_by_enumeration(A)


def _solve_full_support(A) -> Optional[NashSolution]:
    col = cramer_system(A)
    row = cramer_system(A.T)
    if abs(col.det_M) < DET_TOL or abs(row.det_M) < DET_TOL:
        return None
    y = col.det_columns / col.det_M
    x = row.det_columns / row.det_M
    if y.min() <= 0.0 or x.min() <= 0.0:
        return None
    return _solution(x, y, float(x @ A @ y))


def best_response_column(game, x) -> int:
    A = _matrix_of(game)
    xv = make_strategy(x, size=A.shape[0])
    return int(best_response_index(np.ascontiguousarray(A), xv, TIE_TOL))


def best_response_row(game, y) -> int:
    """Row maximizing e_i^T A y; lowest index among near-ties."""
    A = _matrix_of(game)
    yv = make_strategy(y, size=A.shape[1])
    payoffs = A @ yv
    return int(np.flatnonzero(payoffs >= payoffs.max() - TIE_TOL)[0])


def game_value(game) -> float:
    return solve(game).value


# ---------------------------------------------------------------------------
# instance constants

def _has_duplicate_lines(A) -> bool:
    for M in (A, A.T):
        for i in range(M.shape[0]):
            for j in range(i + 1, M.shape[0]):
                if np.array_equal(M[i], M[j]):
                    return True
    return False


def gap_statistics(game) -> GapStatistics:
    """Instance constants on the [0, 1] scale the algorithms run on."""
    if isinstance(game, GameMatrix):
        R = np.asarray(game.rescaled, dtype=float)
    else:
        R = _matrix_of(game)
    n, m = R.shape
    if _has_duplicate_lines(R):
        raise DegenerateMatrix("matrix has two identical rows or columns")
    sol = solve(R)
    S, C = list(sol.support_x), list(sol.support_y)
    k = len(S)
    if n == 2 and m == 2:
        B = R
    else:
        B = R if (k == n == m) else R[np.ix_(S, C)]
    col = cramer_system(B)
    row = cramer_system(B.T)
    if B.shape == (2, 2):
        a, b, c, d = B[0, 0], B[0, 1], B[1, 0], B[1, 1]
        delta_min = min(abs(a - b), abs(c - d), abs(a - c), abs(b - d))
        D = a - b - c + d
    else:
        delta_min = float(min(np.abs(col.det_columns).min(), np.abs(row.det_columns).min()))
        D = row.det_M
    if delta_min <= 0.0:
        raise DegenerateMatrix("minimum gap is zero")
    x, y, v = sol.x_star, sol.y_star, sol.value
    out_rows = [i for i in range(n) if i not in S]
    out_cols = [j for j in range(m) if j not in C]
    g1 = inf if not out_rows else float(v - max((R @ y)[out_rows]))
    g2 = inf if not out_cols else float(min((x @ R)[out_cols]) - v)
    return GapStatistics(
        delta_min=float(delta_min), D=float(D), delta_g1=g1, delta_g2=g2,
        delta_g=min(g1, g2), combinatorial_factor=float(k * k * factorial(k)),
        det_M=float(col.det_M), det_MT=float(row.det_M),
        det_cols=tuple(float(t) for t in col.det_columns),
        det_rows=tuple(float(t) for t in row.det_columns),
        support_x=sol.support_x, support_y=sol.support_y,
    )


def swap_identity_check(sequence: Sequence[int]) -> Tuple[int, int]:
    """Both sides of the prefix-count swap identity for a sequence over {1, 2}."""
    seq = list(sequence)
    if not seq:
        raise ValueError("sequence must be nonempty")
    ones = twos = 0
    lhs = 0
    for label in seq:
        if label == 1:
            ones += 1
            lhs += twos
        elif label == 2:
            twos += 1
            lhs += ones
        else:
            raise ValueError(f"labels must be 1 or 2, got {label!r}")
    return lhs, ones * twos


MatrixLike = Union[GameMatrix, np.ndarray, Sequence[Sequence[float]]]
