"""Compiled match loops for the 2x2 bandit experiments and full-feedback identification.

These kernels reproduce the generic loop in :mod:`zsregret.harness` round
for round (same strategies, same random draws in the same order) without
the per-round Python overhead, which is what makes horizons up to 10^6
practical.
"""
import numpy as np

from ._accel import njit
from . import bandit2x2 as b2
from .adversaries import adversary_column
from .baselines import exp3_distribution, exp3_update, ucb_strategy
from .environment import noisy_entry, noisy_matrix, sample_index
from .full_info import identification_log_term, identify_step

OURS = 0
OURS_SKIP = 1
UCB = 2
EXP3 = 3
FIXED_ROW = 4

LEARNER_CODES = {"ours": OURS, "ours_skip": OURS_SKIP, "ucb": UCB, "exp3": EXP3, "fixed": FIXED_ROW}

# layout of the result vector
R_NASH = 0
R_EXT = 1
R_MIN_GAP = 2
R_REALIZED = 3
R_EXPECTED = 4
R_STAGE = 5
R_REASON = 6
R_INVOCATIONS = 7
R_SAFEGUARDS = 8
NR = 9


@njit
def compensated_add(total, comp, v):
    """Neumaier summation step; the running sum is total + comp."""
    t = total + v
    if abs(total) >= abs(v):
        comp += (total - t) + v
    else:
        comp += (v - t) + total
    return t, comp


@njit
def ledger_step(A, x, y, totals, comp):
    """Add A y to the per-row totals (compensated) and return x^T A y."""
    n, m = A.shape
    g = 0.0
    for a in range(n):
        s = 0.0
        for b in range(m):
            s += A[a, b] * y[b]
        totals[a], comp[a] = compensated_add(totals[a], comp[a], s)
        g += x[a] * s
    return g


@njit
def best_total(totals, comp):
    best = totals[0] + comp[0]
    for a in range(1, totals.shape[0]):
        best = max(best, totals[a] + comp[a])
    return best


@njit(nogil=True)
def run_bandit_match(learner, adv, A, P, value, x_star, y_star, y_fixed, fraction, threshold,
                     x_fixed, horizon, noise_code, rng, out):
    """Play ``horizon`` rounds of a 2x2 bandit match and fill ``out`` (see R_*)."""
    n, m = P.shape
    T = horizon
    x = np.empty(n)
    y = np.empty(m)
    # learner state
    f = np.zeros(b2.NF)
    iv = np.zeros(b2.NI, dtype=np.int64)
    counts = np.zeros((n, m), dtype=np.int64)
    sums = np.zeros((n, m))
    scores = np.zeros(n)
    if learner == OURS or learner == OURS_SKIP:
        b2.init_state(f, iv, T, learner == OURS_SKIP)
    ucb_log = np.log(2.0 * float(T) * float(T) * n * m)
    eta = np.sqrt(np.log(n) / (n * float(T)))
    # ledgers
    row_totals = np.zeros(n)
    row_comp = np.zeros(n)
    gained = 0.0
    gained_comp = 0.0
    realized = 0.0
    min_gap = np.inf
    nash = 0.0
    ext = 0.0
    for t in range(T):
        if learner == OURS or learner == OURS_SKIP:
            b2.strategy(f, iv, x)
        elif learner == UCB:
            ucb_strategy(counts, sums, t, ucb_log, x)
        elif learner == EXP3:
            exp3_distribution(scores, eta, x)
        else:
            x[:] = x_fixed
        adversary_column(adv, t + 1, T, P, x, x_star, y_star, y_fixed, fraction, threshold, y)
        i = sample_index(x, rng.random())
        j = sample_index(y, rng.random())
        reward = noisy_entry(P[i, j], noise_code, rng)
        realized += reward
        g = ledger_step(A, x, y, row_totals, row_comp)
        gained, gained_comp = compensated_add(gained, gained_comp, g)
        nash = (t + 1) * value - (gained + gained_comp)
        ext = best_total(row_totals, row_comp) - (gained + gained_comp)
        if ext - nash < min_gap:
            min_gap = ext - nash
        if learner == OURS or learner == OURS_SKIP:
            b2.update(f, iv, counts, sums, i, j, reward)
        elif learner == UCB:
            counts[i, j] += 1
            sums[i, j] += reward
        elif learner == EXP3:
            exp3_update(scores, x, i, reward)
    out[R_NASH] = nash
    out[R_EXT] = ext
    out[R_MIN_GAP] = min_gap
    out[R_REALIZED] = realized
    out[R_EXPECTED] = gained + gained_comp
    out[R_STAGE] = iv[b2.I_STAGE]
    out[R_REASON] = iv[b2.I_REASON]
    out[R_INVOCATIONS] = iv[b2.I_INVOCATIONS]
    out[R_SAFEGUARDS] = iv[b2.I_SAFEGUARDS]


@njit(nogil=True)
def run_identification(P, horizon, log_term, noise_code, rng, rows_out, cols_out):
    """Full-feedback identification phase until the return test passes.

    Returns (t, k) with t the round of return (0 if it never happened) and
    the support written to rows_out[:k], cols_out[:k].
    """
    n, m = P.shape
    sums = np.zeros((n, m))
    draw = np.empty((n, m))
    Abar = np.empty((n, m))
    x = np.full(n, 1.0 / n)
    y = np.full(m, 1.0 / m)
    for t in range(1, horizon + 1):
        # the column is irrelevant to identification but the draw keeps streams aligned
        sample_index(x, rng.random())
        rng.random()
        noisy_matrix(P, noise_code, rng, draw)
        for a in range(n):
            for b in range(m):
                sums[a, b] += draw[a, b]
                Abar[a, b] = sums[a, b] / t
        k = identify_step(Abar, t, log_term, x, y, rows_out, cols_out)
        if k > 0:
            return t, k
    return 0, 0


def bandit_match(learner: str, adversary, game, horizon: int, noise, stream, x_fixed=None):
    """Run one compiled 2x2 match; returns the result vector."""
    from .game_core import solve

    sol = solve(game)
    code, x_star, y_star, y_fixed, frac, thr = adversary.kernel_args()
    xf = np.asarray(x_fixed if x_fixed is not None else sol.x_star, dtype=float)
    out = np.zeros(NR)
    run_bandit_match(LEARNER_CODES[learner], code, np.ascontiguousarray(game.entries),
                     np.ascontiguousarray(game.rescaled), float(sol.value), x_star, y_star,
                     y_fixed, frac, thr, xf, int(horizon), noise.code, stream.generator(), out)
    return out


def identify_support(game, horizon: int, noise, stream):
    """Run identification on ``game``; returns (round, rows, cols) or (0, None, None)."""
    n, m = game.shape
    rows = np.zeros(min(n, m), dtype=np.int64)
    cols = np.zeros(min(n, m), dtype=np.int64)
    t, k = run_identification(np.ascontiguousarray(game.rescaled), int(horizon),
                              identification_log_term(n, m, horizon), noise.code,
                              stream.generator(), rows, cols)
    if t == 0:
        return 0, None, None
    return int(t), tuple(int(i) for i in rows[:k]), tuple(int(j) for j in cols[:k])
