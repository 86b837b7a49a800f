"""Acceptance suites, one per criterion, shared by ``zsregret verify`` and the tests.

Each suite returns a :class:`CriterionResult`; :func:`run` runs a selection
and prints one line per criterion. Suites that play matches hand their
records to the ledger suite through a :class:`Context`, so the ledger
check covers every match those suites played.
"""
import filecmp
import math
import tempfile
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from ._accel import njit, backend
from .adversaries import myopic_bandit_instance, ucb_killer_instance
from .config import bundled
from .environment import DEFAULT_SEED, NoiseModel, RandomStream
from .errors import DegenerateMatrix, NonUniqueEquilibrium
from .fastpath import identify_support
from .game_core import (GameMatrix, best_response_index, gap_statistics, solve,
                        solve_2x2_closed_form, solve_by_enumeration, swap_identity_check)
from .harness import MatchSpec, SweepResult, SweepSpec, horizon_sweep, monte_carlo, write_aggregate_csv, write_raw_csv
from .subroutine import Subroutine, SubroutineConfig, anchor_margin, sub_drift, sub_strategy

FIG_MATRIX = np.array([[2.0 / 3.0, 0.0], [0.0, 1.0 / 3.0]])
ID_MATRIX = np.array([[0.9, -0.9, 0.9], [-0.9, 0.9, 0.9], [-0.9, -0.9, 0.0]])
LEDGER_RTOL = 1e-12


@dataclass
class CriterionResult:
    key: str
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0
    metrics: dict = field(default_factory=dict)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number}. {self.title} ({self.key}): {self.detail} [{self.seconds:.1f}s]"

    def as_dict(self) -> dict:
        return {"key": self.key, "number": self.number, "title": self.title, "passed": self.passed,
                "detail": self.detail, "seconds": round(self.seconds, 3), "metrics": self.metrics}


@dataclass
class Context:
    seed: int = DEFAULT_SEED
    threads: Optional[int] = None
    records: list = field(default_factory=list)
    scale: dict = field(default_factory=dict)

    def keep(self, records):
        self.records.extend(records)


def ledger_ok(record) -> bool:
    """external >= nash at every prefix up to float rounding of the running sums."""
    return record.min_gap >= -LEDGER_RTOL * max(1.0, record.horizon)


# ---------------------------------------------------------------------------
# 1. solver

def suite_solver(ctx: Context) -> CriterionResult:
    rng = np.random.default_rng(ctx.seed)
    worst = 0.0
    checked = 0
    while checked < 1000:
        A = rng.uniform(-1.0, 1.0, size=(2, 2))
        try:
            ref = solve_by_enumeration(A)
        except (NonUniqueEquilibrium, DegenerateMatrix):
            continue
        closed = solve_2x2_closed_form(A)
        if closed is None:
            worst = math.inf
            break
        worst = max(worst, float(np.abs(closed.x_star - ref.x_star).max()),
                    float(np.abs(closed.y_star - ref.y_star).max()), abs(closed.value - ref.value))
        checked += 1
    v_fig = solve(GameMatrix.from_unit(FIG_MATRIX)).value
    rps = np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]])
    v_rps = solve(GameMatrix(rps)).value
    err_fig = abs(v_fig - 2.0 / 9.0)
    err_rps = abs(v_rps)
    ok = worst <= 1e-12 and err_fig <= 1e-12 and err_rps <= 1e-12
    return CriterionResult("solver", 1, "solver correctness", ok,
                           f"{checked} random games, max disagreement {worst:.2e}; "
                           f"|V-2/9| = {err_fig:.1e}, |V_rps| = {err_rps:.1e}",
                           metrics={"max_disagreement": worst, "fig_value_error": err_fig,
                                    "rps_value_error": err_rps, "games": checked})


# ---------------------------------------------------------------------------
# 2. subroutine bound

@njit
def exhaustive_margin(x_prime, A, eta, r, T2, value, c1, c2):
    """Walk every column sequence of length T2 and return the largest
    regret minus bound over all prefixes, plus the number of leaves.

    The bound at depth d is c1 + c2 * d. Prefixes are evaluated once each:
    after the odometer advances position p, only depths p.. are recomputed.
    """
    n, m = A.shape
    deltas = np.empty((T2 + 1, n - 1))
    gains = np.zeros(T2 + 1)
    for i in range(n - 1):
        deltas[0, i] = -r
    seq = np.zeros(T2, dtype=np.int64)
    x = np.empty(n)
    worst = -np.inf
    leaves = 0
    start = 0
    while True:
        for k in range(start, T2):
            sub_strategy(x_prime, deltas[k], x)
            j = seq[k]
            g = 0.0
            for i in range(n):
                g += x[i] * A[i, j]
            gains[k + 1] = gains[k] + g
            for i in range(n - 1):
                deltas[k + 1, i] = deltas[k, i]
            sub_drift(deltas[k + 1], A, j, eta, r)
            margin = (k + 1) * value - gains[k + 1] - (c1 + c2 * (k + 1))
            if margin > worst:
                worst = margin
        leaves += 1
        p = T2 - 1
        while p >= 0 and seq[p] == m - 1:
            seq[p] = 0
            p -= 1
        if p < 0:
            break
        seq[p] += 1
        start = p
    return worst, leaves


def subroutine_bound(n: int, D1: float, T1: float, T2: float) -> float:
    return 6.0 * n / D1 + 7.0 * n * T2 / (D1 * T1)


def _play_subroutine(P, x_star, value, D1, T1, T2, columns):
    """Run the subroutine with A_hat = P; ``columns(x, t)`` picks j_t."""
    sub = Subroutine(SubroutineConfig(x_star, D1, T1, T2, P, "full"))
    total = 0.0
    worst = -math.inf
    for t in range(1, T2 + 1):
        x = sub.next_strategy()
        j = columns(x, t)
        total += float(x @ P[:, j])
        worst = max(worst, t * value - total - subroutine_bound(len(x), D1, T1, t))
        sub.observe(j, P)
    return worst


def subroutine_games():
    rps = (np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]]) + 1.0) / 2.0
    c = [0.9, 0.1, 0.6, 0.3]
    circ = np.array([[c[(j - i) % 4] for j in range(4)] for i in range(4)])
    skew = np.array([[0.8, 0.2, 0.4, 0.6], [0.3, 0.9, 0.5, 0.2],
                     [0.5, 0.4, 0.7, 0.1], [0.2, 0.6, 0.1, 0.9]])
    return {"diag2": FIG_MATRIX, "rps3": rps, "circulant4": circ, "skew4": skew}


def suite_subroutine(ctx: Context) -> CriterionResult:
    rng = np.random.default_rng(ctx.seed)
    games = subroutine_games()
    worst = -math.inf
    runs = 0
    leaves = 0
    exhaustive_T2 = ctx.scale.get("exhaustive_T2", 12)
    for name, P in games.items():
        sol = solve_by_enumeration(P)
        x_star, value = sol.x_star, sol.value
        n, m = P.shape
        margin = anchor_margin(x_star)
        for T1 in (1.0, 4.0, 100.0, 10000.0):
            tight = (n - 1) / (margin * math.sqrt(T1))
            for D1 in (tight, 2.0 * tight):
                eta, r = 1.0 / (D1 * T1), 1.0 / (D1 * math.sqrt(T1))
                if name != "skew4" and T1 <= 4.0:
                    # every column sequence up to the exhaustive length
                    T2 = exhaustive_T2 if m ** exhaustive_T2 <= 4 ** 12 else 8
                    w, c = exhaustive_margin(x_star, np.ascontiguousarray(P), eta, r, T2, value,
                                             6.0 * n / D1, 7.0 * n / (D1 * T1))
                    worst = max(worst, w)
                    leaves += int(c)
                    runs += 1
                T2 = int(ctx.scale.get("long_T2", 2000))
                br = lambda x, t: int(best_response_index(P, x, 1e-12))
                worst = max(worst, _play_subroutine(P, x_star, value, D1, T1, T2, br))
                runs += 1
                for _ in range(2):
                    seq = rng.integers(0, m, size=T2)
                    worst = max(worst, _play_subroutine(P, x_star, value, D1, T1, T2,
                                                        lambda x, t, s=seq: int(s[t - 1])))
                    runs += 1
    ok = worst <= 0.0
    return CriterionResult("subroutine-bound", 2, "subroutine regret bound", ok,
                           f"{runs} runs ({leaves} exhaustive sequences), "
                           f"max regret minus bound {worst:.4g} (must be <= 0)",
                           metrics={"max_excess": worst, "runs": runs, "sequences": leaves})


# ---------------------------------------------------------------------------
# 3. swap identity

def suite_swap(ctx: Context) -> CriterionResult:
    rng = np.random.default_rng(ctx.seed)
    bad = 0
    for _ in range(1000):
        L = int(rng.integers(1, 201))
        seq = rng.integers(1, 3, size=L)
        lhs, rhs = swap_identity_check(seq.tolist())
        bad += lhs != rhs
    return CriterionResult("swap-identity", 3, "swap identity", bad == 0,
                           f"{1000 - bad}/1000 sequences with lhs == rhs", metrics={"mismatches": bad})


# ---------------------------------------------------------------------------
# 4. figure at desk scale

def figure_spec(seed: int, trials: int = 32, horizons=None) -> SweepSpec:
    spec = bundled("paper_fig1").sweep_spec()
    spec.seed = seed
    spec.trials = trials
    if horizons is not None:
        spec.horizons = list(horizons)
    return spec


def figure_checks(result: SweepResult) -> Dict[str, bool]:
    T = result.horizons[-1]
    checks = {}
    for adv in ("hybrid", "best_response", "adaptive"):
        ours = result.mean("ours", adv, T)
        checks[f"a:{adv}"] = ours < result.mean("ucb", adv, T) and ours < result.mean("exp3", adv, T)
    s = {l: result.slopes[(l, "best_response")][-1] for l in ("ours", "ucb", "exp3")}
    checks["b:ours_slope"] = s["ours"] <= 0.35
    checks["b:ucb_slope"] = 0.35 <= s["ucb"] <= 0.65
    checks["b:exp3_slope"] = 0.35 <= s["exp3"] <= 0.65
    return checks


def suite_figure(ctx: Context, echo: Callable = print) -> CriterionResult:
    batches = int(ctx.scale.get("batches", 10))
    need = int(ctx.scale.get("batches_needed", 9))
    trials = int(ctx.scale.get("trials", 32))
    horizons = ctx.scale.get("horizons")
    passes = fails = 0
    metrics = {"batches": []}
    for b in range(batches):
        spec = figure_spec(ctx.seed + b, trials, horizons)
        result = horizon_sweep(spec, threads=ctx.threads)
        ctx.keep(result.records())
        checks = figure_checks(result)
        ok = all(checks.values())
        passes += ok
        fails += not ok
        T = result.horizons[-1]
        summary = {f"{l}/{a}": round(result.mean(l, a, T), 3)
                   for l in spec.learners for a in spec.adversaries}
        slopes = {l: round(result.slopes[(l, "best_response")][-1], 3) for l in spec.learners}
        metrics["batches"].append({"seed": spec.seed, "passed": ok, "checks": checks,
                                   "mean_at_T": summary, "br_final_slopes": slopes})
        echo(f"  batch {b} seed {spec.seed}: {'pass' if ok else 'fail'} "
             f"failed={[k for k, v in checks.items() if not v]} br slopes={slopes}")
        # stop once the batch count can no longer change the verdict
        if passes >= need or fails > batches - need:
            break
    ok = passes >= need
    return CriterionResult("figure", 4, "figure reproduction at desk scale", ok,
                           f"{passes} of {passes + fails} batches passed (need {need} of {batches})",
                           metrics=metrics)


# ---------------------------------------------------------------------------
# 5. UCB failure demo

def suite_ucb_failure(ctx: Context) -> CriterionResult:
    inst = ucb_killer_instance()
    game = inst.games[0]
    horizons = ctx.scale.get("killer_horizons", [10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6])
    trials = int(ctx.scale.get("killer_trials", 8))
    spec = SweepSpec(game, horizons, {"ucb": ("ucb", {}), "ours": ("ours", {"skip_exploration": True})},
                     {"ucb_killer": ("ucb_killer", {})}, trials, ctx.seed, NoiseModel("none"), "ucb_killer")
    result = horizon_sweep(spec, threads=ctx.threads)
    ctx.keep(result.records())
    ratios = [result.mean("ucb", "ucb_killer", T) / math.sqrt(T) for T in horizons]
    steps = [b / a for a, b in zip(ratios, ratios[1:])]
    ratio_ok = all(s >= 0.8 for s in steps)
    ours_slope = result.slopes[("ours", "ucb_killer")][-1]
    ok = ratio_ok and ours_slope <= 0.35
    return CriterionResult("ucb-failure", 5, "UCB failure demo", ok,
                           "UCB R/sqrt(T) = " + ", ".join(f"{r:.4f}" for r in ratios)
                           + " (steps " + ", ".join(f"{s:.2f}" for s in steps) + ", need >= 0.80);"
                           f" learner final slope {ours_slope:.3f} (need <= 0.35)",
                           metrics={"ucb_ratios": ratios, "ratio_steps": steps, "ours_slope": ours_slope,
                                    "ours_means": result.curve("ours", "ucb_killer")})


# ---------------------------------------------------------------------------
# 6. myopic bandit demo

def suite_myopic(ctx: Context) -> CriterionResult:
    T = int(ctx.scale.get("myopic_T", 10 ** 6))
    trials = int(ctx.scale.get("myopic_trials", 32))
    inst = myopic_bandit_instance(T)
    game = inst.games[0]
    spec = MatchSpec("exp3", "fixed", game, T, "myopic_bandit", NoiseModel("bernoulli"), ctx.seed,
                     adversary_params={"y": inst.strategies[0]})
    res = monte_carlo(spec, trials, threads=ctx.threads)
    ctx.keep(res.records)
    target = 0.003 * math.sqrt(T)
    ok = res.mean >= target
    return CriterionResult("myopic-bandit", 6, "myopic bandit demo", ok,
                           f"EXP3 mean Nash regret {res.mean:.3f} +- {res.stderr:.3f} at T={T} "
                           f"(need >= {target:.3f}; lower-bound constant 0.007 gives {0.007 * math.sqrt(T):.3f})",
                           metrics={"mean": res.mean, "stderr": res.stderr, "target": target})


# ---------------------------------------------------------------------------
# 7. submatrix identification

def suite_identification(ctx: Context) -> CriterionResult:
    game = GameMatrix(ID_MATRIX)
    T = int(ctx.scale.get("id_T", 10 ** 6))
    trials = int(ctx.scale.get("id_trials", 100))
    # brute-force oracle: unique equilibrium, supports {0,1} x {0,1}, strict gaps
    sol = solve_by_enumeration(game.entries)
    gaps = gap_statistics(game)
    truth = (sol.support_x, sol.support_y)
    instance_ok = truth == ((0, 1), (0, 1)) and gaps.delta_g > 0.0
    t0, rows, cols = identify_support(game, T, NoiseModel("none"), RandomStream(ctx.seed, 0))
    exact_ok = (rows, cols) == truth
    hits = 0
    rounds = []
    for k in range(trials):
        sid = zlib.crc32(f"identification|{k}".encode())
        t, rows, cols = identify_support(game, T, NoiseModel("bernoulli"), RandomStream(ctx.seed, sid))
        if t and (rows, cols) == truth:
            hits += 1
            rounds.append(t)
    ok = instance_ok and exact_ok and hits >= math.ceil(0.95 * trials)
    return CriterionResult("identification", 7, "submatrix identification", ok,
                           f"instance gap {gaps.delta_g:.3f}; noiseless returns {truth} at t={t0}: "
                           f"{exact_ok}; Bernoulli {hits}/{trials} correct within T={T}",
                           metrics={"noiseless_round": t0, "hits": hits, "trials": trials,
                                    "median_round": float(np.median(rounds)) if rounds else None})


# ---------------------------------------------------------------------------
# 8. ledger invariants and determinism

def suite_ledger(ctx: Context) -> CriterionResult:
    records = list(ctx.records)
    game = GameMatrix.from_unit(FIG_MATRIX)
    # always add a cross-learner, cross-adversary set so the check is never empty
    learners = {"ours": ("ours", {"skip_exploration": True}), "ours_full": ("ours", {}),
                "ucb": ("ucb", {}), "exp3": ("exp3", {}), "fixed": ("fixed", {"x": [1.0, 0.0]})}
    adversaries = {k: (k, {}) for k in ("nash", "best_response", "hybrid", "adaptive", "ucb_killer")}
    spec = SweepSpec(game, [10, 100, 1000, 10000], learners, adversaries, 2, ctx.seed,
                     NoiseModel("bernoulli"), "fig1")
    result = horizon_sweep(spec, threads=ctx.threads)
    records.extend(result.records())
    bad = [r for r in records if not ledger_ok(r)]
    worst = min(r.min_gap / max(1.0, r.horizon) for r in records)
    # determinism: the same sweep twice, serial and pooled, must give identical bytes
    small = SweepSpec(game, [10, 100, 1000], learners, {"hybrid": ("hybrid", {}),
                      "best_response": ("best_response", {})}, 3, ctx.seed, NoiseModel("bernoulli"), "fig1")
    with tempfile.TemporaryDirectory() as tmp:
        paths = []
        for run, threads in enumerate((1, ctx.threads)):
            res = horizon_sweep(small, threads=threads)
            raw = Path(tmp) / f"raw{run}.csv"
            agg = Path(tmp) / f"agg{run}.csv"
            write_raw_csv(res.records(), raw)
            write_aggregate_csv(res, agg)
            paths.append((raw, agg))
        same = all(filecmp.cmp(a, b, shallow=False) for a, b in zip(*paths))
    ok = not bad and same
    return CriterionResult("ledger", 8, "ledger invariants and determinism", ok,
                           f"{len(records)} matches, {len(bad)} with external < nash at some prefix "
                           f"(worst per-round gap {worst:.2e}); repeated sweeps byte-identical: {same}",
                           metrics={"matches": len(records), "violations": len(bad), "identical": same})


# ---------------------------------------------------------------------------

SUITES = {
    "solver": suite_solver,
    "subroutine-bound": suite_subroutine,
    "swap-identity": suite_swap,
    "figure": suite_figure,
    "ucb-failure": suite_ucb_failure,
    "myopic-bandit": suite_myopic,
    "identification": suite_identification,
    "ledger": suite_ledger,
}


def run_suite(key: str, ctx: Context, echo: Callable = print) -> CriterionResult:
    if key not in SUITES:
        raise KeyError(f"unknown suite {key!r}; expected one of {list(SUITES)}")
    fn = SUITES[key]
    start = time.perf_counter()
    res = fn(ctx, echo) if key == "figure" else fn(ctx)
    res.seconds = time.perf_counter() - start
    return res


def run(only: Optional[List[str]] = None, seed: int = DEFAULT_SEED, threads: Optional[int] = None,
        scale: Optional[dict] = None, echo: Callable = print) -> List[CriterionResult]:
    keys = list(SUITES) if not only else list(only)
    for k in keys:
        if k not in SUITES:
            raise KeyError(f"unknown suite {k!r}; expected one of {list(SUITES)}")
    # the ledger suite checks the matches of every suite run before it
    keys.sort(key=list(SUITES).index)
    ctx = Context(seed=seed, threads=threads, scale=dict(scale or {}))
    out = []
    for k in keys:
        res = run_suite(k, ctx, echo)
        echo(res.line())
        out.append(res)
    return out


def summary(results: List[CriterionResult], seed: int) -> dict:
    return {"seed": seed, "backend": backend(), "passed": all(r.passed for r in results),
            "criteria": [r.as_dict() for r in results]}
