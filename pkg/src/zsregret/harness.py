"""Match loop, regret ledgers, Monte Carlo aggregation and horizon sweeps.

Ledgers are kept on the game's native entries against expected payoffs:
``nash_regret = t V* - sum_s x_s^T A y_s`` and
``external_regret = max_i sum_s (A y_s)_i - sum_s x_s^T A y_s``.
Bandit 2x2 matches without a trace run through the compiled loop in
:mod:`zsregret.fastpath`; everything else goes through :func:`run_match`.
Both consume the random stream identically.
"""
import csv
import json
import math
import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .adversaries import Adversary
from .bandit2x2 import STAGE_NAMES, REASON_NAMES, Bandit2x2Learner
from .baselines import Exp3Learner, FixedLearner, UcbLearner
from .environment import DEFAULT_SEED, Environment, NoiseModel, RandomStream
from .errors import GameError
from .fastpath import (LEARNER_CODES, R_EXPECTED, R_EXT, R_INVOCATIONS, R_MIN_GAP, R_NASH,
                       R_REALIZED, R_REASON, R_SAFEGUARDS, R_STAGE, bandit_match, best_total,
                       compensated_add, ledger_step)
from .full_info import FullInfoLearner
from .game_core import GameMatrix, solve

LEARNERS = ("ours", "ours_skip", "ucb", "exp3", "fixed", "full_info")


@dataclass
class RoundLog:
    """Per-round trajectory of one match (only kept when tracing)."""

    x: np.ndarray
    y: np.ndarray
    i: np.ndarray
    j: np.ndarray
    reward: np.ndarray
    expected: np.ndarray

    def __len__(self):
        return int(self.j.shape[0])

    def rows(self):
        for t in range(len(self)):
            yield {"t": t + 1, "x": self.x[t].tolist(), "i": int(self.i[t]), "j": int(self.j[t]),
                   "reward": float(self.reward[t]), "expected": float(self.expected[t])}


@dataclass
class MatchRecord:
    learner: str
    adversary: str
    matrix_id: str
    horizon: int
    trial: int
    seed: int
    rounds: int
    nash_regret: float
    external_regret: float
    min_gap: float
    realized_total: float
    expected_total: float
    value: float
    events: list = field(default_factory=list)
    log: Optional[RoundLog] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


# ---------------------------------------------------------------------------
# learners and single matches

def make_learner(name: str, game: GameMatrix, horizon: int, params: Optional[dict] = None):
    params = dict(params or {})
    n, m = game.shape
    if name in ("ours", "ours_skip"):
        skip = bool(params.pop("skip_exploration", name == "ours_skip"))
        learner = Bandit2x2Learner(horizon, skip_exploration=skip)
    elif name == "ucb":
        learner = UcbLearner(horizon, n, m)
    elif name == "exp3":
        learner = Exp3Learner(horizon, n)
    elif name == "fixed":
        x = params.pop("x", None)
        learner = FixedLearner(solve(game).x_star if x is None else x)
    elif name == "full_info":
        learner = FullInfoLearner(horizon, n, m)
    else:
        raise ValueError(f"unknown learner {name!r}; expected one of {LEARNERS}")
    if params:
        raise ValueError(f"unused parameters for learner {name!r}: {sorted(params)}")
    return learner


def _check_distribution(p, size, who):
    if p.shape != (size,) or not np.all(p >= -1e-12) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"{who} strategy {p.tolist()} is not a distribution over {size} actions")


def run_match(learner, adversary, game: GameMatrix, noise: NoiseModel, horizon: int,
              stream: RandomStream, trace: bool = False, labels: Optional[dict] = None) -> MatchRecord:
    """Play ``horizon`` rounds with the generic loop.

    A learner or adversary error stops the match; the record then carries
    the ledgers up to the last completed round and ``error`` describes what
    went wrong.
    """
    T = int(horizon)
    n, m = game.shape
    A = np.ascontiguousarray(game.entries)
    value = float(solve(game).value)
    env = Environment(game, noise, stream)
    full = getattr(learner, "feedback", "bandit") == "full"
    totals = np.zeros(n)
    comp = np.zeros(n)
    gained = 0.0
    gained_comp = 0.0
    realized = 0.0
    nash = 0.0
    ext = 0.0
    min_gap = math.inf
    log = None
    if trace:
        log = RoundLog(np.zeros((T, n)), np.zeros((T, m)), np.zeros(T, dtype=np.int64),
                       np.zeros(T, dtype=np.int64), np.zeros(T), np.zeros(T))
    error = None
    done = 0
    for t in range(1, T + 1):
        try:
            x = np.asarray(learner.next_strategy(), dtype=float)
            _check_distribution(x, n, "row")
            y = np.asarray(adversary.next_column_strategy(t, T, x), dtype=float)
            _check_distribution(y, m, "column")
            i, j = env.sample_actions(x, y)
            if full:
                feedback = env.draw_full()
                reward = float(feedback[i, j])
            else:
                reward = env.draw_entry(i, j)
                feedback = reward
        except (GameError, ValueError) as exc:
            error = f"round {t}: {type(exc).__name__}: {exc}"
            break
        g = ledger_step(A, x, y, totals, comp)
        gained, gained_comp = compensated_add(gained, gained_comp, g)
        realized += reward
        nash = t * value - (gained + gained_comp)
        ext = best_total(totals, comp) - (gained + gained_comp)
        min_gap = min(min_gap, ext - nash)
        if log is not None:
            log.x[t - 1] = x
            log.y[t - 1] = y
            log.i[t - 1] = i
            log.j[t - 1] = j
            log.reward[t - 1] = reward
            log.expected[t - 1] = g
        done = t
        try:
            learner.observe(i, j, feedback)
        except (GameError, ValueError) as exc:
            error = f"round {t}: {type(exc).__name__}: {exc}"
            break
    if log is not None and done < T:
        log = RoundLog(log.x[:done], log.y[:done], log.i[:done], log.j[:done],
                       log.reward[:done], log.expected[:done])
    labels = labels or {}
    return MatchRecord(
        learner=labels.get("learner", getattr(learner, "name", type(learner).__name__)),
        adversary=labels.get("adversary", getattr(adversary, "kind", type(adversary).__name__)),
        matrix_id=labels.get("matrix_id", "custom"), horizon=T, trial=labels.get("trial", 0),
        seed=stream.seed_value(), rounds=done, nash_regret=nash, external_regret=ext,
        min_gap=min_gap, realized_total=realized, expected_total=gained + gained_comp, value=value,
        events=list(getattr(learner, "events", [])), log=log, error=error)


# ---------------------------------------------------------------------------
# specs, streams and Monte Carlo

@dataclass
class MatchSpec:
    """Everything needed to replay one (learner, adversary, game, T) cell."""

    learner: str
    adversary: str
    game: GameMatrix
    horizon: int
    matrix_id: str = "custom"
    noise: NoiseModel = field(default_factory=NoiseModel)
    seed: int = DEFAULT_SEED
    learner_kind: Optional[str] = None
    learner_params: dict = field(default_factory=dict)
    adversary_kind: Optional[str] = None
    adversary_params: dict = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return self.learner_kind or self.learner

    @property
    def adv_kind(self) -> str:
        return self.adversary_kind or self.adversary


def stream_id(learner: str, adversary: str, matrix_id: str, horizon: int, trial: int) -> int:
    """Stable stream id for one trial; independent of run order and thread count."""
    return zlib.crc32(f"{learner}|{adversary}|{matrix_id}|{int(horizon)}|{int(trial)}".encode())


def spec_stream(spec: MatchSpec, trial: int) -> RandomStream:
    return RandomStream(spec.seed, stream_id(spec.learner, spec.adversary, spec.matrix_id,
                                             spec.horizon, trial))


def _fast_code(spec: MatchSpec):
    if spec.game.shape != (2, 2) or spec.kind not in LEARNER_CODES:
        return None
    kind = spec.kind
    params = dict(spec.learner_params)
    if kind == "ours" and params.pop("skip_exploration", False):
        kind = "ours_skip"
    elif kind == "ours_skip":
        params.pop("skip_exploration", None)
    x_fixed = params.pop("x", None) if kind == "fixed" else None
    if params:
        return None
    return kind, x_fixed


def play_trial(spec: MatchSpec, trial: int, trace: bool = False, fast: bool = True) -> MatchRecord:
    """One trial of ``spec`` on its own stream."""
    stream = spec_stream(spec, trial)
    adversary = Adversary(spec.adv_kind, spec.game, **spec.adversary_params)
    labels = {"learner": spec.learner, "adversary": spec.adversary,
              "matrix_id": spec.matrix_id, "trial": trial}
    code = _fast_code(spec) if fast and not trace else None
    if code is None:
        learner = make_learner(spec.kind, spec.game, spec.horizon, spec.learner_params)
        return run_match(learner, adversary, spec.game, spec.noise, spec.horizon, stream,
                         trace=trace, labels=labels)
    kind, x_fixed = code
    out = bandit_match(kind, adversary, spec.game, spec.horizon, spec.noise, stream, x_fixed)
    events = []
    if kind in ("ours", "ours_skip"):
        events.append({"t": spec.horizon, "phase": STAGE_NAMES[int(out[R_STAGE])],
                       "reason": REASON_NAMES[int(out[R_REASON])],
                       "invocations": int(out[R_INVOCATIONS]),
                       "safeguards": int(out[R_SAFEGUARDS])})
    return MatchRecord(spec.learner, spec.adversary, spec.matrix_id, spec.horizon, trial,
                       stream.seed_value(), spec.horizon, float(out[R_NASH]), float(out[R_EXT]),
                       float(out[R_MIN_GAP]), float(out[R_REALIZED]), float(out[R_EXPECTED]),
                       float(solve(spec.game).value), events)


@dataclass
class Aggregate:
    mean: float
    stderr: float
    trials: int


def aggregate(values: Sequence[float]) -> Aggregate:
    """Mean and standard error; exactly rounded sums make it order-insensitive."""
    v = [float(a) for a in values]
    N = len(v)
    if N == 0:
        raise ValueError("nothing to aggregate")
    mean = math.fsum(v) / N
    if N == 1:
        return Aggregate(mean, 0.0, 1)
    var = math.fsum((a - mean) ** 2 for a in v) / (N - 1)
    return Aggregate(mean, math.sqrt(var) / math.sqrt(N), N)


@dataclass
class MonteCarloResult:
    spec: MatchSpec
    records: List[MatchRecord]
    nash: Aggregate
    external: Aggregate

    @property
    def mean(self) -> float:
        return self.nash.mean

    @property
    def stderr(self) -> float:
        return self.nash.stderr


def _run_jobs(jobs, threads: Optional[int], trace: bool = False):
    """Run (spec, trial) jobs; results come back in job order."""
    if threads == 1 or len(jobs) <= 1:
        return [play_trial(s, k, trace) for s, k in jobs]
    workers = threads or os.cpu_count() or 1
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: play_trial(job[0], job[1], trace), jobs))


def monte_carlo(spec: MatchSpec, N: int, threads: Optional[int] = None,
                trace: bool = False) -> MonteCarloResult:
    if N < 1:
        raise ValueError("need at least one trial")
    records = _run_jobs([(spec, k) for k in range(N)], threads, trace)
    return _summarize(spec, records)


def _summarize(spec, records):
    records = sorted(records, key=lambda r: r.trial)
    return MonteCarloResult(spec, records, aggregate([r.nash_regret for r in records]),
                            aggregate([r.external_regret for r in records]))


# ---------------------------------------------------------------------------
# horizon sweeps

def loglog_slopes(horizons: Sequence[float], values: Sequence[float]) -> List[float]:
    """Local slopes between consecutive horizons (nan where a value is not positive)."""
    out = []
    for k in range(len(horizons) - 1):
        r0, r1 = float(values[k]), float(values[k + 1])
        if r0 <= 0.0 or r1 <= 0.0:
            out.append(math.nan)
            continue
        out.append((math.log(r1) - math.log(r0)) / (math.log(horizons[k + 1]) - math.log(horizons[k])))
    return out


@dataclass
class SweepSpec:
    """Learners and adversaries are label -> (kind, params) maps."""

    game: GameMatrix
    horizons: Sequence[int]
    learners: Dict[str, tuple]
    adversaries: Dict[str, tuple]
    trials: int = 32
    seed: int = DEFAULT_SEED
    noise: NoiseModel = field(default_factory=NoiseModel)
    matrix_id: str = "custom"

    def cell(self, learner: str, adversary: str, horizon: int) -> MatchSpec:
        lkind, lparams = self.learners[learner]
        akind, aparams = self.adversaries[adversary]
        return MatchSpec(learner, adversary, self.game, int(horizon), self.matrix_id, self.noise,
                         self.seed, lkind, dict(lparams), akind, dict(aparams))


@dataclass
class SweepResult:
    horizons: List[int]
    cells: Dict[tuple, MonteCarloResult]
    slopes: Dict[tuple, List[float]]

    def mean(self, learner: str, adversary: str, horizon: int) -> float:
        return self.cells[(learner, adversary, int(horizon))].mean

    def curve(self, learner: str, adversary: str) -> List[float]:
        return [self.mean(learner, adversary, T) for T in self.horizons]

    def records(self) -> List[MatchRecord]:
        out = []
        for key in sorted(self.cells):
            out.extend(self.cells[key].records)
        return out


def horizon_sweep(spec: SweepSpec, horizons: Optional[Sequence[int]] = None,
                  threads: Optional[int] = None, trace: bool = False) -> SweepResult:
    """Monte Carlo over every (learner, adversary, T); each T gets fresh learners."""
    horizons = [int(T) for T in (spec.horizons if horizons is None else horizons)]
    if any(b <= a for a, b in zip(horizons, horizons[1:])):
        raise ValueError("horizons must be strictly increasing")
    keys = [(l, a, T) for l in spec.learners for a in spec.adversaries for T in horizons]
    jobs = []
    for key in keys:
        cell = spec.cell(*key)
        jobs.extend((cell, k) for k in range(spec.trials))
    # longest jobs first keeps the pool busy
    order = sorted(range(len(jobs)), key=lambda q: -jobs[q][0].horizon)
    results = _run_jobs([jobs[q] for q in order], threads, trace)
    by_key = {key: [] for key in keys}
    for q, rec in zip(order, results):
        by_key[(rec.learner, rec.adversary, rec.horizon)].append(rec)
    cells = {key: _summarize(spec.cell(*key), by_key[key]) for key in keys}
    slopes = {}
    for l in spec.learners:
        for a in spec.adversaries:
            slopes[(l, a)] = loglog_slopes(horizons, [cells[(l, a, T)].mean for T in horizons])
    return SweepResult(horizons, cells, slopes)


# ---------------------------------------------------------------------------
# output

RAW_COLUMNS = ("learner", "adversary", "matrix_id", "T", "trial", "seed", "nash_regret", "external_regret")
AGG_COLUMNS = ("learner", "adversary", "matrix_id", "T", "trials", "mean_nash_regret",
               "stderr_nash_regret", "mean_external_regret", "stderr_external_regret")
SLOPE_COLUMNS = ("learner", "adversary", "matrix_id", "T_from", "T_to", "slope")


def _num(v: float) -> str:
    return repr(float(v))


def write_raw_csv(records: Sequence[MatchRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RAW_COLUMNS)
        for r in records:
            w.writerow([r.learner, r.adversary, r.matrix_id, r.horizon, r.trial, r.seed,
                        _num(r.nash_regret), _num(r.external_regret)])


def write_aggregate_csv(result: SweepResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGG_COLUMNS)
        for (l, a, T) in sorted(result.cells):
            c = result.cells[(l, a, T)]
            w.writerow([l, a, c.spec.matrix_id, T, c.nash.trials, _num(c.nash.mean),
                        _num(c.nash.stderr), _num(c.external.mean), _num(c.external.stderr)])


def write_slopes_csv(result: SweepResult, matrix_id: str, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SLOPE_COLUMNS)
        for (l, a) in sorted(result.slopes):
            for k, s in enumerate(result.slopes[(l, a)]):
                w.writerow([l, a, matrix_id, result.horizons[k], result.horizons[k + 1], _num(s)])


def write_trace(records: Sequence[MatchRecord], path) -> None:
    """JSON lines, one per round of every traced record."""
    with open(path, "w") as fh:
        for r in records:
            if r.log is None:
                continue
            head = {"learner": r.learner, "adversary": r.adversary, "T": r.horizon, "trial": r.trial}
            for row in r.log.rows():
                fh.write(json.dumps({**head, **row}, sort_keys=True) + "\n")
