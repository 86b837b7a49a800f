"""Command line entry point: ``zsregret solve | match | sweep | verify``."""
import json
import sys
from pathlib import Path

import click
import numpy as np

from .config import ADVERSARY_PARAMS, LEARNER_PARAMS, MatrixParseError, bundled, load, parse_matrix
from .environment import DEFAULT_SEED, NOISE_KINDS, NoiseModel
from .errors import ConfigError, DegenerateMatrix, GameError, InvalidMatrix, NonUniqueEquilibrium
from .game_core import GameMatrix, gap_statistics, solve
from .harness import (MatchSpec, horizon_sweep, play_trial, write_aggregate_csv, write_raw_csv,
                      write_slopes_csv, write_trace)

EXIT_FAIL = 1
EXIT_USAGE = 2


def _g(v) -> str:
    return f"{float(v):.12g}"


def _vec(v) -> str:
    return "(" + ", ".join(_g(a) for a in v) + ")"


def _read_matrix(path, inline, scale) -> GameMatrix:
    if (path is None) == (inline is None):
        raise click.UsageError("give either a matrix file or --inline, not both")
    text = inline if inline is not None else Path(path).read_text()
    try:
        entries = parse_matrix(text)
    except MatrixParseError as exc:
        source = "inline matrix" if inline is not None else str(path)
        click.echo(f"error: {source}: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    if scale == "auto":
        scale = "unit" if entries.min() >= 0.0 else "native"
    try:
        return GameMatrix(entries, unit=scale == "unit")
    except InvalidMatrix as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_USAGE)


@click.group()
def main():
    """Nash regret learners for zero-sum matrix games."""


@main.command("solve")
@click.argument("path", required=False, type=click.Path(exists=True, dir_okay=False))
@click.option("--inline", help='Matrix literal such as "2/3,0;0,1/3".')
@click.option("--scale", type=click.Choice(["auto", "unit", "native"]), default="auto", show_default=True,
              help="Entries in [0,1] (unit) or [-1,1] (native); auto picks unit when no entry is negative.")
def solve_cmd(path, inline, scale):
    """Print the unique equilibrium and instance gaps of a matrix."""
    game = _read_matrix(path, inline, scale)
    try:
        sol = solve(game)
    except NonUniqueEquilibrium as exc:
        click.echo(f"NonUniqueEquilibrium: {exc}", err=True)
        sys.exit(EXIT_FAIL)
    except DegenerateMatrix as exc:
        click.echo(f"DegenerateMatrix: {exc}", err=True)
        sys.exit(EXIT_FAIL)
    click.echo(f"shape     {game.n}x{game.m} ({'unit' if game.unit else 'native'} scale)")
    click.echo(f"x*        {_vec(sol.x_star)}")
    click.echo(f"y*        {_vec(sol.y_star)}")
    click.echo(f"V*        {_g(sol.value)}")
    click.echo(f"support x {list(sol.support_x)}")
    click.echo(f"support y {list(sol.support_y)}")
    if sol.is_psne:
        click.echo(f"pure equilibrium at cell {sol.psne_cell}")
    try:
        gaps = gap_statistics(game)
    except GameError as exc:
        click.echo(f"gaps      unavailable: {exc}")
        return
    click.echo("gaps on the [0, 1] scale:")
    click.echo(f"  delta_min {_g(gaps.delta_min)}")
    click.echo(f"  D         {_g(gaps.D)}")
    click.echo(f"  delta_g   {_g(gaps.delta_g)}")


def _parse_params(pairs):
    out = {}
    for item in pairs:
        if "=" not in item:
            raise click.BadParameter(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


@main.command("match")
@click.argument("path", required=False, type=click.Path(exists=True, dir_okay=False))
@click.option("--inline", help="Matrix literal.")
@click.option("--scale", type=click.Choice(["auto", "unit", "native"]), default="auto", show_default=True)
@click.option("--learner", type=click.Choice(sorted(LEARNER_PARAMS)), default="ours", show_default=True)
@click.option("--adversary", type=click.Choice(sorted(ADVERSARY_PARAMS)), default="best_response",
              show_default=True)
@click.option("--learner-param", "lparams", multiple=True, help="key=value, repeatable.")
@click.option("--adversary-param", "aparams", multiple=True, help="key=value, repeatable.")
@click.option("-T", "--horizon", type=click.IntRange(min=1), default=10000, show_default=True)
@click.option("--noise", type=click.Choice(NOISE_KINDS), default="bernoulli", show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=DEFAULT_SEED, show_default=True)
@click.option("--trial", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--trace", type=click.Path(dir_okay=False), help="Write per-round JSON lines here.")
def match_cmd(path, inline, scale, learner, adversary, lparams, aparams, horizon, noise, seed, trial, trace):
    """Play one match and print its regrets."""
    game = _read_matrix(path, inline, scale)
    spec = MatchSpec(learner, adversary, game, horizon, "cli", NoiseModel(noise), seed,
                     learner_params=_parse_params(lparams), adversary_params=_parse_params(aparams))
    try:
        rec = play_trial(spec, trial, trace=trace is not None)
    except (GameError, ValueError, TypeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_FAIL)
    if trace:
        write_trace([rec], trace)
    if rec.error:
        click.echo(f"match stopped: {rec.error}", err=True)
    click.echo(f"rounds          {rec.rounds}")
    click.echo(f"nash regret     {_g(rec.nash_regret)}")
    click.echo(f"external regret {_g(rec.external_regret)}")
    click.echo(f"V*              {_g(rec.value)}")
    for ev in rec.events:
        click.echo("event           " + json.dumps(ev, sort_keys=True))
    sys.exit(0 if rec.ok else EXIT_FAIL)


PLOT_SCRIPT = '''"""Log-log regret curves, one panel per adversary. Needs matplotlib."""
import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
rows = list(csv.DictReader(open(here / "aggregate.csv")))
adversaries = {adversaries!r}
learners = {learners!r}
curves = defaultdict(list)
for r in rows:
    curves[(r["learner"], r["adversary"])].append(
        (int(r["T"]), float(r["mean_nash_regret"]), float(r["stderr_nash_regret"])))

fig, axes = plt.subplots(1, len(adversaries), figsize=(5 * len(adversaries), 4), squeeze=False)
for ax, adv in zip(axes[0], adversaries):
    for learner in learners:
        pts = sorted(curves[(learner, adv)])
        T = [p[0] for p in pts]
        mean = [p[1] for p in pts]
        err = [p[2] for p in pts]
        ax.errorbar(T, mean, yerr=err, marker="o", capsize=2, label=learner)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("T")
    ax.set_title(adv)
    ax.grid(True, which="both", alpha=0.3)
axes[0][0].set_ylabel("mean Nash regret")
axes[0][0].legend()
fig.tight_layout()
out = sys.argv[1] if len(sys.argv) > 1 else str(here / "regret_curves.png")
fig.savefig(out, dpi=150)
print("wrote", out)
'''


@main.command("sweep")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="Sweep config file; defaults to the bundled figure config.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="sweep_out", show_default=True)
@click.option("--seed", type=click.IntRange(min=0), help="Override the config seed.")
@click.option("--trials", type=click.IntRange(min=1), help="Override the config trial count.")
@click.option("--threads", type=click.IntRange(min=1), help="Worker threads (default: all cores).")
@click.option("--trace", is_flag=True, help="Also write per-round JSON lines (slow path).")
def sweep_cmd(config_path, out_dir, seed, trials, threads, trace):
    """Run a horizon sweep and write raw, aggregate and slope CSVs plus a plot script."""
    try:
        cfg = load(config_path) if config_path else bundled("paper_fig1")
    except ConfigError as exc:
        click.echo(f"config has {len(exc.problems)} problem(s):", err=True)
        for p in exc.problems:
            click.echo(f"  - {p}", err=True)
        sys.exit(EXIT_USAGE)
    if seed is not None:
        cfg.seed = seed
    if trials is not None:
        cfg.trials = trials
    spec = cfg.sweep_spec()
    result = horizon_sweep(spec, threads=threads, trace=trace)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = result.records()
    write_raw_csv(records, out / "raw.csv")
    write_aggregate_csv(result, out / "aggregate.csv")
    write_slopes_csv(result, cfg.matrix_id, out / "slopes.csv")
    (out / "plot.py").write_text(PLOT_SCRIPT.format(adversaries=list(cfg.adversaries),
                                                    learners=list(cfg.learners)))
    if trace:
        write_trace(records, out / "trace.jsonl")
    errors = [r for r in records if r.error]
    for r in errors:
        click.echo(f"warning: {r.learner} vs {r.adversary} T={r.horizon} trial {r.trial}: {r.error}", err=True)
    T = result.horizons[-1]
    click.echo(f"{len(records)} matches written to {out}")
    for (l, a) in sorted(result.slopes):
        s = result.slopes[(l, a)]
        tail = f"{s[-1]:.3f}" if s else "n/a"
        click.echo(f"  {l:>10} vs {a:<14} mean Nash regret at T={T}: {result.mean(l, a, T):.4g}  "
                   f"final slope {tail}")


@main.command("verify")
@click.option("--only", multiple=True, help="Suite key; repeatable. Default: all suites.")
@click.option("--seed", type=click.IntRange(min=0), default=DEFAULT_SEED, show_default=True)
@click.option("--threads", type=click.IntRange(min=1), help="Worker threads (default: all cores).")
@click.option("--json", "json_path", type=click.Path(dir_okay=False), help="Also write the summary here.")
def verify_cmd(only, seed, threads, json_path):
    """Run the acceptance suites; exit nonzero if any fails."""
    from . import verify

    keys = []
    for item in only:
        keys.extend(k for k in item.split(",") if k)
    unknown = [k for k in keys if k not in verify.SUITES]
    if unknown:
        raise click.BadParameter(f"unknown suite(s) {unknown}; expected {list(verify.SUITES)}",
                                 param_hint="--only")
    results = verify.run(keys or None, seed=seed, threads=threads, echo=click.echo)
    summary = verify.summary(results, seed)
    text = json.dumps(summary, indent=2, sort_keys=True, default=_json_default)
    if json_path:
        Path(json_path).write_text(text + "\n")
    click.echo(text)
    sys.exit(0 if summary["passed"] else EXIT_FAIL)


def _json_default(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not serializable: {type(v).__name__}")


if __name__ == "__main__":
    main()
