"""Time the hot kernels with Numba and with the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Each backend runs in its own subprocess, because the backend is fixed when
the package is imported (ZSREGRET_DISABLE_NUMBA=1 selects the fallback).
The Numba column excludes compilation: every case is run once before timing.
"""
import argparse
import json
import os
import subprocess
import sys
import time

CASES = {
    # name: (description, size)
    "bandit_ours_br": ("2x2 learner vs best response, T rounds", 20000),
    "bandit_ucb_br": ("UCB vs best response, T rounds", 20000),
    "bandit_exp3_hybrid": ("EXP3 vs hybrid, T rounds", 20000),
    "enumerate_4x4": ("support enumeration on random 4x4 games, count", 200),
    "identify_3x3": ("support identification, noiseless 3x3, rounds", 20000),
    "subroutine_exhaustive": ("every column sequence of a 3x3 game, length", 7),
}


def run_case(name, size):
    import numpy as np

    from zsregret.adversaries import Adversary
    from zsregret.environment import NoiseModel, RandomStream
    from zsregret.fastpath import bandit_match, identify_support
    from zsregret.game_core import GameMatrix, solve_by_enumeration
    from zsregret.subroutine import anchor_margin
    from zsregret.verify import FIG_MATRIX, ID_MATRIX, exhaustive_margin

    fig = GameMatrix.from_unit(FIG_MATRIX)
    noise = NoiseModel("bernoulli")
    if name.startswith("bandit_"):
        learner, adv = {"bandit_ours_br": ("ours_skip", "best_response"),
                        "bandit_ucb_br": ("ucb", "best_response"),
                        "bandit_exp3_hybrid": ("exp3", "hybrid")}[name]
        adversary = Adversary(adv, fig)
        return lambda: bandit_match(learner, adversary, fig, size, noise, RandomStream(1, 0))
    if name == "enumerate_4x4":
        rng = np.random.default_rng(0)
        games = [rng.uniform(0, 1, (4, 4)) for _ in range(size)]

        def go():
            for A in games:
                try:
                    solve_by_enumeration(A)
                except Exception:
                    pass
        return go
    if name == "identify_3x3":
        game = GameMatrix(ID_MATRIX)
        return lambda: identify_support(game, size, NoiseModel("none"), RandomStream(1, 0))
    if name == "subroutine_exhaustive":
        P = (np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]]) + 1.0) / 2.0
        x = np.full(3, 1.0 / 3.0)
        D1 = 2.0 / anchor_margin(x)
        return lambda: exhaustive_margin(x, P, 1.0 / D1, 1.0 / D1, size, 0.5, 18.0 / D1, 21.0 / D1)
    raise KeyError(name)


def child(repeat):
    from zsregret import backend

    out = {"backend": backend()}
    for name, (_, size) in CASES.items():
        fn = run_case(name, size)
        fn()  # compile / warm up
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        out[name] = best
    print(json.dumps(out))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.child:
        child(args.repeat)
        return
    results = {}
    for flag in ("0", "1"):
        env = dict(os.environ, ZSREGRET_DISABLE_NUMBA=flag)
        proc = subprocess.run([sys.executable, __file__, "--child", "--repeat", str(args.repeat)],
                              env=env, capture_output=True, text=True, check=True)
        res = json.loads(proc.stdout.strip().splitlines()[-1])
        results[res.pop("backend")] = res
    fast, slow = results.get("numba"), results.get("numpy")
    print(f"{'case':<24}{'size':>8}{'numba s':>12}{'numpy s':>12}{'speedup':>10}")
    for name, (desc, size) in CASES.items():
        a = fast[name] if fast else float("nan")
        b = slow[name]
        print(f"{name:<24}{size:>8}{a:>12.4f}{b:>12.4f}{b / a:>9.1f}x")
    for name, (desc, _) in CASES.items():
        print(f"  {name}: {desc}")


if __name__ == "__main__":
    main()
