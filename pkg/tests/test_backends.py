"""The numba kernels and the plain numpy fallback must agree."""
import json
import os
import subprocess
import sys

import pytest

SCRIPT = r"""
import json
from zsregret import backend
from zsregret.environment import NoiseModel
from zsregret.game_core import GameMatrix, solve_by_enumeration
from zsregret.harness import MatchSpec, play_trial

fig = GameMatrix.from_unit([[2 / 3, 0.0], [0.0, 1 / 3]])
out = {"backend": backend(), "matches": []}
for learner in ("ours", "ours_skip", "ucb", "exp3"):
    for adversary in ("hybrid", "best_response", "ucb_killer"):
        r = play_trial(MatchSpec(learner, adversary, fig, 3000, "fig1"), 1)
        out["matches"].append([learner, adversary, r.nash_regret, r.external_regret, r.realized_total])
r = play_trial(MatchSpec("full_info", "hybrid", GameMatrix.from_unit([[0.9, 0.1, 0.6], [0.2, 0.8, 0.3]]),
                         500, "m3"), 0)
out["matches"].append(["full_info", "hybrid", r.nash_regret, r.external_regret, r.realized_total])
sol = solve_by_enumeration([[0.9, 0.1, 0.6, 0.3], [0.3, 0.9, 0.1, 0.6], [0.6, 0.3, 0.9, 0.1],
                            [0.1, 0.6, 0.3, 0.9]])
out["value"] = sol.value
print(json.dumps(out))
"""


def _run(disable):
    env = dict(os.environ)
    env.pop("ZSREGRET_DISABLE_NUMBA", None)
    if disable:
        env["ZSREGRET_DISABLE_NUMBA"] = "1"
    res = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True,
                         timeout=900)
    assert res.returncode == 0, res.stderr
    return json.loads(res.stdout.strip().splitlines()[-1])


@pytest.fixture(scope="module")
def both():
    return _run(False), _run(True)


def test_backend_flag(both):
    fast, slow = both
    assert slow["backend"] == "numpy"
    assert fast["backend"] in ("numba", "numpy")


def test_backends_agree(both):
    fast, slow = both
    assert fast["value"] == pytest.approx(slow["value"], abs=1e-14)
    for a, b in zip(fast["matches"], slow["matches"]):
        assert a[:2] == b[:2]
        assert a[2] == pytest.approx(b[2], abs=1e-9)
        assert a[3] == pytest.approx(b[3], abs=1e-9)
        assert a[4] == b[4]
