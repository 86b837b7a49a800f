"""Logarithmic Nash regret learners for zero-sum matrix games."""
from ._accel import backend
from .adversaries import Adversary, HardInstance, generate_hard_instance
from .bandit2x2 import Bandit2x2Learner
from .baselines import Exp3Learner, FixedLearner, UcbLearner
from .config import SweepConfig, bundled, load, loads, parse_matrix
from .environment import DEFAULT_SEED, Environment, NoiseModel, RandomStream
from .errors import (ConfigError, DegenerateMatrix, GameError, InfeasibleAnchor, InvalidMatrix,
                     NonUniqueEquilibrium)
from .full_info import FullInfoLearner
from .game_core import (GameMatrix, GapStatistics, NashSolution, gap_statistics, solve,
                        solve_2x2_closed_form, solve_by_enumeration, swap_identity_check)
from .harness import (MatchRecord, MatchSpec, SweepResult, SweepSpec, horizon_sweep, loglog_slopes,
                      monte_carlo, play_trial, run_match)
from .subroutine import Subroutine, SubroutineConfig

__version__ = "0.1.0"
