"""Split-Q-learning: transition-split Q tables with posterior-sampled exploration.

Public entry points are re-exported here; see the submodules for details.
"""

from .agents import AgentConfig, QTable, SplitQTable, combine_q, optimistic_q_max
from .config import dump_config, parse_config
from .harness import AgentSpec, ExperimentConfig, RewardCurve, run_experiment, run_trial
from .kernel import DEFAULT_BACKEND, run_agent
from .layered import LayeredConfig, generate
from .mdp import Outcome, TabularMdp, value_iteration
from .posterior import sample_simplex
from .rng import RandomSource, derive_seed
from .running_stats import MeanVarAccumulator

__version__ = "0.1.0"

__all__ = [
    "AgentConfig", "AgentSpec", "DEFAULT_BACKEND", "ExperimentConfig", "LayeredConfig",
    "MeanVarAccumulator", "Outcome", "QTable", "RandomSource", "RewardCurve",
    "SplitQTable", "TabularMdp", "combine_q", "derive_seed", "dump_config", "generate",
    "optimistic_q_max", "parse_config", "run_agent", "run_experiment", "run_trial",
    "sample_simplex", "value_iteration",
]
