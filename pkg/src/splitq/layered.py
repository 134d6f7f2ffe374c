"""Random layered benchmark environments.

State 0 is the single level-0 state.  Level ``l`` in ``1..m`` holds states
``1 + (l - 1) * n .. l * n``.  Level 0 has ``n`` deterministic actions, one
per level-1 state; intermediate levels have ``k`` actions with two distinct
successors on the next level; last-level states have a single action back to
state 0.  Every outcome carries a reward drawn uniformly from
``[reward_low, reward_high]`` at generation time.

Random draws are consumed in state order, then action order; within an
intermediate action: first target, second target, split probability
(redrawn while exactly 0), then one reward per outcome.
"""

import math
from dataclasses import dataclass

from .errors import InvalidArgumentError
from .mdp import Outcome, TabularMdp
from .rng import RandomSource


@dataclass(frozen=True)
class LayeredConfig:
    m: int = 20
    n: int = 10
    k: int = 2
    reward_low: float = 0.0
    reward_high: float = 1.0
    seed: int = 0

    def validate(self):
        if self.m < 1:
            raise InvalidArgumentError(f"m must be >= 1, got {self.m}")
        if self.n < 2:
            raise InvalidArgumentError(f"n must be >= 2, got {self.n}")
        if self.k < 1:
            raise InvalidArgumentError(f"k must be >= 1, got {self.k}")
        if not (math.isfinite(self.reward_low) and math.isfinite(self.reward_high)):
            raise InvalidArgumentError("reward bounds must be finite")
        if self.reward_low > self.reward_high:
            raise InvalidArgumentError("reward_low must not exceed reward_high")

    @property
    def num_states(self):
        return 1 + self.m * self.n


def state_index(cfg, level, j):
    if level == 0:
        return 0
    return 1 + (level - 1) * cfg.n + j


def level_of(cfg, state):
    return 0 if state == 0 else 1 + (state - 1) // cfg.n


def generate(cfg, seed=None):
    """Build the layered MDP for ``cfg``; ``seed`` overrides ``cfg.seed``."""
    cfg.validate()
    rng = RandomSource(cfg.seed if seed is None else seed)
    lo, span = cfg.reward_low, cfg.reward_high - cfg.reward_low

    def reward():
        return lo + span * rng.uniform()

    states = [tuple(
        (Outcome(state_index(cfg, 1, j), 1.0, reward()),) for j in range(cfg.n))]
    for level in range(1, cfg.m + 1):
        for _ in range(cfg.n):
            if level == cfg.m:
                states.append(((Outcome(0, 1.0, reward()),),))
                continue
            actions = []
            for _ in range(cfg.k):
                first = rng.integers(cfg.n)
                second = rng.integers(cfg.n - 1)
                if second >= first:
                    second += 1
                p = rng.uniform()
                while p == 0.0:
                    p = rng.uniform()
                r1 = reward()
                r2 = reward()
                actions.append((
                    Outcome(state_index(cfg, level + 1, first), p, r1),
                    Outcome(state_index(cfg, level + 1, second), 1.0 - p, r2),
                ))
            states.append(tuple(actions))
    return TabularMdp(tuple(states))
