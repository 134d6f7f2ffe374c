"""Multi-trial experiments over freshly generated layered environments.

Each trial ``t`` gets its own environment, seeded by
``derive_seed(master_seed, t, 0)``, and every configured agent runs on that
same environment with seed ``derive_seed(master_seed, t, 1 + crc32(name))``.
Per-step statistics are reduced in trial-index order, so the output does
not depend on the number of workers or on completion order.
"""

import hashlib
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .agents import AGENT_KINDS, AgentConfig
from .errors import InvalidArgumentError, TrialError
from .kernel import run_agent
from .layered import LayeredConfig, generate
from .rng import derive_seed

ENV_ROLE = 0


@dataclass(frozen=True)
class AgentSpec:
    name: str
    kind: str
    config: AgentConfig = AgentConfig()


@dataclass(frozen=True)
class ExperimentConfig:
    env: LayeredConfig = LayeredConfig()
    agents: tuple = ()
    steps: int = 20_000
    trials: int = 100
    master_seed: int = 0
    smoothing_window: int = 100
    output_path: str = "results"

    def validate(self):
        self.env.validate()
        if self.steps < 1:
            raise InvalidArgumentError("steps must be >= 1")
        if self.trials < 1:
            raise InvalidArgumentError("trials must be >= 1")
        if self.smoothing_window < 1:
            raise InvalidArgumentError("smoothing_window must be >= 1")
        if not self.agents:
            raise InvalidArgumentError("at least one agent is required")
        names = [a.name for a in self.agents]
        if len(set(names)) != len(names):
            raise InvalidArgumentError("agent names must be unique")
        for spec in self.agents:
            if spec.kind not in AGENT_KINDS:
                raise InvalidArgumentError(f"agent {spec.name!r}: unknown kind {spec.kind!r}")
            spec.config.validate()

    @property
    def digest(self):
        return hashlib.sha256(repr(self).encode("utf-8")).hexdigest()[:16]


@dataclass
class RewardCurve:
    agent: str
    mean: np.ndarray
    stderr: np.ndarray
    config_digest: str = ""
    epsilon_off_step: Optional[int] = None

    @property
    def steps(self):
        return len(self.mean)


@dataclass
class ExperimentResult:
    curves: list
    block_sums: dict      # agent -> (trials, blocks) per-trial reward sums
    block_size: int
    fallbacks: dict       # agent -> sampler fallbacks summed over trials
    env_digests: list
    trial_rewards: dict = field(default_factory=dict)   # only with keep_trials

    def window_means(self, agent, start, stop):
        """Per-trial mean reward over steps ``[start, stop)``; block aligned."""
        b = self.block_size
        if start % b or stop % b:
            raise InvalidArgumentError(f"window must align with blocks of {b}")
        return self.block_sums[agent][:, start // b:stop // b].sum(axis=1) / (stop - start)


def agent_role(name):
    return 1 + zlib.crc32(name.encode("utf-8"))


def trial_seeds(master_seed, trial, names):
    env_seed = derive_seed(master_seed, trial, ENV_ROLE)
    return env_seed, {n: derive_seed(master_seed, trial, agent_role(n)) for n in names}


def run_trial(env, kind, cfg, steps, trial_seed, backend=None):
    """Per-step rewards of one agent on one environment, starting at state 0."""
    if steps < 1:
        raise InvalidArgumentError("steps must be >= 1")
    return run_agent(env, kind, cfg, steps, trial_seed, backend=backend).rewards


def smooth(values, window):
    """Non-overlapping block means; a trailing partial block is kept."""
    values = np.asarray(values, dtype=float)
    if window == 1:
        return values.copy()
    n = len(values)
    starts = np.arange(0, n, window)
    sums = np.add.reduceat(values, starts)
    sizes = np.minimum(starts + window, n) - starts
    return sums / sizes


class _Aggregator:
    """Welford over trials, vectorised across steps."""

    def __init__(self, steps):
        self.count = 0
        self.mean = np.zeros(steps)
        self.m2 = np.zeros(steps)

    def push(self, x):
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    def stderr(self):
        if self.count < 2:
            return np.zeros_like(self.mean)
        return np.sqrt(self.m2 / (self.count - 1)) / np.sqrt(self.count)


def aggregate(sequences):
    """Per-step mean and standard error over equally long per-trial sequences."""
    seqs = [np.asarray(s, dtype=float) for s in sequences]
    agg = _Aggregator(len(seqs[0]))
    for s in seqs:
        agg.push(s)
    return agg.mean.copy(), agg.stderr()


def _block_sums(rewards, block):
    return np.add.reduceat(rewards, np.arange(0, len(rewards), block))


def _trial_task(args):
    cfg, trial, backend, block = args
    names = [a.name for a in cfg.agents]
    env_seed, seeds = trial_seeds(cfg.master_seed, trial, names)
    current = None
    try:
        env = generate(cfg.env, seed=env_seed)
        digest = env.digest
        out = []
        for spec in cfg.agents:
            current = spec.name
            run = run_agent(env, spec.kind, spec.config, cfg.steps, seeds[spec.name],
                            backend=backend)
            out.append((run.rewards, _block_sums(run.rewards, block), run.fallbacks))
        current = None
        if generate(cfg.env, seed=env_seed).digest != digest:
            raise RuntimeError("environment changed between agents")
    except Exception as exc:  # noqa: BLE001 - re-raised with trial context
        who = f" (agent {current})" if current else ""
        raise TrialError(f"trial {trial}{who} failed: {exc}", trial, current) from exc
    return trial, digest, out


def run_experiment(cfg, workers=1, backend=None, block_size=100, keep_trials=False):
    """Run every trial of ``cfg`` and aggregate per-step reward curves.

    Parameters
    ----------
    workers : int
        Process count; affects wall-clock time only.
    block_size : int
        Granularity of the per-trial reward sums kept for paired tests.
    keep_trials : bool
        Also keep the full (trials, steps) reward matrix per agent.
    """
    cfg.validate()
    names = [a.name for a in cfg.agents]
    aggs = {n: _Aggregator(cfg.steps) for n in names}
    blocks = {n: [] for n in names}
    fallbacks = {n: 0 for n in names}
    kept = {n: [] for n in names}
    digests = []
    tasks = [(cfg, t, backend, block_size) for t in range(cfg.trials)]

    def consume(results):
        for trial, digest, out in results:
            digests.append(digest)
            for name, (rewards, bsum, fb) in zip(names, out):
                aggs[name].push(rewards)
                blocks[name].append(bsum)
                fallbacks[name] += fb
                if keep_trials:
                    kept[name].append(rewards)

    if workers <= 1:
        consume(map(_trial_task, tasks))
    else:
        chunk = max(1, cfg.trials // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            consume(pool.map(_trial_task, tasks, chunksize=chunk))

    digest = cfg.digest
    curves = [RewardCurve(spec.name, aggs[spec.name].mean, aggs[spec.name].stderr(), digest,
                          spec.config.epsilon_off_step)
              for spec in cfg.agents]
    return ExperimentResult(
        curves=curves,
        block_sums={n: np.vstack(blocks[n]) for n in names},
        block_size=block_size,
        fallbacks=fallbacks,
        env_digests=digests,
        trial_rewards={n: np.vstack(kept[n]) for n in names} if keep_trials else {},
    )
