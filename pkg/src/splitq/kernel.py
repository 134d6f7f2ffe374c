"""Trial-loop backend selection.

The compiled extension ``splitq._ckernel`` is used when it imports; otherwise
(or when ``SPLITQ_PURE_PYTHON=1``) the pure-Python loop runs instead.  Both
produce bit-identical rewards and tables for the same inputs.
"""

import os
from dataclasses import dataclass

import numpy as np

from . import _pykernel
from .agents import (
    AGENT_KINDS,
    ALPHA_SCHEDULES,
    Q_LEARNING,
    UNCERTAIN_SPLIT_Q,
    QTable,
    SplitQTable,
)
from .errors import InvalidArgumentError
from .posterior import SAMPLER_CODES, SamplerDiagnostics, sample_simplex
from .rng import RandomSource
from .running_stats import CUMULATIVE, EWMA, MeanVarAccumulator

try:
    if os.environ.get("SPLITQ_PURE_PYTHON") == "1":
        raise ImportError("pure Python requested")
    from . import _ckernel
except ImportError:
    _ckernel = None

BACKENDS = ("python",) + (("compiled",) if _ckernel is not None else ())
DEFAULT_BACKEND = "compiled" if _ckernel is not None else "python"


@dataclass
class AgentRun:
    rewards: np.ndarray
    table: object
    final_state: int
    fallbacks: int


def new_table(mdp, kind, cfg):
    if kind == Q_LEARNING:
        return QTable(mdp, cfg.q_max)
    return SplitQTable(mdp, cfg.q_max, cfg.accumulator)


def kernel_params(cfg):
    return {
        "alpha": float(cfg.alpha),
        "gamma": float(cfg.gamma),
        "epsilon": float(cfg.epsilon),
        "q_max": float(cfg.q_max),
        "q_min": float(cfg.q_min),
        "sigma_init": float(cfg.sigma_init),
        "beta": float(cfg.ewma_beta),
        "eps_off": -1 if cfg.epsilon_off_step is None else int(cfg.epsilon_off_step),
        "sampler": SAMPLER_CODES[cfg.sampler_mode],
        "unknown": int(bool(cfg.unknown_enabled)),
        "schedule": ALPHA_SCHEDULES.index(cfg.alpha_schedule),
        "ewma": int(cfg.accumulator == EWMA),
        "known_probs": int(bool(cfg.known_probabilities)),
    }


def run_agent(mdp, kind, cfg, steps, rng, table=None, start_state=0, backend=None):
    """Run one agent for ``steps`` steps from ``start_state``.

    ``rng`` is a :class:`RandomSource` (advanced in place) or an integer seed.
    ``table`` continues learning from an existing table when given.
    """
    if kind not in AGENT_KINDS:
        raise InvalidArgumentError(f"unknown agent kind {kind!r}")
    backend = backend or DEFAULT_BACKEND
    if backend not in BACKENDS:
        raise InvalidArgumentError(f"backend {backend!r} unavailable (have {BACKENDS})")
    cfg = cfg.resolved(kind)
    if not isinstance(rng, RandomSource):
        rng = RandomSource(rng)
    if table is None:
        table = new_table(mdp, kind, cfg)
    rewards = np.zeros(steps)
    fallbacks = 0
    if backend == "python":
        if kind == Q_LEARNING:
            s = _pykernel.run_q(mdp, cfg, steps, start_state, rng, table, rewards)
        else:
            s, fallbacks = _pykernel.run_split(kind == UNCERTAIN_SPLIT_Q, mdp, cfg, steps,
                                               start_state, rng, table, rewards)
        return AgentRun(rewards, table, s, fallbacks)

    lay = mdp.flat
    state = np.array(rng.state, dtype=np.uint64)
    params = kernel_params(cfg)
    if kind == Q_LEARNING:
        s = _ckernel.run_q(lay.action_start, lay.outcome_start, lay.next_state,
                           lay.probability, lay.reward, params, steps, start_state,
                           state, table.q, table.visits, rewards)
    else:
        s, fallbacks = _ckernel.run_split(
            int(kind == UNCERTAIN_SPLIT_Q), lay.action_start, lay.outcome_start,
            lay.next_state, lay.slot, lay.probability, lay.reward, params, steps,
            start_state, state, table.q, table.n, table.acc_count, table.acc_mean,
            table.acc_second, table.sa_n, rewards)
    rng.state = tuple(int(x) for x in state)
    return AgentRun(rewards, table, int(s), int(fallbacks))


def sample_simplex_batch(counts, draws, rng, mode, unknown_slot=True, backend=None):
    """``draws`` posterior samples as a (draws, len(counts)) array, plus fallbacks.

    Same stream as ``draws`` successive :func:`~splitq.posterior.sample_simplex`
    calls on ``rng``, which is advanced in place.
    """
    backend = backend or DEFAULT_BACKEND
    if backend not in BACKENDS:
        raise InvalidArgumentError(f"backend {backend!r} unavailable (have {BACKENDS})")
    if not isinstance(rng, RandomSource):
        rng = RandomSource(rng)
    counts = [int(c) for c in counts]
    if backend == "python":
        diag = SamplerDiagnostics()
        out = np.array([sample_simplex(counts, rng, mode, unknown_slot=unknown_slot,
                                       diagnostics=diag) for _ in range(draws)])
        return out.reshape(draws, len(counts)), diag.fallbacks
    if any(c < 0 for c in counts) or not counts:
        raise InvalidArgumentError("counts must be non-empty and non-negative")
    if mode not in SAMPLER_CODES:
        raise InvalidArgumentError(f"unknown sampler mode {mode!r}")
    out = np.zeros((draws, len(counts)))
    state = np.array(rng.state, dtype=np.uint64)
    fb = _ckernel.sample_simplex_many(np.asarray(counts, dtype=np.int64), SAMPLER_CODES[mode],
                                      int(bool(unknown_slot)), draws, state, out)
    rng.state = tuple(int(x) for x in state)
    return out, int(fb)


def accumulate(values, mode=CUMULATIVE, beta=1.0, backend=None):
    """A :class:`MeanVarAccumulator` fed with ``values`` in order."""
    backend = backend or DEFAULT_BACKEND
    acc = MeanVarAccumulator(mode, beta)
    if backend == "python":
        return acc.extend(float(x) for x in values)
    if backend not in BACKENDS:
        raise InvalidArgumentError(f"backend {backend!r} unavailable (have {BACKENDS})")
    values = np.ascontiguousarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise InvalidArgumentError("cannot accumulate non-finite values")
    acc.count, acc.mean, acc.second = _ckernel.accumulate(values, int(acc.is_ewma), beta)
    return acc
