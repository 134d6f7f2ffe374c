"""Tabular learners: Q-learning, split-Q-learning and uncertain split-Q.

Tables are dense numpy arrays laid out on the environment's
:class:`~splitq.mdp.FlatLayout`.  A split table keeps one entry slot per
possible successor of ``(s, a)``, but a slot counts as observed only once
its visit count is positive; unobserved slots never influence estimates, so
the agent learns nothing from the layout beyond the state/action sizes.

The functions here are the reference implementation of every update and
selection rule.  The pure-Python trial loop calls them directly and the
compiled kernel reproduces them bit for bit.
"""

import math
from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

from .errors import InvalidArgumentError
from .posterior import SAMPLER_MODES, sample_simplex
from .running_stats import CUMULATIVE, EWMA, MeanVarAccumulator, push_state, std_from_state

Q_LEARNING = "q_learning"
SPLIT_Q = "split_q"
UNCERTAIN_SPLIT_Q = "uncertain_split_q"
AGENT_KINDS = (Q_LEARNING, SPLIT_Q, UNCERTAIN_SPLIT_Q)

CONSTANT = "constant"
INVERSE_COUNT = "inverse_count"
# 1/(n+1) until it drops below alpha: the first update of an entry overwrites its
# initial value, later ones use the constant rate
HYBRID = "hybrid"
ALPHA_SCHEDULES = (CONSTANT, INVERSE_COUNT, HYBRID)


@dataclass(frozen=True)
class AgentConfig:
    """Every free parameter of the learners.

    ``None`` in ``sigma_init``, ``ewma_beta``, ``unknown_enabled`` or
    ``alpha_schedule`` means "derive it" (see :meth:`resolved`).  ``epsilon_off_step=None`` keeps
    epsilon-greedy exploration on forever.  ``known_probabilities`` replaces
    the estimated transition frequencies with the environment's true ones in
    ``combine_q``; it exists for oracle checks only.
    """

    alpha: float = 0.1
    gamma: float = 0.9
    epsilon: float = 0.1
    epsilon_off_step: Optional[int] = None
    r_max: float = 1.0
    r_min: float = 0.0
    sigma_init: Optional[float] = None
    ewma_beta: Optional[float] = None
    sampler_mode: str = "paper_rejection"
    unknown_enabled: Optional[bool] = None
    alpha_schedule: Optional[str] = None
    accumulator: str = EWMA
    known_probabilities: bool = False

    @property
    def q_max(self):
        return optimistic_q_max(self)

    @property
    def q_min(self):
        return self.r_min / (1.0 - self.gamma)

    def resolved(self, kind):
        """Copy with every derived field filled in for agent ``kind``."""
        changes = {}
        if self.sigma_init is None:
            changes["sigma_init"] = (self.q_max - self.q_min) / 2.0
        if self.ewma_beta is None:
            changes["ewma_beta"] = self.alpha
        if self.unknown_enabled is None:
            changes["unknown_enabled"] = kind == UNCERTAIN_SPLIT_Q
        if self.alpha_schedule is None:
            changes["alpha_schedule"] = CONSTANT if kind == Q_LEARNING else HYBRID
        return replace(self, **changes)

    def validate(self):
        """Raise :class:`InvalidArgumentError` on the first out-of-range field."""
        for name, ok, bound in self.range_checks():
            if not ok:
                raise InvalidArgumentError(
                    f"{name} = {getattr(self, name)!r} is out of range (expected {bound})")

    def range_checks(self):
        beta = self.ewma_beta
        return [
            ("alpha", 0.0 < self.alpha <= 1.0, "0 < alpha <= 1"),
            ("gamma", 0.0 <= self.gamma < 1.0, "0 <= gamma < 1"),
            ("epsilon", 0.0 <= self.epsilon <= 1.0, "0 <= epsilon <= 1"),
            ("epsilon_off_step", self.epsilon_off_step is None or self.epsilon_off_step >= 0,
             "a step index >= 0 or 'never'"),
            ("r_max", math.isfinite(self.r_max) and self.r_max >= self.r_min, "finite, >= r_min"),
            ("r_min", math.isfinite(self.r_min), "finite"),
            ("sigma_init", self.sigma_init is None or self.sigma_init >= 0.0, "sigma_init >= 0"),
            ("ewma_beta", beta is None or 0.0 < beta <= 1.0, "0 < ewma_beta <= 1"),
            ("sampler_mode", self.sampler_mode in SAMPLER_MODES, " | ".join(SAMPLER_MODES)),
            ("alpha_schedule", self.alpha_schedule is None or self.alpha_schedule in ALPHA_SCHEDULES,
             " | ".join(ALPHA_SCHEDULES)),
            ("accumulator", self.accumulator in (EWMA, CUMULATIVE), f"{EWMA} | {CUMULATIVE}"),
        ]


CONFIG_FIELDS = tuple(f.name for f in fields(AgentConfig))


def optimistic_q_max(cfg):
    """Largest possible discounted return, ``r_max / (1 - gamma)``."""
    if not cfg.gamma < 1.0:
        raise InvalidArgumentError("optimistic bound needs gamma < 1")
    return cfg.r_max / (1.0 - cfg.gamma)


def _check(mdp, s, a=None):
    if not 0 <= s < mdp.num_states:
        raise InvalidArgumentError(f"state {s} out of range [0, {mdp.num_states})")
    if a is not None and not 0 <= a < mdp.num_actions(s):
        raise InvalidArgumentError(
            f"action {a} out of range [0, {mdp.num_actions(s)}) for state {s}")


class QTable:
    """Q(s, a) with per-pair visit counts, initialised to ``init``."""

    def __init__(self, mdp, init=0.0):
        self.mdp = mdp
        self.layout = mdp.flat
        n = self.layout.num_actions_total
        self.q = np.full(n, float(init))
        self.visits = np.zeros(n, dtype=np.int64)

    def index(self, s, a):
        _check(self.mdp, s, a)
        return int(self.layout.action_start[s]) + a

    def value(self, s, a):
        return float(self.q[self.index(s, a)])

    def values(self, s):
        _check(self.mdp, s)
        lo, hi = self.layout.action_start[s], self.layout.action_start[s + 1]
        return [float(x) for x in self.q[lo:hi]]


class SplitQTable:
    """Q(s, a, s') entries with visit counts and one accumulator per entry.

    ``q`` holds ``init`` for slots not yet observed.  Accumulator states are
    stored as three parallel arrays (count, mean, second moment).
    """

    def __init__(self, mdp, init=0.0, accumulator=EWMA):
        self.mdp = mdp
        self.layout = mdp.flat
        no = self.layout.num_outcomes
        self.accumulator_mode = accumulator
        self.q = np.full(no, float(init))
        self.n = np.zeros(no, dtype=np.int64)
        self.acc_count = np.zeros(no, dtype=np.int64)
        self.acc_mean = np.zeros(no)
        self.acc_second = np.zeros(no)
        self.sa_n = np.zeros(self.layout.num_actions_total, dtype=np.int64)

    def action_index(self, s, a):
        _check(self.mdp, s, a)
        return int(self.layout.action_start[s]) + a

    def slot(self, s, a, s_next):
        ga = self.action_index(s, a)
        lay = self.layout
        for j in range(lay.outcome_start[ga], lay.outcome_start[ga + 1]):
            if lay.next_state[j] == s_next:
                return int(lay.slot[j])
        raise InvalidArgumentError(
            f"state {s_next} is not a possible successor of (s={s}, a={a})")

    def slots(self, ga):
        lay = self.layout
        return range(int(lay.outcome_start[ga]), int(lay.outcome_start[ga + 1]))

    def entries(self, s, a):
        """Observed successors of ``(s, a)`` as ``(s_next, q_value, count)``."""
        ga = self.action_index(s, a)
        return [(int(self.layout.next_state[j]), float(self.q[j]), int(self.n[j]))
                for j in self.slots(ga) if self.n[j] > 0]

    def count(self, s, a):
        return int(self.sa_n[self.action_index(s, a)])

    def accumulator(self, s, a, s_next, beta=1.0):
        j = self.slot(s, a, s_next)
        return MeanVarAccumulator(self.accumulator_mode, beta, int(self.acc_count[j]),
                                  float(self.acc_mean[j]), float(self.acc_second[j]))

    def seed_entry(self, s, a, s_next, q_value, count=1):
        """Pre-populate an observed entry (used to start from a known fixed point)."""
        j = self.slot(s, a, s_next)
        added = count - int(self.n[j])
        self.q[j] = q_value
        self.n[j] = count
        self.sa_n[self.action_index(s, a)] += added


def argmax_random(values, rng):
    """Index of a maximal entry, ties broken uniformly by reservoir sampling."""
    best = values[0]
    idx = 0
    ties = 1
    for i in range(1, len(values)):
        v = values[i]
        if v > best:
            best = v
            idx = i
            ties = 1
        elif v == best:
            ties += 1
            if rng.integers(ties) == 0:
                idx = i
    return idx


def epsilon_active(cfg, step):
    return cfg.epsilon_off_step is None or step < cfg.epsilon_off_step


def select_epsilon_greedy(values, epsilon, step, cfg, rng):
    """Random action with probability epsilon (zero once exploration is off), else argmax."""
    if len(values) == 0:
        raise InvalidArgumentError("cannot select from an empty action list")
    eps = epsilon if epsilon_active(cfg, step) else 0.0
    if eps > 0.0 and rng.uniform() < eps:
        return rng.integers(len(values))
    return argmax_random(values, rng)


def _learning_rate(cfg, visits):
    if cfg.alpha_schedule in (CONSTANT, None):
        return cfg.alpha
    rate = 1.0 / (visits + 1)
    if cfg.alpha_schedule == HYBRID and rate < cfg.alpha:
        return cfg.alpha
    return rate


def q_update(table, s, a, r, s_next, cfg):
    """One Q-learning step toward ``r + gamma * max_a' Q(s_next, a')``."""
    i = table.index(s, a)
    if not math.isfinite(r):
        raise InvalidArgumentError(f"non-finite reward {r!r}")
    nxt = table.values(s_next)
    best = nxt[0]
    for v in nxt[1:]:
        if v > best:
            best = v
    target = r + cfg.gamma * best
    alpha = _learning_rate(cfg, int(table.visits[i]))
    q = float(table.q[i])
    table.q[i] = q + alpha * (target - q)
    table.visits[i] += 1
    return table


def _combine(table, ga, cfg, unknown, q_max):
    lay = table.layout
    lo, hi = int(lay.outcome_start[ga]), int(lay.outcome_start[ga + 1])
    q = table.q
    if cfg.known_probabilities:
        total = 0.0
        for j in range(lo, hi):
            total += float(lay.probability[j]) * float(q[int(lay.slot[j])])
        return total
    n = int(table.sa_n[ga])
    if n == 0:
        return q_max
    total = 0.0
    counts = table.n
    for j in range(lo, hi):
        c = int(counts[j])
        if c > 0:
            total += c * float(q[j])
    mean = total / n
    if unknown:
        w = 1.0 / (n + 2.0)
        return (1.0 - w) * mean + w * q_max
    return mean


def combine_q(table, s, a, cfg, unknown=None):
    """Total action value: successor values weighted by estimated probabilities.

    With the unknown slot enabled it receives mass ``1 / (n + 2)`` at the
    optimistic value and observed frequencies share the rest.
    """
    ga = table.action_index(s, a)
    if unknown is None:
        unknown = bool(cfg.unknown_enabled)
    return _combine(table, ga, cfg, unknown, optimistic_q_max(cfg))


def combined_values(table, s, cfg, unknown=None):
    _check(table.mdp, s)
    if unknown is None:
        unknown = bool(cfg.unknown_enabled)
    q_max = optimistic_q_max(cfg)
    lo, hi = int(table.layout.action_start[s]), int(table.layout.action_start[s + 1])
    return [_combine(table, ga, cfg, unknown, q_max) for ga in range(lo, hi)]


def split_q_update(table, s, a, r, s_next, cfg, unknown=None):
    """Move Q(s, a, s_next) toward ``r + gamma * max_a' combine_q(s_next, a')``.

    The bootstrap uses frequency estimates, never samples.  The new entry
    value is pushed into the entry's accumulator, then counts advance.
    """
    j = table.slot(s, a, s_next)
    if not math.isfinite(r):
        raise InvalidArgumentError(f"non-finite reward {r!r}")
    ga = table.action_index(s, a)
    q_max = optimistic_q_max(cfg)
    if table.n[j] == 0:
        table.q[j] = q_max
    nxt = combined_values(table, s_next, cfg, unknown)
    best = nxt[0]
    for v in nxt[1:]:
        if v > best:
            best = v
    target = r + cfg.gamma * best
    alpha = _learning_rate(cfg, int(table.n[j]))
    q = float(table.q[j])
    q = q + alpha * (target - q)
    table.q[j] = q
    beta = cfg.ewma_beta if cfg.ewma_beta is not None else cfg.alpha
    c, m, sec = push_state(table.accumulator_mode == EWMA, beta, int(table.acc_count[j]),
                           float(table.acc_mean[j]), float(table.acc_second[j]), q)
    table.acc_count[j] = c
    table.acc_mean[j] = m
    table.acc_second[j] = sec
    table.n[j] += 1
    table.sa_n[ga] += 1
    return table


def sample_action_value(table, ga, cfg, rng, diagnostics=None):
    """One posterior draw of Q(s, a) for global action ``ga``.

    Probability weights come from :func:`sample_simplex`; each observed
    successor value is Gaussian around its estimate, clamped to the
    admissible return range; the unknown slot is worth the optimistic bound.
    """
    q_max = optimistic_q_max(cfg)
    n = int(table.sa_n[ga])
    if n == 0:
        return q_max
    unknown = bool(cfg.unknown_enabled)
    observed = [j for j in table.slots(ga) if table.n[j] > 0]
    counts = [int(table.n[j]) for j in observed]
    if unknown:
        counts.append(0)
    p = sample_simplex(counts, rng, cfg.sampler_mode, unknown_slot=unknown,
                       diagnostics=diagnostics)
    q_min = cfg.q_min
    sigma_init = cfg.sigma_init if cfg.sigma_init is not None else (q_max - q_min) / 2.0
    ewma = table.accumulator_mode == EWMA
    total = 0.0
    for i, j in enumerate(observed):
        x = float(table.q[j])
        sd = std_from_state(ewma, int(table.acc_count[j]), float(table.acc_mean[j]),
                            float(table.acc_second[j]), sigma_init)
        if sd > 0.0:
            x = x + sd * rng.normal()
            if x > q_max:
                x = q_max
            elif x < q_min:
                x = q_min
        total += p[i] * x
    if unknown:
        total += p[-1] * q_max
    return total


def select_uncertain(table, s, cfg, rng, diagnostics=None):
    """Sampled-argmax action: draw one Q(s, a) per action, pick the largest."""
    _check(table.mdp, s)
    lo, hi = int(table.layout.action_start[s]), int(table.layout.action_start[s + 1])
    values = [sample_action_value(table, ga, cfg, rng, diagnostics) for ga in range(lo, hi)]
    return argmax_random(values, rng)
