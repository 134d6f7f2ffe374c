"""Ground-truth tabular MDPs: representation, simulation, validation, oracle.

A :class:`TabularMdp` is immutable.  Rewards live on outcomes, so the reward
of a transition is fixed once ``(s, a, s')`` is known.  For the compiled
kernel and the vectorised value iteration the nested structure is also
exposed as flat arrays (:class:`FlatLayout`), indexed by a global action id
``action_start[s] + a`` and a global outcome id ``outcome_start[ga] + j``.
"""

import hashlib
import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError, InvalidArgumentError

SCHEMA = "mdp-v1"
PROB_TOL = 1e-9
MAX_SWEEPS = 100_000


class Outcome(NamedTuple):
    next_state: int
    probability: float
    reward: float


@dataclass(frozen=True)
class FlatLayout:
    action_start: np.ndarray   # (num_states + 1,)
    outcome_start: np.ndarray  # (num_actions_total + 1,)
    next_state: np.ndarray     # (num_outcomes,)
    probability: np.ndarray
    reward: np.ndarray
    # first outcome of the same (s, a) with the same next_state
    slot: np.ndarray

    @property
    def num_actions_total(self):
        return len(self.outcome_start) - 1

    @property
    def num_outcomes(self):
        return len(self.next_state)

    def action_id(self, s, a):
        return int(self.action_start[s]) + a


@dataclass(frozen=True)
class TabularMdp:
    """Finite MDP; ``outcomes[s][a]`` is the outcome list of ``(s, a)``."""

    outcomes: tuple

    @classmethod
    def from_lists(cls, outcomes):
        return cls(tuple(
            tuple(tuple(Outcome(int(o[0]), float(o[1]), float(o[2])) for o in outs)
                  for outs in state)
            for state in outcomes))

    @property
    def num_states(self):
        return len(self.outcomes)

    @property
    def actions_per_state(self):
        return tuple(len(acts) for acts in self.outcomes)

    def num_actions(self, s):
        return len(self.outcomes[s])

    @cached_property
    def flat(self):
        action_start = [0]
        outcome_start = [0]
        next_state, probability, reward, slot = [], [], [], []
        for acts in self.outcomes:
            action_start.append(action_start[-1] + len(acts))
            for outs in acts:
                base = outcome_start[-1]
                seen = {}
                for j, o in enumerate(outs):
                    slot.append(seen.setdefault(o.next_state, base + j))
                    next_state.append(o.next_state)
                    probability.append(o.probability)
                    reward.append(o.reward)
                outcome_start.append(base + len(outs))
        return FlatLayout(
            np.asarray(action_start, dtype=np.int64),
            np.asarray(outcome_start, dtype=np.int64),
            np.asarray(next_state, dtype=np.int64),
            np.asarray(probability, dtype=np.float64),
            np.asarray(reward, dtype=np.float64),
            np.asarray(slot, dtype=np.int64),
        )

    @cached_property
    def digest(self):
        return hashlib.sha256(to_text(self).encode("utf-8")).hexdigest()

    def expected_reward(self):
        """Expected one-step reward per global action id."""
        f = self.flat
        return np.add.reduceat(f.probability * f.reward, f.outcome_start[:-1])


def validate(mdp):
    """Return a list of invariant violations; empty when the MDP is valid."""
    report = []
    n = mdp.num_states
    if n == 0:
        report.append("MDP has no states")
    for s, acts in enumerate(mdp.outcomes):
        if not acts:
            report.append(f"state {s}: no actions")
        for a, outs in enumerate(acts):
            where = f"(s={s}, a={a})"
            if not outs:
                report.append(f"{where}: no outcomes")
                continue
            total = 0.0
            for o in outs:
                total += o.probability
                if not 0 <= o.next_state < n:
                    report.append(f"{where}: dangling next_state {o.next_state}")
                if not (0.0 < o.probability <= 1.0):
                    report.append(f"{where}: probability {o.probability!r} outside (0, 1]")
                if not math.isfinite(o.reward):
                    report.append(f"{where}: non-finite reward {o.reward!r}")
            if abs(total - 1.0) > PROB_TOL:
                report.append(f"{where}: probabilities sum to {total:.12g}")
    return report


def check_state_action(mdp, s, a):
    if not 0 <= s < mdp.num_states:
        raise InvalidArgumentError(f"state {s} out of range [0, {mdp.num_states})")
    if not 0 <= a < mdp.num_actions(s):
        raise InvalidArgumentError(
            f"action {a} out of range [0, {mdp.num_actions(s)}) for state {s}")


def sample_outcome(outs, u):
    """Index of the outcome selected by the uniform draw ``u``.

    Cumulative scan in list order; the last outcome absorbs round-off.
    """
    acc = 0.0
    last = len(outs) - 1
    for j in range(last):
        acc += outs[j].probability
        if u < acc:
            return j
    return last


def sample_transition(mdp, s, a, rng):
    """Draw ``(next_state, reward)`` for taking ``a`` in ``s``."""
    check_state_action(mdp, s, a)
    outs = mdp.outcomes[s][a]
    o = outs[sample_outcome(outs, rng.uniform())]
    return o.next_state, o.reward


def bellman_backup(mdp, q, gamma):
    f = mdp.flat
    v = np.maximum.reduceat(q, f.action_start[:-1])
    return np.add.reduceat(f.probability * (f.reward + gamma * v[f.next_state]),
                           f.outcome_start[:-1])


def value_iteration(mdp, gamma, tol=1e-10, max_sweeps=MAX_SWEEPS):
    """Optimal Q over global action ids, by synchronous max-norm value iteration.

    Returns ``Q`` with ``max |Q - backup(Q)| <= tol``.

    Raises
    ------
    ConvergenceError
        When ``max_sweeps`` sweeps do not reach ``tol``.
    """
    if not 0.0 <= gamma < 1.0:
        raise InvalidArgumentError(f"gamma must lie in [0, 1), got {gamma}")
    if tol <= 0:
        raise InvalidArgumentError("tol must be positive")
    problems = validate(mdp)
    if problems:
        raise InvalidArgumentError("invalid MDP: " + "; ".join(problems))
    q = np.zeros(mdp.flat.num_actions_total)
    residual = math.inf
    for sweep in range(1, max_sweeps + 1):
        q_new = bellman_backup(mdp, q, gamma)
        residual = float(np.max(np.abs(q_new - q)))
        q = q_new
        # |Q' - T Q'| <= gamma |Q - Q'|, so this guarantees the residual contract
        if residual <= tol:
            return q
    raise ConvergenceError(
        f"value iteration did not converge in {max_sweeps} sweeps "
        f"(last residual {residual:.3e})", residual, max_sweeps)


def q_by_state(mdp, q):
    """Split a flat Q vector into per-state lists."""
    starts = mdp.flat.action_start
    return [list(q[starts[s]:starts[s + 1]]) for s in range(mdp.num_states)]


def _num(x):
    return format(x, ".17g")


def to_text(mdp):
    """Serialise to the ``mdp-v1`` JSON document (17 significant digits)."""
    lines = ["{", f'  "schema": "{SCHEMA}",', f'  "num_states": {mdp.num_states},',
             '  "states": [']
    for s, acts in enumerate(mdp.outcomes):
        rendered = []
        for outs in acts:
            items = ", ".join(f"[{o.next_state}, {_num(o.probability)}, {_num(o.reward)}]"
                              for o in outs)
            rendered.append(f"[{items}]")
        sep = "," if s < mdp.num_states - 1 else ""
        lines.append('    {"actions": [' + ", ".join(rendered) + "]}" + sep)
    lines.append("  ]")
    lines.append("}")
    return "\n".join(lines) + "\n"


def from_text(text):
    doc = json.loads(text)
    if doc.get("schema") != SCHEMA:
        raise InvalidArgumentError(f"unsupported schema {doc.get('schema')!r}")
    states = doc["states"]
    if len(states) != doc["num_states"]:
        raise InvalidArgumentError("num_states does not match the state list")
    return TabularMdp.from_lists([st["actions"] for st in states])


def write_mdp(mdp, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(to_text(mdp))


def read_mdp(path):
    with open(path, encoding="utf-8") as fh:
        return from_text(fh.read())
