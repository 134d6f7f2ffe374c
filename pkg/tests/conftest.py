import math

import numpy as np
import pytest

from splitq.mdp import Outcome, TabularMdp


def random_mdp(rng, num_states=6, num_actions=2, successors=3):
    """Dense random MDP: every (s, a) has ``successors`` distinct targets."""
    states = []
    for _ in range(num_states):
        actions = []
        for _ in range(num_actions):
            targets = rng.choice(num_states, size=successors, replace=False)
            probs = rng.dirichlet(np.ones(successors))
            probs[-1] = 1.0 - probs[:-1].sum()
            rewards = rng.uniform(0.0, 1.0, size=successors)
            actions.append([Outcome(int(t), float(p), float(r))
                            for t, p, r in zip(targets, probs, rewards)])
        states.append(actions)
    return TabularMdp.from_lists(states)


def is_communicating(mdp):
    """Every state reachable from every other through positive-probability outcomes."""
    n = mdp.num_states
    succ = [{o.next_state for outs in acts for o in outs} for acts in mdp.outcomes]
    pred = [set() for _ in range(n)]
    for s, targets in enumerate(succ):
        for t in targets:
            pred[t].add(s)

    def closure(edges):
        seen, stack = {0}, [0]
        while stack:
            for t in edges[stack.pop()]:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return len(seen) == n

    return closure(succ) and closure(pred)


def random_communicating_mdp(rng, num_states=6, num_actions=2, successors=3):
    """:func:`random_mdp` redrawn until every state keeps being revisited."""
    while True:
        mdp = random_mdp(rng, num_states, num_actions, successors)
        if is_communicating(mdp):
            return mdp


def binomial_interval(n, p, z=3.290527):
    """Two-sided 99.9% normal-approximation interval for a count out of ``n``."""
    sd = math.sqrt(n * p * (1 - p))
    return n * p - z * sd, n * p + z * sd


@pytest.fixture
def np_rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
