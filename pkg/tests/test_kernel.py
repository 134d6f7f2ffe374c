import copy

import numpy as np
import pytest

from conftest import random_mdp
from splitq.agents import AGENT_KINDS, AgentConfig
from splitq.errors import InvalidArgumentError
from splitq.kernel import BACKENDS, run_agent
from splitq.layered import LayeredConfig, generate
from splitq.mdp import TabularMdp
from splitq.posterior import SAMPLER_MODES
from splitq.rng import RandomSource

needs_compiled = pytest.mark.skipif("compiled" not in BACKENDS, reason="extension not built")


class ScriptedRandom(RandomSource):
    """Replays a fixed list of uniforms (integers derive from them)."""

    __slots__ = ("script",)

    def __init__(self, values):
        super().__init__(0)
        self.script = list(values)

    def uniform(self):
        return self.script.pop(0)


def three_state():
    return TabularMdp.from_lists([
        [[(1, 0.5, 1.0), (2, 0.5, 0.0)], [(2, 1.0, 0.5)]],
        [[(0, 1.0, 0.0)]],
        [[(0, 1.0, 0.0)]],
    ])


def test_hand_traced_four_steps():
    cfg = AgentConfig(alpha=1.0, gamma=0.0, epsilon=0.5)
    script = [0.9, 0.2, 0.0,     # s0: greedy, tie of (1, 1) -> a1; -> s2, r 0.5
              0.9, 0.3,          # s2: greedy single action; -> s0, r 0
              0.1, 0.2, 0.4,     # s0: explore, a0; u=0.4 < 0.5 -> s1, r 1
              0.9, 0.5]          # s1: -> s0, r 0
    run = run_agent(three_state(), "q_learning", cfg, 4, ScriptedRandom(script),
                    backend="python")
    assert list(run.rewards) == [0.5, 0.0, 1.0, 0.0]
    assert list(run.table.q) == [1.0, 0.5, 0.0, 0.0]
    assert list(run.table.visits) == [1, 1, 1, 1]
    assert run.final_state == 0


@pytest.mark.parametrize("kind", AGENT_KINDS)
def test_deterministic_chain_rewards(kind):
    mdp = TabularMdp.from_lists([[[(1, 1.0, 0.1)]], [[(2, 1.0, 0.2)]], [[(0, 1.0, 0.3)]]])
    cfg = AgentConfig(epsilon=0.0, sampler_mode="exact_dirichlet")
    warm = run_agent(mdp, kind, cfg, 300, 1)
    run = run_agent(mdp, kind, cfg, 5, 2, table=warm.table, start_state=warm.final_state)
    assert list(run.rewards) == [0.1, 0.2, 0.3, 0.1, 0.2]


@pytest.mark.parametrize("kind", AGENT_KINDS)
def test_same_seed_same_rewards(kind):
    env = generate(LayeredConfig(m=3, n=3, k=2), seed=4)
    cfg = AgentConfig(sampler_mode="paper_target", epsilon_off_step=200)
    a = run_agent(env, kind, cfg, 500, 77).rewards
    b = run_agent(env, kind, cfg, 500, 77).rewards
    assert np.array_equal(a, b)


def test_unknown_kind_and_backend():
    env = generate(LayeredConfig(m=1, n=2))
    with pytest.raises(InvalidArgumentError):
        run_agent(env, "sarsa", AgentConfig(), 10, 0)
    with pytest.raises(InvalidArgumentError):
        run_agent(env, "q_learning", AgentConfig(), 10, 0, backend="gpu")


def _variants():
    yield "q_learning", AgentConfig(epsilon_off_step=250)
    yield "q_learning", AgentConfig(alpha_schedule="inverse_count", gamma=0.5)
    for mode in SAMPLER_MODES:
        yield "uncertain_split_q", AgentConfig(sampler_mode=mode)
    yield "uncertain_split_q", AgentConfig(sampler_mode="exact_dirichlet", accumulator="cumulative",
                                           unknown_enabled=False, sigma_init=0.0)
    yield "split_q", AgentConfig(epsilon_off_step=250)
    yield "split_q", AgentConfig(unknown_enabled=True, alpha_schedule="constant",
                                 epsilon_off_step=300)
    yield "split_q", AgentConfig(alpha_schedule="inverse_count", known_probabilities=True,
                                 epsilon=0.2)


@needs_compiled
@pytest.mark.parametrize("kind,cfg", list(_variants()))
def test_backends_bit_identical(kind, cfg):
    envs = [generate(LayeredConfig(m=3, n=4, k=2), seed=9),
            random_mdp(np.random.default_rng(3), 5, 2, 3)]
    for env in envs:
        rp, rc = RandomSource(123), RandomSource(123)
        py = run_agent(env, kind, cfg, 600, rp, backend="python")
        cc = run_agent(env, kind, cfg, 600, rc, backend="compiled")
        assert np.array_equal(py.rewards, cc.rewards)
        assert np.array_equal(py.table.q, cc.table.q)
        assert py.final_state == cc.final_state and py.fallbacks == cc.fallbacks
        assert rp.state == rc.state
        if kind != "q_learning":
            for name in ("n", "acc_count", "acc_mean", "acc_second", "sa_n"):
                assert np.array_equal(getattr(py.table, name), getattr(cc.table, name))


@needs_compiled
def test_backends_agree_when_continuing_a_table():
    env = generate(LayeredConfig(m=2, n=3, k=2), seed=2)
    cfg = AgentConfig(sampler_mode="paper_target")
    first = run_agent(env, "uncertain_split_q", cfg, 200, 5, backend="compiled")
    table_py = first.table
    table_c = copy.deepcopy(first.table)
    a = run_agent(env, "uncertain_split_q", cfg, 200, 6, table=table_py,
                  start_state=first.final_state, backend="python")
    b = run_agent(env, "uncertain_split_q", cfg, 200, 6, table=table_c,
                  start_state=first.final_state, backend="compiled")
    assert np.array_equal(a.rewards, b.rewards)
