import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from splitq.errors import InvalidArgumentError
from splitq.layered import LayeredConfig, generate, level_of
from splitq.mdp import to_text, validate


def test_paper_scale_shape():
    mdp = generate(LayeredConfig(m=20, n=10, k=2, seed=3))
    assert mdp.num_states == 201
    assert mdp.num_actions(0) == 10
    for s in range(1, 1 + 19 * 10):
        assert mdp.num_actions(s) == 2
        assert all(len(outs) == 2 for outs in mdp.outcomes[s])
    assert validate(mdp) == []


def test_same_seed_byte_identical():
    cfg = LayeredConfig(m=4, n=3, k=2, seed=11)
    assert to_text(generate(cfg)) == to_text(generate(cfg))
    assert to_text(generate(cfg)) != to_text(generate(cfg, seed=12))


def test_single_level_ignores_k():
    mdp = generate(LayeredConfig(m=1, n=2, k=3, seed=1))
    assert mdp.num_states == 3
    assert mdp.num_actions(0) == 2
    for s in (1, 2):
        assert mdp.num_actions(s) == 1
        (o,) = mdp.outcomes[s][0]
        assert o.next_state == 0 and o.probability == 1.0


def test_level_zero_is_deterministic_onto_level_one():
    cfg = LayeredConfig(m=3, n=4, k=2, seed=5)
    mdp = generate(cfg)
    assert [outs[0].next_state for outs in mdp.outcomes[0]] == [1, 2, 3, 4]
    assert all(len(outs) == 1 and outs[0].probability == 1.0 for outs in mdp.outcomes[0])


@pytest.mark.parametrize("bad", [dict(m=0), dict(n=1), dict(k=0),
                                 dict(reward_low=1.0, reward_high=0.0)])
def test_invalid_config(bad):
    with pytest.raises(InvalidArgumentError):
        generate(LayeredConfig(**bad))


@settings(max_examples=60, deadline=None)
@given(m=st.integers(1, 6), n=st.integers(2, 6), k=st.integers(1, 4),
       seed=st.integers(0, 2**64 - 1), low=st.floats(-5, 5), width=st.floats(0, 5))
def test_structure_properties(m, n, k, seed, low, width):
    cfg = LayeredConfig(m=m, n=n, k=k, reward_low=low, reward_high=low + width, seed=seed)
    mdp = generate(cfg)
    assert mdp.num_states == 1 + m * n
    assert validate(mdp) == []
    for s, acts in enumerate(mdp.outcomes):
        level = level_of(cfg, s)
        expected = n if level == 0 else (1 if level == m else k)
        assert len(acts) == expected
        for outs in acts:
            for o in outs:
                assert low <= o.reward <= low + width
                assert level_of(cfg, o.next_state) == (level + 1) % (m + 1)
            if 0 < level < m:
                a, b = outs
                assert a.next_state != b.next_state
                assert 0.0 < a.probability < 1.0
                assert a.probability + b.probability == 1.0


def test_every_trajectory_returns_after_full_cycle():
    cfg = LayeredConfig(m=4, n=3, k=2, seed=9)
    mdp = generate(cfg)
    for start in range(mdp.num_states):
        frontier = {start}
        steps_needed = cfg.m + 1 - level_of(cfg, start)
        for i in range(steps_needed):
            if i > 0 or start != 0:
                assert 0 not in frontier
            frontier = {o.next_state for s in frontier for outs in mdp.outcomes[s] for o in outs}
        assert frontier == {0}
