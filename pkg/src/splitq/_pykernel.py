"""Pure-Python trial loops, built directly on the reference functions."""

from .agents import (
    combined_values,
    epsilon_active,
    q_update,
    select_epsilon_greedy,
    select_uncertain,
    split_q_update,
)
from .mdp import sample_outcome
from .posterior import SamplerDiagnostics


def run_q(mdp, cfg, steps, start_state, rng, table, rewards_out):
    outcomes = mdp.outcomes
    s = start_state
    for step in range(steps):
        a = select_epsilon_greedy(table.values(s), cfg.epsilon, step, cfg, rng)
        outs = outcomes[s][a]
        o = outs[sample_outcome(outs, rng.uniform())]
        q_update(table, s, a, o.reward, o.next_state, cfg)
        rewards_out[step] = o.reward
        s = o.next_state
    return s


def run_split(uncertain, mdp, cfg, steps, start_state, rng, table, rewards_out):
    outcomes = mdp.outcomes
    diagnostics = SamplerDiagnostics()
    s = start_state
    for step in range(steps):
        if uncertain:
            unknown = bool(cfg.unknown_enabled)
            a = select_uncertain(table, s, cfg, rng, diagnostics)
        else:
            unknown = bool(cfg.unknown_enabled) and epsilon_active(cfg, step)
            values = combined_values(table, s, cfg, unknown)
            a = select_epsilon_greedy(values, cfg.epsilon, step, cfg, rng)
        outs = outcomes[s][a]
        o = outs[sample_outcome(outs, rng.uniform())]
        split_q_update(table, s, a, o.reward, o.next_state, cfg, unknown)
        rewards_out[step] = o.reward
        s = o.next_state
    return s, diagnostics.fallbacks
