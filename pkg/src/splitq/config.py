"""Experiment config files: ``key = value`` lines under ``[section]`` headers.

Sections are ``[environment]``, ``[experiment]`` and one ``[agent NAME]``
per agent.  Inside an agent section ``agent = <kind>`` picks the learner and
every :class:`~splitq.agents.AgentConfig` field may be set.  Blank lines and
lines starting with ``#`` or ``;`` are ignored.

Example::

    [environment]
    m = 5
    n = 4

    [experiment]
    trials = 1000

    [agent q]
    agent = q_learning
    epsilon_off_step = 10000

``never`` is accepted for ``epsilon_off_step`` and ``auto`` for any field
whose default is derived.  ``r_max``/``r_min`` default to the environment's
reward bounds.  :func:`dump_config` writes the fully resolved config back in
the same syntax; parsing that output reproduces an equal config.
"""

import math
import os
from dataclasses import fields

from .agents import AGENT_KINDS, ALPHA_SCHEDULES, AgentConfig
from .errors import (
    ConfigFileNotFound,
    ConfigSyntaxError,
    InvalidArgumentError,
    OutOfRangeError,
    UnknownKeyError,
)
from .harness import AgentSpec, ExperimentConfig
from .layered import LayeredConfig
from .posterior import SAMPLER_MODES
from .running_stats import CUMULATIVE, EWMA

RESOLVED_NAME = "resolved_config.cfg"

_ENV_KEYS = {"m": int, "n": int, "k": int, "reward_low": float, "reward_high": float, "seed": int}
_EXP_KEYS = {"steps": int, "trials": int, "master_seed": int, "smoothing_window": int,
             "output_path": str}
# config-file spelling -> AgentConfig field
_AGENT_ALIASES = {"sampler": "sampler_mode"}
_AGENT_TYPES = {
    "alpha": float, "gamma": float, "epsilon": float, "epsilon_off_step": "step",
    "r_max": float, "r_min": float, "sigma_init": "opt_float", "ewma_beta": "opt_float",
    "sampler_mode": SAMPLER_MODES, "unknown_enabled": "opt_bool",
    "alpha_schedule": ("auto",) + ALPHA_SCHEDULES, "accumulator": (EWMA, CUMULATIVE),
    "known_probabilities": bool,
}
assert set(_AGENT_TYPES) == {f.name for f in fields(AgentConfig)}

_BOOLS = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _convert(key, raw, kind):
    try:
        if kind is int:
            return int(raw, 0)
        if kind is float:
            v = float(raw)
            if not math.isfinite(v):
                raise OutOfRangeError(key, raw, "a finite number")
            return v
        if kind is str:
            return raw
        if kind is bool:
            return _BOOLS[raw.lower()]
        if kind == "step":
            return None if raw.lower() == "never" else int(raw, 0)
        if kind == "opt_float":
            return None if raw.lower() == "auto" else _convert(key, raw, float)
        if kind == "opt_bool":
            return None if raw.lower() == "auto" else _BOOLS[raw.lower()]
        if isinstance(kind, tuple):
            if raw not in kind:
                raise OutOfRangeError(key, raw, " | ".join(kind))
            return None if raw == "auto" else raw
    except (ValueError, KeyError):
        pass
    else:
        raise AssertionError(kind)
    expected = {int: "an integer", float: "a number", bool: "true | false",
                "step": "an integer or 'never'", "opt_float": "a number or 'auto'",
                "opt_bool": "true | false | auto"}[kind]
    raise OutOfRangeError(key, raw, expected)


def _tokenise(text):
    """Yield ``(line_no, section, key, value)``; ``key`` is None for headers."""
    section = None
    for no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ConfigSyntaxError(f"malformed section header {line!r}", no)
            section = " ".join(line[1:-1].split())
            yield no, section, None, None
            continue
        if "=" not in line:
            raise ConfigSyntaxError(f"expected 'key = value', got {line!r}", no)
        if section is None:
            raise ConfigSyntaxError("key outside of any [section]", no)
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigSyntaxError("empty key", no)
        if not value:
            raise ConfigSyntaxError(f"empty value for {key!r}", no)
        yield no, section, key, value


def parse_config_text(text, require_agents=True):
    env_vals, exp_vals = {}, {}
    agents = {}          # name -> (kind, {field: value}, header line)
    seen = set()
    current = None
    for no, section, key, value in _tokenise(text):
        if key is None:
            if section in ("environment", "experiment"):
                current = section
            elif section.startswith("agent "):
                name = section[len("agent "):].strip()
                if name in agents:
                    raise ConfigSyntaxError(f"duplicate agent section {name!r}", no)
                agents[name] = [None, {}, no]
                current = name
            else:
                raise ConfigSyntaxError(f"unknown section [{section}]", no)
            continue
        if (section, key) in seen:
            raise ConfigSyntaxError(f"duplicate key {key!r} in [{section}]", no)
        seen.add((section, key))
        if current == "environment":
            if key not in _ENV_KEYS:
                raise UnknownKeyError(section, key, no)
            env_vals[key] = _convert(key, value, _ENV_KEYS[key])
        elif current == "experiment":
            if key not in _EXP_KEYS:
                raise UnknownKeyError(section, key, no)
            exp_vals[key] = _convert(key, value, _EXP_KEYS[key])
        else:
            entry = agents[current]
            if key == "agent":
                entry[0] = _convert(key, value, AGENT_KINDS)
                continue
            name = _AGENT_ALIASES.get(key, key)
            if name not in _AGENT_TYPES:
                raise UnknownKeyError(section, key, no)
            entry[1][name] = _convert(key, value, _AGENT_TYPES[name])

    env = LayeredConfig(**env_vals)
    _check_env(env)
    specs = []
    for name, (kind, vals, line) in agents.items():
        if kind is None:
            raise ConfigSyntaxError(f"[agent {name}] has no 'agent = <kind>' line", line)
        vals.setdefault("r_max", env.reward_high)
        vals.setdefault("r_min", env.reward_low)
        cfg = AgentConfig(**vals)
        _check_agent(cfg)
        specs.append(AgentSpec(name, kind, cfg.resolved(kind)))
    if not specs and require_agents:
        raise ConfigSyntaxError("no [agent NAME] section", 1)
    exp = ExperimentConfig(env=env, agents=tuple(specs), **exp_vals)
    _check_experiment(exp)
    return exp


def parse_config(path, require_agents=True):
    """Read and resolve an experiment config file.

    With ``require_agents=False`` a file holding only ``[environment]`` is
    accepted (used by ``gen-env``).
    """
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError:
        raise ConfigFileNotFound(f"config file not found: {path}") from None
    return parse_config_text(text, require_agents)


def _check_env(env):
    for key, ok, bound in [
        ("m", env.m >= 1, "m >= 1"),
        ("n", env.n >= 2, "n >= 2"),
        ("k", env.k >= 1, "k >= 1"),
        ("reward_high", env.reward_high >= env.reward_low, ">= reward_low"),
    ]:
        if not ok:
            raise OutOfRangeError(key, getattr(env, key), bound)


def _check_agent(cfg):
    for key, ok, bound in cfg.range_checks():
        if not ok:
            raise OutOfRangeError(key, getattr(cfg, key), bound)
    try:
        cfg.q_max
    except InvalidArgumentError:
        raise OutOfRangeError("gamma", cfg.gamma, "gamma < 1") from None


def _check_experiment(exp):
    for key, ok, bound in [
        ("steps", exp.steps >= 1, "steps >= 1"),
        ("trials", exp.trials >= 1, "trials >= 1"),
        ("smoothing_window", exp.smoothing_window >= 1, "smoothing_window >= 1"),
    ]:
        if not ok:
            raise OutOfRangeError(key, getattr(exp, key), bound)


def _fmt(value):
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(exp):
    """Resolved config text; ``parse_config_text(dump_config(c)) == c``."""
    lines = ["[environment]"]
    lines += [f"{f.name} = {_fmt(getattr(exp.env, f.name))}" for f in fields(exp.env)]
    lines += ["", "[experiment]"]
    lines += [f"{k} = {_fmt(getattr(exp, k))}" for k in _EXP_KEYS]
    for spec in exp.agents:
        lines += ["", f"[agent {spec.name}]", f"agent = {spec.kind}"]
        for f in fields(spec.config):
            value = getattr(spec.config, f.name)
            key = "sampler" if f.name == "sampler_mode" else f.name
            if f.name == "epsilon_off_step" and value is None:
                text = "never"
            else:
                text = _fmt(value)
            lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


def write_resolved(exp, out_dir):
    path = os.path.join(out_dir, RESOLVED_NAME)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dump_config(exp))
    return path
