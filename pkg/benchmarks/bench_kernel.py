"""Compiled kernel vs pure-Python fallback: per-trial wall time.

    python3 benchmarks/bench_kernel.py [--steps 20000] [--repeat 3]

Both backends run the same agent on the same environment with the same seed;
the script also checks that their reward sequences are identical.
"""

import argparse
import time

import numpy as np

from splitq.agents import AgentConfig
from splitq.kernel import BACKENDS, run_agent
from splitq.layered import LayeredConfig, generate

CASES = [
    ("q_learning", AgentConfig(epsilon_off_step=10_000)),
    ("split_q", AgentConfig(epsilon_off_step=10_000)),
    ("uncertain_split_q", AgentConfig(sampler_mode="exact_dirichlet")),
    ("uncertain_split_q", AgentConfig(sampler_mode="paper_target")),
]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--m", type=int, default=5)
    ap.add_argument("--n", type=int, default=4)
    args = ap.parse_args()

    if "compiled" not in BACKENDS:
        print("compiled extension not built; nothing to compare")
        return
    env = generate(LayeredConfig(m=args.m, n=args.n, k=2), seed=1)
    print(f"{'agent':<20}{'sampler':<17}{'python s':>10}{'compiled s':>12}{'speedup':>9}  identical")
    for kind, cfg in CASES:
        results = {}
        for backend in ("python", "compiled"):
            results[backend] = best_of(
                lambda b=backend: run_agent(env, kind, cfg, args.steps, 42, backend=b).rewards,
                args.repeat)
        tp, rp = results["python"]
        tc, rc = results["compiled"]
        sampler = cfg.sampler_mode if kind == "uncertain_split_q" else "-"
        print(f"{kind:<20}{sampler:<17}{tp:>10.3f}{tc:>12.4f}{tp / tc:>9.0f}  "
              f"{np.array_equal(rp, rc)}")


if __name__ == "__main__":
    main()
