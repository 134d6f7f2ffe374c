"""``splitq`` command line: ``gen-env``, ``run`` and ``plot``.

Exit status is 0 on success, 2 for usage errors (unknown subcommand or
flag, reported by argparse) and 1 for any other failure, which is reported
as a single ``splitq: error: ...`` line on stderr.
"""

import argparse
import os
import sys

from .config import RESOLVED_NAME, parse_config, write_resolved
from .errors import SplitQError
from .harness import run_experiment
from .layered import generate
from .mdp import write_mdp
from .reporting import default_paths, read_csv, render_svg, write_csv

DIAGNOSTICS_NAME = "diagnostics.txt"


def build_parser():
    parser = argparse.ArgumentParser(prog="splitq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("gen-env", help="generate one layered environment (mdp-v1 file)")
    p.add_argument("--config", required=True, metavar="C")
    p.add_argument("--out", required=True, metavar="P")

    p = sub.add_parser("run", help="run an experiment: CSV, SVG, resolved config, diagnostics")
    p.add_argument("--config", required=True, metavar="C")
    p.add_argument("--out-dir", required=True, metavar="D")
    p.add_argument("--workers", type=int, default=1, metavar="N")

    p = sub.add_parser("plot", help="re-render the SVG chart from a CSV file")
    p.add_argument("--csv", required=True, metavar="F")
    p.add_argument("--out", required=True, metavar="P")
    p.add_argument("--config", metavar="C",
                   help=f"resolved config for smoothing and markers "
                        f"(default: {RESOLVED_NAME} next to the CSV, if present)")
    return parser


def _cmd_gen_env(args):
    exp = parse_config(args.config, require_agents=False)
    mdp = generate(exp.env)
    write_mdp(mdp, args.out)
    print(f"wrote {args.out} ({mdp.num_states} states, digest {mdp.digest[:16]})")


def _chart(csv_path, svg_path, exp):
    """Render from the CSV so ``run`` and ``plot`` produce identical bytes."""
    curves = read_csv(csv_path)
    window = 1
    if exp is not None:
        off = {a.name: a.config.epsilon_off_step for a in exp.agents}
        for c in curves:
            c.epsilon_off_step = off.get(c.agent)
        window = exp.smoothing_window
    render_svg(curves, svg_path, window)


def _diagnostics(exp, result):
    lines = [f"config_digest = {exp.digest}",
             f"trials = {exp.trials}",
             f"steps = {exp.steps}",
             f"distinct_environments = {len(set(result.env_digests))}"]
    for c in result.curves:
        tail = c.mean[len(c.mean) // 2:]
        lines.append(f"agent {c.agent}: sampler_fallbacks = {result.fallbacks[c.agent]}, "
                     f"mean_reward_second_half = {tail.mean():.9g}")
    return "\n".join(lines) + "\n"


def _cmd_run(args):
    if args.workers < 1:
        raise SplitQError("--workers must be >= 1")
    exp = parse_config(args.config)
    os.makedirs(args.out_dir, exist_ok=True)
    write_resolved(exp, args.out_dir)
    result = run_experiment(exp, workers=args.workers)
    csv_path, svg_path = default_paths(args.out_dir)
    write_csv(result.curves, csv_path)
    _chart(csv_path, svg_path, exp)
    text = _diagnostics(exp, result)
    with open(os.path.join(args.out_dir, DIAGNOSTICS_NAME), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write(text)
    sys.stdout.write(text)


def _cmd_plot(args):
    cfg_path = args.config
    if cfg_path is None:
        guess = os.path.join(os.path.dirname(os.path.abspath(args.csv)), RESOLVED_NAME)
        cfg_path = guess if os.path.exists(guess) else None
    exp = parse_config(cfg_path) if cfg_path else None
    _chart(args.csv, args.out, exp)
    print(f"wrote {args.out}")


COMMANDS = {"gen-env": _cmd_gen_env, "run": _cmd_run, "plot": _cmd_plot}


def main(argv=None):
    args = build_parser().parse_args(argv)   # exits 2 on usage errors
    try:
        COMMANDS[args.command](args)
    except (SplitQError, OSError, ValueError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"splitq: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
