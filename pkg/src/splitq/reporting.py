"""CSV and SVG output for reward curves.

CSV rows are ``step,agent,mean_reward,stderr_reward`` grouped by agent in
curve order, steps counted from 0, reals printed with 9 significant digits.
The SVG is a single static line chart written by hand (no plotting
dependency) so that identical curves always give identical bytes.
"""

import csv
import math
import os
import re
from html import escape

import numpy as np

from .errors import InvalidArgumentError
from .harness import RewardCurve, smooth

HEADER = ("step", "agent", "mean_reward", "stderr_reward")
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")

WIDTH, HEIGHT = 800, 500
LEFT, RIGHT, TOP, BOTTOM = 70, 190, 30, 55


def _g9(x):
    return "%.9g" % x


def write_csv(curves, path):
    if not curves:
        raise InvalidArgumentError("no curves to write")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for c in curves:
            for step, (m, se) in enumerate(zip(c.mean, c.stderr)):
                w.writerow((step, c.agent, _g9(m), _g9(se)))


def read_csv(path):
    """Curves in file order; ``epsilon_off_step`` and digest are not stored."""
    order, data = [], {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != HEADER:
            raise InvalidArgumentError(f"{path}: expected header {','.join(HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise InvalidArgumentError(f"{path}:{lineno}: expected 4 fields")
            step, agent = int(row[0]), row[1]
            if agent not in data:
                order.append(agent)
                data[agent] = ([], [])
            means, errs = data[agent]
            if step != len(means):
                raise InvalidArgumentError(
                    f"{path}:{lineno}: step {step} out of sequence for agent {agent!r}")
            means.append(float(row[2]))
            errs.append(float(row[3]))
    if not order:
        raise InvalidArgumentError(f"{path}: no data rows")
    return [RewardCurve(a, np.array(data[a][0]), np.array(data[a][1])) for a in order]


def nice_bounds(lo, hi, ticks=5):
    """Round ``[lo, hi]`` outwards to a tick grid; returns ``(lo, hi, step)``."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise InvalidArgumentError("curve values must be finite")
    if hi <= lo:
        pad = abs(lo) * 0.05 or 0.5
        lo, hi = lo - pad, hi + pad
    raw = (hi - lo) / ticks
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(f * mag for f in (1, 2, 2.5, 5, 10) if f * mag >= raw)
    return math.floor(lo / step) * step, math.ceil(hi / step) * step, step


def _fmt_tick(v, step):
    digits = max(0, -int(math.floor(math.log10(step))) + 1)
    text = f"{v:.{digits}f}".rstrip("0").rstrip(".")
    return "0" if text in ("-0", "") else text


def svg_text(curves, window=1):
    """The chart as a string; ``window`` > 1 plots non-overlapping block means."""
    if not curves:
        raise InvalidArgumentError("no curves to plot")
    series = []
    for c in curves:
        n = len(c.mean)
        ys = smooth(c.mean, window)
        xs = [min(i * window + (window - 1) / 2.0, n - 1) for i in range(len(ys))]
        series.append((c, xs, ys))
    x_max = max(len(c.mean) - 1 for c in curves) or 1
    y_lo, y_hi, y_step = nice_bounds(min(float(np.min(s[2])) for s in series),
                                     max(float(np.max(s[2])) for s in series))
    plot_w = WIDTH - LEFT - RIGHT
    plot_h = HEIGHT - TOP - BOTTOM

    def px(x):
        return LEFT + plot_w * x / x_max

    def py(y):
        return TOP + plot_h * (y_hi - y) / (y_hi - y_lo)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" data-y-min="{y_lo!r}" data-y-max="{y_hi!r}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>',
    ]
    # y ticks
    n_ticks = int(round((y_hi - y_lo) / y_step))
    for i in range(n_ticks + 1):
        v = y_lo + i * y_step
        y = py(v)
        out.append(f'<line x1="{LEFT - 5}" y1="{y:.2f}" x2="{LEFT}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y + 4:.2f}" font-size="11" text-anchor="end">'
                   f'{_fmt_tick(v, y_step)}</text>')
    # x ticks
    _, _, x_step = nice_bounds(0.0, float(x_max))
    v = 0.0
    while v <= x_max + 1e-9:
        x = px(v)
        out.append(f'<line x1="{x:.2f}" y1="{TOP + plot_h}" x2="{x:.2f}" y2="{TOP + plot_h + 5}" '
                   f'stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{TOP + plot_h + 18}" font-size="11" '
                   f'text-anchor="middle">{_fmt_tick(v, x_step)}</text>')
        v += x_step
    out.append(f'<text x="{LEFT + plot_w / 2:.2f}" y="{HEIGHT - 12}" font-size="13" '
               f'text-anchor="middle">step</text>')
    out.append(f'<text x="18" y="{TOP + plot_h / 2:.2f}" font-size="13" text-anchor="middle" '
               f'transform="rotate(-90 18 {TOP + plot_h / 2:.2f})">average reward</text>')

    for i, (c, xs, ys) in enumerate(series):
        colour = PALETTE[i % len(PALETTE)]
        if c.epsilon_off_step is not None and 0 <= c.epsilon_off_step <= x_max:
            x = px(c.epsilon_off_step)
            out.append(f'<line class="epsilon-off" data-agent="{escape(c.agent)}" '
                       f'x1="{x:.2f}" y1="{TOP}" x2="{x:.2f}" y2="{TOP + plot_h}" '
                       f'stroke="{colour}" stroke-dasharray="4 3"/>')
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        out.append(f'<polyline data-agent="{escape(c.agent)}" fill="none" stroke="{colour}" '
                   f'stroke-width="1.2" points="{pts}"/>')
        ly = TOP + 15 + 18 * i
        lx = WIDTH - RIGHT + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{colour}" '
                   f'stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}" font-size="12">{escape(c.agent)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_svg(curves, path, window=1):
    text = svg_text(curves, window)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def svg_y_bounds(text):
    """``(y_min, y_max)`` from the data attributes of a rendered chart."""
    lo = re.search(r'data-y-min="([^"]+)"', text)
    hi = re.search(r'data-y-max="([^"]+)"', text)
    if not (lo and hi):
        raise InvalidArgumentError("not a chart produced by render_svg")
    return float(lo.group(1)), float(hi.group(1))


def default_paths(out_dir):
    return os.path.join(out_dir, "curves.csv"), os.path.join(out_dir, "curves.svg")
