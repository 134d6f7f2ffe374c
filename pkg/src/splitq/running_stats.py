"""Online mean / variance accumulators.

Two modes share one three-number state ``(count, mean, second)``:

``cumulative``
    Welford's recurrence; ``second`` is the sum of squared deviations and the
    reported variance is the population variance ``second / count``.
``ewma``
    Exponentially weighted moments with weight ``beta`` on the newest value;
    ``second`` is the running E[x^2].  The first push sets both moments.

The module-level ``push_state``/``variance_of`` functions are the reference
recurrences; the compiled kernel mirrors them operation for operation.
"""

import math
from dataclasses import dataclass

from .errors import InvalidArgumentError

CUMULATIVE = "cumulative"
EWMA = "ewma"


def push_state(ewma, beta, count, mean, second, x):
    count += 1
    if ewma:
        if count == 1:
            return count, x, x * x
        keep = 1.0 - beta
        return count, keep * mean + beta * x, keep * second + beta * (x * x)
    delta = x - mean
    mean = mean + delta / count
    return count, mean, second + delta * (x - mean)


def variance_of(ewma, count, mean, second):
    if count == 0:
        return 0.0
    var = second - mean * mean if ewma else second / count
    return var if var > 0.0 else 0.0


def std_from_state(ewma, count, mean, second, sigma_init):
    if count < 2:
        return sigma_init
    return math.sqrt(variance_of(ewma, count, mean, second))


@dataclass
class MeanVarAccumulator:
    mode: str = CUMULATIVE
    beta: float = 1.0
    count: int = 0
    mean: float = 0.0
    second: float = 0.0

    def __post_init__(self):
        if self.mode not in (CUMULATIVE, EWMA):
            raise InvalidArgumentError(f"unknown accumulator mode {self.mode!r}")
        if self.mode == EWMA and not 0.0 < self.beta <= 1.0:
            raise InvalidArgumentError(f"ewma beta must lie in (0, 1], got {self.beta}")

    @property
    def is_ewma(self):
        return self.mode == EWMA

    def push(self, x):
        if not math.isfinite(x):
            raise InvalidArgumentError(f"cannot accumulate non-finite value {x!r}")
        self.count, self.mean, self.second = push_state(
            self.is_ewma, self.beta, self.count, self.mean, self.second, x)
        return self

    def extend(self, xs):
        for x in xs:
            self.push(x)
        return self

    @property
    def variance(self):
        return variance_of(self.is_ewma, self.count, self.mean, self.second)

    def std_dev(self, sigma_init):
        """Standard deviation, or ``sigma_init`` while fewer than two values are in."""
        if sigma_init < 0:
            raise InvalidArgumentError("sigma_init must be non-negative")
        return std_from_state(self.is_ewma, self.count, self.mean, self.second, sigma_init)


def push(acc, x):
    return acc.push(x)


def std_dev(acc, sigma_init):
    return acc.std_dev(sigma_init)
