"""Posterior over outcome-probability vectors given observed counts.

Counts are plain integer sequences; by convention the agents append one
trailing zero for the hypothetical unknown outcome (see :func:`with_unknown`).
Under a uniform prior on the simplex the posterior is proportional to
``prod p_i ** n_i``, i.e. Dirichlet(n_i + 1).

Samplers
--------
``paper_rejection``
    Propose independent uniforms, normalise, accept when a fresh uniform is
    below the MLE-normalised likelihood.  The normalised-uniform proposal is
    not uniform on the simplex: its density is ``(max_i p_i) ** -K / K``.
``exact_dirichlet``
    Gamma(n_i + 1) draws normalised to one; the exact posterior.
``paper_target``
    Same target distribution as ``paper_rejection`` (posterior times the
    proposal density above), drawn by proposing from the exact Dirichlet and
    accepting with probability ``(1 / (K max_i p_i)) ** K``.  Its acceptance
    rate does not decay with the counts, which makes long runs affordable.

Rejection samplers stop after ``RETRY_CAP`` proposals and return the
posterior centre instead, counting the event in :class:`SamplerDiagnostics`.
"""

import math
from dataclasses import dataclass

from .errors import InvalidArgumentError

PAPER_REJECTION = "paper_rejection"
EXACT_DIRICHLET = "exact_dirichlet"
PAPER_TARGET = "paper_target"
SAMPLER_MODES = (PAPER_REJECTION, EXACT_DIRICHLET, PAPER_TARGET)
SAMPLER_CODES = {PAPER_REJECTION: 0, EXACT_DIRICHLET: 1, PAPER_TARGET: 2}
RETRY_CAP = 10_000


@dataclass
class SamplerDiagnostics:
    fallbacks: int = 0


def with_unknown(observed):
    """Counts for the observed outcomes plus the trailing unknown slot."""
    return tuple(observed) + (0,)


def _check_counts(counts):
    if len(counts) < 1:
        raise InvalidArgumentError("counts must have at least one slot")
    if any(c < 0 for c in counts):
        raise InvalidArgumentError("counts must be non-negative")


def joint_likelihood(p, counts):
    """``prod p_i ** n_i`` divided by its maximum over the simplex.

    The maximum sits at ``p_i = n_i / n`` (with ``0 ** 0 == 1``), so the result
    lies in [0, 1] and is exactly 1 when no observations exist.
    """
    if len(p) != len(counts):
        raise InvalidArgumentError(
            f"length mismatch: {len(p)} probabilities vs {len(counts)} counts")
    return _likelihood(p, counts, sum(counts))


def _likelihood(p, counts, n):
    if n == 0:
        return 1.0
    log_l = 0.0
    for pi, ni in zip(p, counts):
        if ni > 0:
            if pi <= 0.0:
                return 0.0
            log_l += ni * (math.log(pi) - math.log(ni / n))
    if log_l >= 0.0:
        return 1.0
    return math.exp(log_l)


def unknown_mass_mean(n):
    """Mean of the density proportional to ``(1 - p) ** n`` on [0, 1]."""
    if n < 0:
        raise InvalidArgumentError("n must be non-negative")
    return 1.0 / (n + 2.0)


def posterior_centre(counts, unknown_slot=True):
    """MLE frequencies, with the unknown slot given its posterior-mean mass."""
    n = sum(counts)
    k = len(counts)
    if n == 0:
        return [1.0 / k] * k
    if unknown_slot:
        w = unknown_mass_mean(n)
        keep = 1.0 - w
        p = [keep * (c / n) for c in counts[:-1]]
        p.append(w)
        return p
    return [c / n for c in counts]


def _dirichlet(counts, rng):
    g = [rng.gamma(c + 1.0) for c in counts]
    total = 0.0
    for x in g:
        total += x
    return [x / total for x in g]


def sample_simplex(counts, rng, mode=PAPER_REJECTION, *, unknown_slot=True,
                   diagnostics=None):
    """Draw one probability vector from the posterior given ``counts``.

    Parameters
    ----------
    counts : sequence of int
        Observation counts; when ``unknown_slot`` the last entry is the
        unknown outcome (count 0).
    rng : RandomSource
    mode : str
        One of ``SAMPLER_MODES``.
    diagnostics : SamplerDiagnostics, optional
        Incremented when a rejection sampler exhausts ``RETRY_CAP``.
    """
    _check_counts(counts)
    k = len(counts)
    n = sum(counts)
    if mode == EXACT_DIRICHLET:
        return _dirichlet(counts, rng)
    if mode == PAPER_REJECTION:
        for _ in range(RETRY_CAP):
            u = [rng.uniform() for _ in range(k)]
            total = 0.0
            for x in u:
                total += x
            if total <= 0.0:
                continue
            p = [x / total for x in u]
            if rng.uniform() < _likelihood(p, counts, n):
                return p
    elif mode == PAPER_TARGET:
        for _ in range(RETRY_CAP):
            p = _dirichlet(counts, rng)
            ratio = 1.0 / (k * max(p))
            if rng.uniform() < ratio ** k:
                return p
    else:
        raise InvalidArgumentError(f"unknown sampler mode {mode!r}")
    if diagnostics is not None:
        diagnostics.fallbacks += 1
    return posterior_centre(counts, unknown_slot)
