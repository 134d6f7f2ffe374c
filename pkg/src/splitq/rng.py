"""Deterministic, platform-independent random source.

The generator is xoshiro256** (Blackman & Vigna) seeded by four successive
SplitMix64 outputs.  Every derived distribution is built from explicit
integer arithmetic and libm ``log``/``sqrt``/``exp`` so that the compiled
kernel, which re-implements the same recurrences in C, reproduces this
module bit for bit.

Derived variates
----------------
uniform         ``(x >> 11) * 2**-53``, in [0, 1)
uniform_open    ``((x >> 11) + 0.5) * 2**-53``, in (0, 1)
integers(n)     ``int(uniform() * n)``
normal          Marsaglia polar method, second variate discarded
gamma(k >= 1)   Marsaglia-Tsang squeeze

Stream splitting
----------------
``derive_seed(master, *tags)`` folds integer tags into a 64-bit seed with the
SplitMix64 finalizer; it is used to give each (trial, role) pair its own
independent stream instead of sequential seeds.
"""

import math

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_TWO_M53 = 1.0 / 9007199254740992.0


def _mix64(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64(state):
    """Advance a SplitMix64 state; returns ``(new_state, output)``."""
    state = (state + GOLDEN) & MASK64
    return state, _mix64(state)


def derive_seed(master, *tags):
    """Fold integer ``tags`` into ``master`` to get an independent 64-bit seed."""
    h = _mix64((master + GOLDEN) & MASK64)
    for tag in tags:
        h = _mix64((h ^ _mix64((tag + GOLDEN) & MASK64)) & MASK64)
    return h


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK64


class RandomSource:
    """Single-owner xoshiro256** generator.

    Never share an instance between workers; derive a fresh seed instead.
    """

    __slots__ = ("_s0", "_s1", "_s2", "_s3")

    def __init__(self, seed=0):
        sm = seed & MASK64
        words = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            words.append(out)
        self._s0, self._s1, self._s2, self._s3 = words

    @classmethod
    def from_state(cls, state):
        rng = cls.__new__(cls)
        rng.state = state
        return rng

    @property
    def state(self):
        return (self._s0, self._s1, self._s2, self._s3)

    @state.setter
    def state(self, value):
        s = tuple(int(v) & MASK64 for v in value)
        if len(s) != 4 or not any(s):
            raise ValueError("xoshiro256 state must be four words, not all zero")
        self._s0, self._s1, self._s2, self._s3 = s

    def spawn(self, tag):
        """Child generator whose seed depends on this stream's next output and ``tag``."""
        return RandomSource(derive_seed(self.next_u64(), tag))

    def next_u64(self):
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        return result

    def uniform(self):
        return (self.next_u64() >> 11) * _TWO_M53

    def uniform_open(self):
        return ((self.next_u64() >> 11) + 0.5) * _TWO_M53

    def integers(self, n):
        """Integer in ``[0, n)``."""
        return int(self.uniform() * n)

    def normal(self):
        while True:
            u = 2.0 * self.uniform() - 1.0
            v = 2.0 * self.uniform() - 1.0
            s = u * u + v * v
            if 0.0 < s < 1.0:
                return u * math.sqrt(-2.0 * math.log(s) / s)

    def gamma(self, shape):
        """Unit-scale gamma variate; ``shape`` must be at least 1."""
        if shape < 1.0:
            raise ValueError("gamma sampler requires shape >= 1")
        d = shape - 1.0 / 3.0
        c = 1.0 / math.sqrt(9.0 * d)
        while True:
            x = self.normal()
            v = 1.0 + c * x
            if v <= 0.0:
                continue
            v = v * v * v
            u = self.uniform_open()
            x2 = x * x
            if u < 1.0 - 0.0331 * x2 * x2:
                return d * v
            if math.log(u) < 0.5 * x2 + d * (1.0 - v + math.log(v)):
                return d * v
