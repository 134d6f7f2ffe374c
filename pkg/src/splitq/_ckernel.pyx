# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled trial loops.

Operation-for-operation mirror of ``agents.py``, ``posterior.py``,
``running_stats.py`` and ``rng.py``; any change there must be repeated here
(``tests/test_kernel.py`` checks bit-identity against the pure-Python loop).
Built with ``-ffp-contract=off`` so no fused multiply-adds creep in.
"""

from libc.math cimport exp, log, pow, sqrt
from libc.stdint cimport int64_t, uint64_t
from libc.stdlib cimport free, malloc

cdef double TWO_M53 = 1.0 / 9007199254740992.0
cdef int RETRY_CAP = 10000

cdef enum:
    SAMPLER_REJECTION = 0
    SAMPLER_DIRICHLET = 1
    SAMPLER_TARGET = 2


cdef struct Rng:
    uint64_t s0
    uint64_t s1
    uint64_t s2
    uint64_t s3


cdef struct Params:
    double alpha
    double gamma
    double epsilon
    double q_max
    double q_min
    double sigma_init
    double beta
    int64_t eps_off
    int sampler
    int unknown
    int schedule
    int ewma
    int known_probs


cdef struct Env:
    int64_t* action_start
    int64_t* outcome_start
    int64_t* next_state
    int64_t* slot
    double* prob
    double* reward


cdef inline uint64_t rotl(uint64_t x, int k) nogil:
    return (x << k) | (x >> (64 - k))


cdef inline uint64_t next_u64(Rng* r) nogil:
    cdef uint64_t result = rotl(r.s1 * 5, 7) * 9
    cdef uint64_t t = r.s1 << 17
    r.s2 ^= r.s0
    r.s3 ^= r.s1
    r.s1 ^= r.s2
    r.s0 ^= r.s3
    r.s2 ^= t
    r.s3 = rotl(r.s3, 45)
    return result


cdef inline double uniform(Rng* r) nogil:
    return <double>(next_u64(r) >> 11) * TWO_M53


cdef inline double uniform_open(Rng* r) nogil:
    return (<double>(next_u64(r) >> 11) + 0.5) * TWO_M53


cdef inline int64_t integers(Rng* r, int64_t n) nogil:
    return <int64_t>(uniform(r) * n)


cdef inline double normal(Rng* r) nogil:
    cdef double u, v, s
    while True:
        u = 2.0 * uniform(r) - 1.0
        v = 2.0 * uniform(r) - 1.0
        s = u * u + v * v
        if 0.0 < s < 1.0:
            return u * sqrt(-2.0 * log(s) / s)


cdef inline double gamma_draw(Rng* r, double shape) nogil:
    cdef double d = shape - 1.0 / 3.0
    cdef double c = 1.0 / sqrt(9.0 * d)
    cdef double x, v, u, x2
    while True:
        x = normal(r)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = uniform_open(r)
        x2 = x * x
        if u < 1.0 - 0.0331 * x2 * x2:
            return d * v
        if log(u) < 0.5 * x2 + d * (1.0 - v + log(v)):
            return d * v


cdef inline double likelihood(double* p, int64_t* counts, int k, int64_t n) nogil:
    cdef double log_l = 0.0
    cdef int i
    if n == 0:
        return 1.0
    for i in range(k):
        if counts[i] > 0:
            if p[i] <= 0.0:
                return 0.0
            log_l += <double>counts[i] * (log(p[i]) - log(<double>counts[i] / <double>n))
    if log_l >= 0.0:
        return 1.0
    return exp(log_l)


cdef inline void dirichlet(Rng* r, int64_t* counts, int k, double* p) nogil:
    cdef double total = 0.0
    cdef int i
    for i in range(k):
        p[i] = gamma_draw(r, <double>counts[i] + 1.0)
    for i in range(k):
        total += p[i]
    for i in range(k):
        p[i] = p[i] / total


cdef void posterior_centre(int64_t* counts, int k, int unknown, double* p) nogil:
    cdef int64_t n = 0
    cdef int i
    cdef double w, keep
    for i in range(k):
        n += counts[i]
    if n == 0:
        for i in range(k):
            p[i] = 1.0 / k
        return
    if unknown:
        w = 1.0 / (n + 2.0)
        keep = 1.0 - w
        for i in range(k - 1):
            p[i] = keep * (<double>counts[i] / <double>n)
        p[k - 1] = w
    else:
        for i in range(k):
            p[i] = <double>counts[i] / <double>n


cdef int sample_simplex(Rng* r, int64_t* counts, int k, int mode, int unknown,
                        double* p) nogil:
    """Fill ``p``; returns 1 when the retry cap forced the fallback."""
    cdef int64_t n = 0
    cdef int i, attempt
    cdef double total, mx, ratio
    for i in range(k):
        n += counts[i]
    if mode == SAMPLER_DIRICHLET:
        dirichlet(r, counts, k, p)
        return 0
    if mode == SAMPLER_REJECTION:
        for attempt in range(RETRY_CAP):
            for i in range(k):
                p[i] = uniform(r)
            total = 0.0
            for i in range(k):
                total += p[i]
            if total <= 0.0:
                continue
            for i in range(k):
                p[i] = p[i] / total
            if uniform(r) < likelihood(p, counts, k, n):
                return 0
    else:
        for attempt in range(RETRY_CAP):
            dirichlet(r, counts, k, p)
            mx = p[0]
            for i in range(1, k):
                if p[i] > mx:
                    mx = p[i]
            ratio = 1.0 / (k * mx)
            if uniform(r) < pow(ratio, <double>k):
                return 0
    posterior_centre(counts, k, unknown, p)
    return 1


cdef inline int argmax_random(Rng* r, double* values, int k) nogil:
    cdef double best = values[0]
    cdef int idx = 0
    cdef int64_t ties = 1
    cdef int i
    for i in range(1, k):
        if values[i] > best:
            best = values[i]
            idx = i
            ties = 1
        elif values[i] == best:
            ties += 1
            if integers(r, ties) == 0:
                idx = i
    return idx


cdef inline int select_eps(Rng* r, double* values, int k, Params* P, int64_t step) nogil:
    cdef double eps = P.epsilon
    if P.eps_off >= 0 and step >= P.eps_off:
        eps = 0.0
    if eps > 0.0 and uniform(r) < eps:
        return <int>integers(r, k)
    return argmax_random(r, values, k)


cdef inline int64_t sample_outcome(Env* E, int64_t ga, double u) nogil:
    cdef int64_t lo = E.outcome_start[ga]
    cdef int64_t last = E.outcome_start[ga + 1] - 1
    cdef double acc = 0.0
    cdef int64_t j
    for j in range(lo, last):
        acc += E.prob[j]
        if u < acc:
            return j
    return last


cdef inline double learning_rate(Params* P, int64_t visits) nogil:
    # schedule codes: 0 constant, 1 inverse_count, 2 hybrid
    cdef double rate
    if P.schedule == 0:
        return P.alpha
    rate = 1.0 / (visits + 1)
    if P.schedule == 2 and rate < P.alpha:
        return P.alpha
    return rate


def run_q(const int64_t[::1] action_start, const int64_t[::1] outcome_start,
          const int64_t[::1] next_state, const double[::1] prob, const double[::1] reward,
          dict params, int64_t steps, int64_t start_state, uint64_t[::1] rng_state,
          double[::1] q, int64_t[::1] visits, double[::1] rewards_out):
    """Q-learning trial; returns the final state."""
    cdef Params P = _params(params)
    cdef Rng r
    r.s0 = rng_state[0]; r.s1 = rng_state[1]; r.s2 = rng_state[2]; r.s3 = rng_state[3]
    cdef Env E
    E.action_start = <int64_t*>&action_start[0]
    E.outcome_start = <int64_t*>&outcome_start[0]
    E.next_state = <int64_t*>&next_state[0]
    E.prob = <double*>&prob[0]
    E.reward = <double*>&reward[0]
    cdef double* qp = &q[0]
    cdef int64_t s = start_state, step, ga0, ga, j, nxt, lo, hi, i
    cdef int a, k
    cdef double best, target, alpha, rew, qv
    with nogil:
        for step in range(steps):
            ga0 = E.action_start[s]
            k = <int>(E.action_start[s + 1] - ga0)
            a = select_eps(&r, &qp[ga0], k, &P, step)
            ga = ga0 + a
            j = sample_outcome(&E, ga, uniform(&r))
            nxt = E.next_state[j]
            rew = E.reward[j]
            lo = E.action_start[nxt]
            hi = E.action_start[nxt + 1]
            best = qp[lo]
            for i in range(lo + 1, hi):
                if qp[i] > best:
                    best = qp[i]
            target = rew + P.gamma * best
            alpha = learning_rate(&P, visits[ga])
            qv = qp[ga]
            qp[ga] = qv + alpha * (target - qv)
            visits[ga] += 1
            rewards_out[step] = rew
            s = nxt
    rng_state[0] = r.s0; rng_state[1] = r.s1; rng_state[2] = r.s2; rng_state[3] = r.s3
    return s


cdef Params _params(dict d) except *:
    cdef Params P
    P.alpha = d["alpha"]
    P.gamma = d["gamma"]
    P.epsilon = d["epsilon"]
    P.q_max = d["q_max"]
    P.q_min = d["q_min"]
    P.sigma_init = d["sigma_init"]
    P.beta = d["beta"]
    P.eps_off = d["eps_off"]
    P.sampler = d["sampler"]
    P.unknown = d["unknown"]
    P.schedule = d["schedule"]
    P.ewma = d["ewma"]
    P.known_probs = d["known_probs"]
    return P


cdef struct Split:
    double* q
    int64_t* n
    int64_t* acc_count
    double* acc_mean
    double* acc_second
    int64_t* sa_n


cdef inline double combine(Env* E, Split* T, Params* P, int64_t ga, int unknown) nogil:
    cdef int64_t lo = E.outcome_start[ga]
    cdef int64_t hi = E.outcome_start[ga + 1]
    cdef int64_t j, c, n
    cdef double total = 0.0, mean, w
    if P.known_probs:
        for j in range(lo, hi):
            total += E.prob[j] * T.q[E.slot[j]]
        return total
    n = T.sa_n[ga]
    if n == 0:
        return P.q_max
    for j in range(lo, hi):
        c = T.n[j]
        if c > 0:
            total += <double>c * T.q[j]
    mean = total / <double>n
    if unknown:
        w = 1.0 / (n + 2.0)
        return (1.0 - w) * mean + w * P.q_max
    return mean


cdef inline double std_of(Params* P, int64_t count, double mean, double second) nogil:
    cdef double var
    if count < 2:
        return P.sigma_init
    if P.ewma:
        var = second - mean * mean
    else:
        var = second / count
    if not var > 0.0:
        var = 0.0
    return sqrt(var)


cdef inline double sample_action_value(Rng* r, Env* E, Split* T, Params* P, int64_t ga,
                                       int64_t* counts, int64_t* observed, double* p,
                                       int64_t* fallbacks) nogil:
    cdef int64_t n = T.sa_n[ga]
    cdef int64_t j, lo, hi
    cdef int k = 0, i
    cdef double total = 0.0, x, sd
    if n == 0:
        return P.q_max
    lo = E.outcome_start[ga]
    hi = E.outcome_start[ga + 1]
    for j in range(lo, hi):
        if T.n[j] > 0:
            observed[k] = j
            counts[k] = T.n[j]
            k += 1
    if P.unknown:
        counts[k] = 0
        fallbacks[0] += sample_simplex(r, counts, k + 1, P.sampler, 1, p)
    else:
        fallbacks[0] += sample_simplex(r, counts, k, P.sampler, 0, p)
    for i in range(k):
        j = observed[i]
        x = T.q[j]
        sd = std_of(P, T.acc_count[j], T.acc_mean[j], T.acc_second[j])
        if sd > 0.0:
            x = x + sd * normal(r)
            if x > P.q_max:
                x = P.q_max
            elif x < P.q_min:
                x = P.q_min
        total += p[i] * x
    if P.unknown:
        total += p[k] * P.q_max
    return total


cdef inline void acc_push(int ewma, double beta, int64_t* count, double* mean,
                          double* second, double x) nogil:
    cdef double keep, d
    count[0] += 1
    if ewma:
        if count[0] == 1:
            mean[0] = x
            second[0] = x * x
        else:
            keep = 1.0 - beta
            mean[0] = keep * mean[0] + beta * x
            second[0] = keep * second[0] + beta * (x * x)
    else:
        d = x - mean[0]
        mean[0] = mean[0] + d / count[0]
        second[0] = second[0] + d * (x - mean[0])


cdef inline void split_update(Env* E, Split* T, Params* P, int64_t ga, int64_t j,
                              double rew, int64_t nxt, int unknown) nogil:
    cdef int64_t lo, hi, g
    cdef double best, v, target, alpha, qv
    j = E.slot[j]
    if T.n[j] == 0:
        T.q[j] = P.q_max
    lo = E.action_start[nxt]
    hi = E.action_start[nxt + 1]
    best = combine(E, T, P, lo, unknown)
    for g in range(lo + 1, hi):
        v = combine(E, T, P, g, unknown)
        if v > best:
            best = v
    target = rew + P.gamma * best
    alpha = learning_rate(P, T.n[j])
    qv = T.q[j]
    qv = qv + alpha * (target - qv)
    T.q[j] = qv
    acc_push(P.ewma, P.beta, &T.acc_count[j], &T.acc_mean[j], &T.acc_second[j], qv)
    T.n[j] += 1
    T.sa_n[ga] += 1


def run_split(int uncertain,
              const int64_t[::1] action_start, const int64_t[::1] outcome_start,
              const int64_t[::1] next_state, const int64_t[::1] slot,
              const double[::1] prob, const double[::1] reward,
              dict params, int64_t steps, int64_t start_state, uint64_t[::1] rng_state,
              double[::1] q, int64_t[::1] n, int64_t[::1] acc_count,
              double[::1] acc_mean, double[::1] acc_second, int64_t[::1] sa_n,
              double[::1] rewards_out):
    """Split-Q (``uncertain=0``) or uncertain split-Q trial.

    Returns ``(final_state, sampler_fallbacks)``.
    """
    cdef Params P = _params(params)
    cdef Rng r
    r.s0 = rng_state[0]; r.s1 = rng_state[1]; r.s2 = rng_state[2]; r.s3 = rng_state[3]
    cdef Env E
    E.action_start = <int64_t*>&action_start[0]
    E.outcome_start = <int64_t*>&outcome_start[0]
    E.next_state = <int64_t*>&next_state[0]
    E.slot = <int64_t*>&slot[0]
    E.prob = <double*>&prob[0]
    E.reward = <double*>&reward[0]
    cdef Split T
    T.q = &q[0]
    T.n = &n[0]
    T.acc_count = &acc_count[0]
    T.acc_mean = &acc_mean[0]
    T.acc_second = &acc_second[0]
    T.sa_n = &sa_n[0]

    cdef int64_t num_states = action_start.shape[0] - 1
    cdef int64_t max_actions = 1, max_outcomes = 1, i
    for i in range(num_states):
        if action_start[i + 1] - action_start[i] > max_actions:
            max_actions = action_start[i + 1] - action_start[i]
    for i in range(outcome_start.shape[0] - 1):
        if outcome_start[i + 1] - outcome_start[i] > max_outcomes:
            max_outcomes = outcome_start[i + 1] - outcome_start[i]
    cdef double* values = <double*>malloc(max_actions * sizeof(double))
    cdef double* pbuf = <double*>malloc((max_outcomes + 1) * sizeof(double))
    cdef int64_t* counts = <int64_t*>malloc((max_outcomes + 1) * sizeof(int64_t))
    cdef int64_t* observed = <int64_t*>malloc((max_outcomes + 1) * sizeof(int64_t))
    if values == NULL or pbuf == NULL or counts == NULL or observed == NULL:
        free(values); free(pbuf); free(counts); free(observed)
        raise MemoryError()

    cdef int64_t s = start_state, step, ga0, ga, j, nxt, fallbacks = 0
    cdef int a, k, unknown, base_unknown = P.unknown
    cdef double rew
    try:
        with nogil:
            for step in range(steps):
                ga0 = E.action_start[s]
                k = <int>(E.action_start[s + 1] - ga0)
                if uncertain:
                    unknown = base_unknown
                    for a in range(k):
                        values[a] = sample_action_value(&r, &E, &T, &P, ga0 + a, counts,
                                                        observed, pbuf, &fallbacks)
                    a = argmax_random(&r, values, k)
                else:
                    unknown = base_unknown and not (P.eps_off >= 0 and step >= P.eps_off)
                    for a in range(k):
                        values[a] = combine(&E, &T, &P, ga0 + a, unknown)
                    a = select_eps(&r, values, k, &P, step)
                ga = ga0 + a
                j = sample_outcome(&E, ga, uniform(&r))
                nxt = E.next_state[j]
                rew = E.reward[j]
                split_update(&E, &T, &P, ga, j, rew, nxt, unknown)
                rewards_out[step] = rew
                s = nxt
    finally:
        free(values); free(pbuf); free(counts); free(observed)
    rng_state[0] = r.s0; rng_state[1] = r.s1; rng_state[2] = r.s2; rng_state[3] = r.s3
    return s, fallbacks


def sample_simplex_c(const int64_t[::1] counts, int mode, int unknown, uint64_t[::1] rng_state):
    """Single posterior draw through the compiled sampler (for tests/benchmarks)."""
    cdef int k = counts.shape[0]
    cdef Rng r
    r.s0 = rng_state[0]; r.s1 = rng_state[1]; r.s2 = rng_state[2]; r.s3 = rng_state[3]
    cdef double* p = <double*>malloc(k * sizeof(double))
    cdef int fb
    try:
        fb = sample_simplex(&r, <int64_t*>&counts[0], k, mode, unknown, p)
        out = [p[i] for i in range(k)]
    finally:
        free(p)
    rng_state[0] = r.s0; rng_state[1] = r.s1; rng_state[2] = r.s2; rng_state[3] = r.s3
    return out, fb


def sample_simplex_many(const int64_t[::1] counts, int mode, int unknown, int64_t draws,
                        uint64_t[::1] rng_state, double[:, ::1] out):
    """Fill ``out`` (draws x k) with posterior draws; returns the fallback count."""
    cdef int k = counts.shape[0]
    cdef Rng r
    r.s0 = rng_state[0]; r.s1 = rng_state[1]; r.s2 = rng_state[2]; r.s3 = rng_state[3]
    cdef int64_t d, fb = 0
    with nogil:
        for d in range(draws):
            fb += sample_simplex(&r, <int64_t*>&counts[0], k, mode, unknown, &out[d, 0])
    rng_state[0] = r.s0; rng_state[1] = r.s1; rng_state[2] = r.s2; rng_state[3] = r.s3
    return fb


def accumulate(const double[::1] values, int ewma, double beta,
               int64_t count=0, double mean=0.0, double second=0.0):
    """Push ``values`` into an accumulator state; returns ``(count, mean, second)``."""
    cdef Py_ssize_t i
    with nogil:
        for i in range(values.shape[0]):
            acc_push(ewma, beta, &count, &mean, &second, values[i])
    return count, mean, second
