"""Compiled inner loops for the linear-chain CRF.

State features enter only through each tick's rank among the sorted
thresholds of every (label, feature), so scores and expected counts cost
O(T m n) rather than O(T m^2 n). The transition score is nu on
self-transitions and 0 elsewhere. All kernels release the GIL so sequences
can be processed on threads.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def node_scores(rank, base, prefix):
    """Per-tick, per-label state score, shape (T, m).

    rank[t, b, k] counts the thresholds of label b and feature k lying
    strictly below x[t, k]; prefix[b, k, r] sums the exceed-minus-not-exceed
    weights of the r smallest of those thresholds; base[b] is the score with
    nothing exceeded.
    """
    T, m, n = rank.shape
    out = np.empty((T, m))
    for t in range(T):
        for b in range(m):
            acc = base[b]
            for k in range(n):
                acc += prefix[b, k, rank[t, b, k]]
            out[t, b] = acc
    return out


@njit(cache=True, nogil=True)
def rank_histogram(rank, w, J):
    """hist[b, k, r] = sum of w[t, b] over ticks with rank[t, b, k] == r."""
    T, m, n = rank.shape
    hist = np.zeros((m, n, J + 1))
    for t in range(T):
        for b in range(m):
            wt = w[t, b]
            for k in range(n):
                hist[b, k, rank[t, b, k]] += wt
    return hist


@njit(cache=True, nogil=True)
def _lse_excluding(v, out):
    """out[b] = log sum_{a != b} exp(v[a]).

    Uses the largest and second-largest entries as shifts, so the only
    subtraction is of a term no larger than 1 from a sum of at least 1.
    """
    m = v.shape[0]
    top = 0
    for a in range(1, m):
        if v[a] > v[top]:
            top = a
    second = -np.inf
    for a in range(m):
        if a != top and v[a] > second:
            second = v[a]
    s_all = 0.0
    s_rest = 0.0
    for a in range(m):
        s_all += np.exp(v[a] - v[top])
        if a != top:
            s_rest += np.exp(v[a] - second)
    for b in range(m):
        if b == top:
            out[b] = second + np.log(s_rest)
        else:
            out[b] = v[top] + np.log(s_all - np.exp(v[b] - v[top]))


@njit(cache=True, nogil=True)
def _logaddexp(a, b):
    if a < b:
        a, b = b, a
    if b == -np.inf:
        return a
    return a + np.log1p(np.exp(b - a))


@njit(cache=True, nogil=True)
def forward_backward(node, nu):
    """Log-space forward-backward over labels.

    The transition score is nu on self-transitions and 0 otherwise, so each
    step needs only a log-sum-exp over the other labels plus one self term.
    Returns (log Z, marginals (T, m), expected number of self-transitions).
    """
    T, m = node.shape
    la = np.empty((T, m))
    excl = np.empty(m)
    for b in range(m):
        la[0, b] = node[0, b]
    for t in range(1, T):
        _lse_excluding(la[t - 1], excl)
        for b in range(m):
            la[t, b] = node[t, b] + _logaddexp(excl[b], la[t - 1, b] + nu)
    log_z = -np.inf
    for b in range(m):
        log_z = _logaddexp(log_z, la[T - 1, b])

    lb = np.zeros(m)
    v = np.empty(m)
    gamma = np.empty((T, m))
    same = 0.0
    for b in range(m):
        gamma[T - 1, b] = np.exp(la[T - 1, b] - log_z)
    for t in range(T - 1, 0, -1):
        for b in range(m):
            v[b] = node[t, b] + lb[b]
        for b in range(m):
            same += np.exp(la[t - 1, b] + nu + v[b] - log_z)
        _lse_excluding(v, excl)
        for a in range(m):
            lb[a] = _logaddexp(excl[a], v[a] + nu)
            gamma[t - 1, a] = np.exp(la[t - 1, a] + lb[a] - log_z)
    return log_z, gamma, same


@njit(cache=True, nogil=True)
def viterbi(node, nu):
    """Max-sum decoding; among equal scores the lowest label index wins."""
    T, m = node.shape
    delta = np.empty(m)
    nxt = np.empty(m)
    back = np.zeros((T, m), dtype=np.int64)
    for b in range(m):
        delta[b] = node[0, b]
    for t in range(1, T):
        for b in range(m):
            best = -np.inf
            arg = 0
            for a in range(m):
                v = delta[a] + (nu if a == b else 0.0)
                if v > best:
                    best = v
                    arg = a
            nxt[b] = best + node[t, b]
            back[t, b] = arg
        for b in range(m):
            delta[b] = nxt[b]
    path = np.empty(T, dtype=np.int64)
    arg = 0
    for b in range(1, m):
        if delta[b] > delta[arg]:
            arg = b
    path[T - 1] = arg
    for t in range(T - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path
