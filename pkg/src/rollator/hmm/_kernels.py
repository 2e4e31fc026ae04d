"""Compiled inner loops for the HMM recursions and the collapsed Gibbs sweep.

Emission likelihoods are passed pre-scaled per tick (row t divided by its
maximum, whose log is returned to the caller separately), so the forward
pass only has to renormalise once per step.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def forward(pi, theta, lik):
    """Normalised forward pass.

    Returns (alpha, log_norm, bad_t): alpha[t] is the filtered posterior,
    log_norm[t] the log of the step normaliser, bad_t the first tick with zero
    total likelihood (-1 if none).
    """
    T, m = lik.shape
    alpha = np.zeros((T, m))
    log_norm = np.zeros(T)
    pred = pi.copy()
    for t in range(T):
        if t > 0:
            for j in range(m):
                acc = 0.0
                for i in range(m):
                    acc += alpha[t - 1, i] * theta[i, j]
                pred[j] = acc
        z = 0.0
        for j in range(m):
            alpha[t, j] = pred[j] * lik[t, j]
            z += alpha[t, j]
        if not z > 0.0:
            return alpha, log_norm, t
        for j in range(m):
            alpha[t, j] /= z
        log_norm[t] = np.log(z)
    return alpha, log_norm, -1


@njit(cache=True)
def backward(theta, lik, alpha, log_norm):
    """Scaled backward pass. Returns (posteriors gamma, summed pairwise xi)."""
    T, m = lik.shape
    beta = np.ones(m)
    nxt = np.zeros(m)
    gamma = np.zeros((T, m))
    xi = np.zeros((m, m))
    for j in range(m):
        gamma[T - 1, j] = alpha[T - 1, j]
    for t in range(T - 2, -1, -1):
        scale = np.exp(log_norm[t + 1])
        for j in range(m):
            nxt[j] = lik[t + 1, j] * beta[j] / scale
        for i in range(m):
            for j in range(m):
                xi[i, j] += alpha[t, i] * theta[i, j] * nxt[j]
        for i in range(m):
            acc = 0.0
            for j in range(m):
                acc += theta[i, j] * nxt[j]
            beta[i] = acc
        s = 0.0
        for i in range(m):
            gamma[t, i] = alpha[t, i] * beta[i]
            s += gamma[t, i]
        for i in range(m):
            gamma[t, i] /= s
    return gamma, xi


@njit(cache=True)
def site_conditional(out, z, obs, start, stop, t, alpha, alpha_row, beta, beta_row, gamma):
    """Collapsed conditional of B_t given all other states.

    Counts must already exclude every contribution of position t. The
    successor factor accounts for the predecessor transition being re-added
    when the candidate equals both neighbours.
    """
    L = out.shape[0]
    n = obs.shape[1]
    has_prev = t > start
    has_next = t < stop - 1
    prev = z[t - 1] if has_prev else -1
    nxt = z[t + 1] if has_next else -1
    gamma_sum = gamma.sum()
    total = 0.0
    for b in range(L):
        if has_prev:
            p = alpha[prev, b] / alpha_row[prev]
        else:
            p = gamma[b] / gamma_sum
        if has_next:
            same = 1.0 if prev == b else 0.0
            both = 1.0 if (prev == b and b == nxt) else 0.0
            p *= (alpha[b, nxt] + both) / (alpha_row[b] + same)
        for k in range(n):
            p *= beta[b, k, obs[t, k]] / beta_row[b, k]
        out[b] = p
        total += p
    for b in range(L):
        out[b] /= total


@njit(cache=True)
def _shift(z, obs, start, stop, t, sign, alpha, alpha_row, beta, beta_row, gamma):
    b = z[t]
    n = obs.shape[1]
    if t == start:
        gamma[b] += sign
    else:
        alpha[z[t - 1], b] += sign
        alpha_row[z[t - 1]] += sign
    if t < stop - 1:
        alpha[b, z[t + 1]] += sign
        alpha_row[b] += sign
    for k in range(n):
        beta[b, k, obs[t, k]] += sign
        beta_row[b, k] += sign


@njit(cache=True)
def gibbs_sweep(z, obs, starts, alpha, beta, gamma, uniforms):
    """One in-place systematic-scan sweep over every position of every sequence."""
    L = gamma.shape[0]
    alpha_row = alpha.sum(axis=1)
    beta_row = beta.sum(axis=2)
    probs = np.zeros(L)
    u_idx = 0
    for s in range(starts.shape[0] - 1):
        start = starts[s]
        stop = starts[s + 1]
        for t in range(start, stop):
            _shift(z, obs, start, stop, t, -1.0, alpha, alpha_row, beta, beta_row, gamma)
            site_conditional(probs, z, obs, start, stop, t, alpha, alpha_row, beta, beta_row,
                             gamma)
            u = uniforms[u_idx]
            u_idx += 1
            acc = 0.0
            choice = L - 1
            for b in range(L):
                acc += probs[b]
                if u < acc:
                    choice = b
                    break
            z[t] = choice
            _shift(z, obs, start, stop, t, 1.0, alpha, alpha_row, beta, beta_row, gamma)
