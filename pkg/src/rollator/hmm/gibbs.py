"""Collapsed Gibbs sampling of hidden state paths with Dirichlet-multinomial parameters.

The parameters (pi, theta, phi) are integrated out analytically; only the
state assignments are sampled. Counts always include the prior pseudocounts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln

from ..errors import DataError
from ..features import Discretizer
from . import _kernels
from .inference import Observations, as_bins
from .model import HmmModel


@dataclass(frozen=True)
class GibbsHyper:
    alpha0: float = 1.0  # transition pseudocount
    beta0: float = 1.0  # emission pseudocount
    gamma0: float = 1.0  # initial-state pseudocount

    def __post_init__(self):
        if not (self.alpha0 > 0 and self.beta0 > 0 and self.gamma0 > 0):
            raise DataError("Dirichlet pseudocounts must be strictly positive")


@dataclass(frozen=True, eq=False)
class GibbsState:
    assignments: tuple  # one int array (0-based states) per sequence
    alpha: np.ndarray  # (L, L) transition counts
    beta: np.ndarray  # (L, n, D) emission counts
    gamma: np.ndarray  # (L,) initial-state counts
    rng_seed: int = 0
    sweeps_done: int = 0

    @property
    def L(self) -> int:
        return self.gamma.shape[0]


def count_statistics(assignments, data: Sequence[np.ndarray], L: int, D: int, hyper: GibbsHyper):
    """Pseudocounts plus sufficient statistics of ``assignments``."""
    n = data[0].shape[1]
    alpha = np.full((L, L), float(hyper.alpha0))
    beta = np.full((L, n, D), float(hyper.beta0))
    gamma = np.full(L, float(hyper.gamma0))
    for z, bins in zip(assignments, data):
        z = np.asarray(z, dtype=np.int64)
        if z.shape[0] != bins.shape[0]:
            raise DataError("assignment length does not match its sequence")
        if z.min() < 0 or z.max() >= L:
            raise DataError(f"state indices must lie in [0, {L})")
        gamma[z[0]] += 1
        np.add.at(alpha, (z[:-1], z[1:]), 1.0)
        for k in range(n):
            np.add.at(beta, (z, k, bins[:, k] - 1), 1.0)
    return alpha, beta, gamma


def _dirmult_blocks(counts: np.ndarray, prior: np.ndarray) -> float:
    # sum over the last axis' blocks of log B(counts) - log B(prior)
    post = np.sum(gammaln(counts)) - np.sum(gammaln(counts.sum(axis=-1)))
    pri = np.sum(gammaln(prior)) - np.sum(gammaln(prior.sum(axis=-1)))
    return float(post - pri)


def log_marginal_from_counts(alpha, beta, gamma, hyper: GibbsHyper) -> float:
    return (_dirmult_blocks(gamma, np.full_like(gamma, hyper.gamma0))
            + _dirmult_blocks(alpha, np.full_like(alpha, hyper.alpha0))
            + _dirmult_blocks(beta, np.full_like(beta, hyper.beta0)))


def gibbs_log_marginal(assignments, data: Sequence[Observations], hyper: GibbsHyper,
                       num_states: int, D: int) -> float:
    """log Pr(B_{1:T}, s_{1:T}^{1:n}) with pi, theta, phi integrated out.

    A product of Dirichlet-multinomial terms, one per initial, transition row
    and (state, sensor) emission block. The prior normalisers are included,
    so this is an exact log probability rather than one up to a constant.
    """
    seqs = [as_bins(o, D=D) for o in data]
    alpha, beta, gamma = count_statistics(assignments, seqs, num_states, D, hyper)
    return log_marginal_from_counts(alpha, beta, gamma, hyper)


def init_gibbs(data: Sequence[Observations], num_states: int, D: int, hyper: GibbsHyper,
               rng_seed: int = 0) -> GibbsState:
    """Assignments drawn uniformly over states."""
    if num_states < 1:
        raise DataError("num_states must be at least 1")
    seqs = [as_bins(o, D=D) for o in data]
    rng = np.random.default_rng([rng_seed, 0xB0])
    z = tuple(rng.integers(0, num_states, size=s.shape[0]) for s in seqs)
    return state_from_assignments(z, seqs, num_states, D, hyper, rng_seed)


def state_from_assignments(assignments, data, num_states: int, D: int, hyper: GibbsHyper,
                           rng_seed: int = 0, sweeps_done: int = 0) -> GibbsState:
    seqs = [as_bins(o, D=D) for o in data]
    z = tuple(np.array(a, dtype=np.int64) for a in assignments)
    alpha, beta, gamma = count_statistics(z, seqs, num_states, D, hyper)
    return GibbsState(z, alpha, beta, gamma, rng_seed, sweeps_done)


def _flatten(state: GibbsState, data):
    seqs = [as_bins(o, D=state.beta.shape[2]) for o in data]
    if len(seqs) != len(state.assignments):
        raise DataError("state and data disagree on the number of sequences")
    starts = np.zeros(len(seqs) + 1, dtype=np.int64)
    starts[1:] = np.cumsum([s.shape[0] for s in seqs])
    obs = np.ascontiguousarray(np.vstack(seqs) - 1)
    z = np.concatenate(state.assignments).astype(np.int64)
    return z, obs, starts


def gibbs_conditional(state: GibbsState, data, seq: int, t: int) -> np.ndarray:
    """Pr(B_t = . | all other states, s) for position ``t`` of sequence ``seq``."""
    z, obs, starts = _flatten(state, data)
    alpha, beta, gamma = state.alpha.copy(), state.beta.copy(), state.gamma.copy()
    alpha_row, beta_row = alpha.sum(axis=1), beta.sum(axis=2)
    start, stop = starts[seq], starts[seq + 1]
    pos = start + t
    if not start <= pos < stop:
        raise DataError(f"position {t} outside sequence {seq}")
    _kernels._shift(z, obs, start, stop, pos, -1.0, alpha, alpha_row, beta, beta_row, gamma)
    out = np.zeros(state.L)
    _kernels.site_conditional(out, z, obs, start, stop, pos, alpha, alpha_row, beta, beta_row,
                              gamma)
    return out


def gibbs_sweep(state: GibbsState, data) -> GibbsState:
    """Resample every position once, in order; returns a new state.

    The random stream for sweep i is derived from (rng_seed, i) only, so a
    chain is reproducible from its seed and sweep count.
    """
    z, obs, starts = _flatten(state, data)
    alpha, beta, gamma = state.alpha.copy(), state.beta.copy(), state.gamma.copy()
    uniforms = np.random.default_rng([state.rng_seed, state.sweeps_done + 1]).random(z.shape[0])
    _kernels.gibbs_sweep(z, obs, starts, alpha, beta, gamma, uniforms)
    assignments = tuple(z[starts[i]:starts[i + 1]].copy() for i in range(len(starts) - 1))
    return GibbsState(assignments, alpha, beta, gamma, state.rng_seed, state.sweeps_done + 1)


def point_estimate(state: GibbsState) -> HmmModel:
    """Dirichlet posterior means given the current assignments."""
    return HmmModel(state.gamma / state.gamma.sum(),
                    state.alpha / state.alpha.sum(axis=1, keepdims=True),
                    state.beta / state.beta.sum(axis=2, keepdims=True))


@dataclass
class GibbsResult:
    model: HmmModel
    state: GibbsState
    trace: np.ndarray = field(default_factory=lambda: np.zeros(0))  # log joint after each sweep


def fit_gibbs(data: Sequence[Observations], num_states: int, D: int,
              hyper: Optional[GibbsHyper] = None, sweeps: int = 200, burn_in: int = 100,
              rng_seed: int = 0, discretizer: Optional[Discretizer] = None) -> GibbsResult:
    """Run the sampler for ``sweeps`` sweeps (``burn_in`` of them discarded) and
    return the posterior-mean model at the final assignment."""
    if not sweeps > burn_in >= 0:
        raise DataError("need sweeps > burn_in >= 0")
    if not data:
        raise DataError("empty dataset")
    hyper = hyper or GibbsHyper()
    seqs = [as_bins(o, D=D) for o in data]
    state = init_gibbs(seqs, num_states, D, hyper, rng_seed)
    z, obs, starts = _flatten(state, seqs)
    alpha, beta, gamma = state.alpha.copy(), state.beta.copy(), state.gamma.copy()
    trace = np.zeros(sweeps)
    for i in range(sweeps):
        uniforms = np.random.default_rng([rng_seed, i + 1]).random(z.shape[0])
        _kernels.gibbs_sweep(z, obs, starts, alpha, beta, gamma, uniforms)
        trace[i] = log_marginal_from_counts(alpha, beta, gamma, hyper)
    assignments = tuple(z[starts[i]:starts[i + 1]].copy() for i in range(len(starts) - 1))
    state = GibbsState(assignments, alpha, beta, gamma, rng_seed, sweeps)
    model = point_estimate(state)
    if discretizer is not None:
        model = model.with_discretizer(discretizer)
    return GibbsResult(model, state, trace)
