"""Draw state and observation sequences from a discrete HMM."""

from __future__ import annotations

import numpy as np

from ..errors import DataError
from ..hmm.model import HmmModel


def _draw(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    idx = np.empty(u.shape[0], dtype=np.int64)
    for i in range(u.shape[0]):
        idx[i] = np.searchsorted(cum[i], u[i], side="right")
    return np.minimum(idx, cum.shape[1] - 1)


def sample_hmm(model: HmmModel, T: int, rng_seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Sample (states, observations) of length T.

    States are 0-based indices into ``model.state_names``; observations are a
    T x n matrix of 1-based bins, each sensor drawn independently given the
    state.
    """
    if T < 1:
        raise DataError("T must be at least 1")
    rng = np.random.default_rng(rng_seed)
    u_state = rng.random(T)
    cum_pi = np.cumsum(model.pi)
    cum_theta = np.cumsum(model.theta, axis=1)
    states = np.empty(T, dtype=np.int64)
    states[0] = min(int(np.searchsorted(cum_pi, u_state[0], side="right")), model.m - 1)
    for t in range(1, T):
        row = cum_theta[states[t - 1]]
        states[t] = min(int(np.searchsorted(row, u_state[t], side="right")), model.m - 1)

    u_obs = rng.random((T, model.n))
    cum_phi = np.cumsum(model.phi, axis=2)
    obs = np.empty((T, model.n), dtype=np.int64)
    for k in range(model.n):
        obs[:, k] = _draw(cum_phi[states, k], u_obs[:, k]) + 1
    return states, obs
