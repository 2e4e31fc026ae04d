"""Forward filtering, smoothing posteriors and likelihood for discrete HMMs."""

from __future__ import annotations

from typing import Union

import numpy as np

from ..core.types import FeatureSequence
from ..errors import DataError, NumericalError
from ..features import apply_discretizer
from . import _kernels
from .model import HmmModel

Observations = Union[FeatureSequence, np.ndarray]


def as_bins(obs: Observations, model: HmmModel = None, D: int = None) -> np.ndarray:
    """Return a T x n int array of 1-based bins, discretizing with the model's binning if needed."""
    if isinstance(obs, FeatureSequence):
        if obs.discretized is None:
            if model is None or model.discretizer is None:
                raise DataError("sequence is not discretized and no discretizer is available")
            obs = apply_discretizer(model.discretizer, obs)
        bins = obs.discretized
    else:
        bins = np.asarray(obs)
        if bins.ndim == 1:
            bins = bins[:, None]
        if not np.issubdtype(bins.dtype, np.integer):
            raise DataError("observations must be integer bin indices")
    if bins.ndim != 2 or bins.shape[0] < 1:
        raise DataError("observations must be a non-empty T x n matrix")
    n, upper = (model.n, model.D) if model is not None else (bins.shape[1], D)
    if bins.shape[1] != n:
        raise DataError(f"observations have {bins.shape[1]} sensors, model expects {n}")
    if bins.min() < 1 or (upper is not None and bins.max() > upper):
        raise DataError(f"bin indices must lie in [1, {upper}]")
    return np.ascontiguousarray(bins, dtype=np.int64)


def emission_loglik(phi: np.ndarray, bins: np.ndarray) -> np.ndarray:
    """(T, m) log Pr(s_t^{1:n} | B_t = b), factorised over sensors."""
    with np.errstate(divide="ignore"):
        logphi = np.log(phi)
    out = np.zeros((bins.shape[0], phi.shape[0]))
    for k in range(bins.shape[1]):
        out += logphi[:, k, bins[:, k] - 1].T
    return out


def _scaled(loglik: np.ndarray):
    peak = loglik.max(axis=1)
    dead = np.flatnonzero(~np.isfinite(peak))
    if dead.size:
        raise NumericalError(f"zero likelihood for every state at t={int(dead[0])}")
    return np.exp(loglik - peak[:, None]), peak


def _forward(model: HmmModel, bins: np.ndarray):
    lik, peak = _scaled(emission_loglik(model.phi, bins))
    alpha, log_norm, bad = _kernels.forward(model.pi, model.theta, lik)
    if bad >= 0:
        raise NumericalError(f"zero total likelihood at t={bad}")
    return alpha, float(log_norm.sum() + peak.sum()), lik, log_norm


def filter_marginals(model: HmmModel, obs: Observations) -> tuple[np.ndarray, float]:
    """Filtered posteriors Pr(B_t | s_{1:t}) (T x m) and the sequence log-likelihood."""
    alpha, ll, _, _ = _forward(model, as_bins(obs, model))
    return alpha, ll


def filter_predict(model: HmmModel, obs: Observations) -> tuple[tuple, np.ndarray]:
    """Online MAP filtering: per-tick argmax of the filtered posterior.

    Only observations up to t influence the prediction at t. Ties go to the
    lowest state index.
    """
    alpha, _ = filter_marginals(model, obs)
    idx = alpha.argmax(axis=1)
    return tuple(model.state_names[i] for i in idx), alpha


def log_likelihood(model: HmmModel, obs: Observations) -> float:
    """log Pr(s_{1:T}^{1:n}) via the forward recursion."""
    return filter_marginals(model, obs)[1]


def posteriors(model: HmmModel, bins: np.ndarray):
    """Forward-backward smoothing.

    Returns (gamma, xi_sum, loglik) where gamma[t, b] = Pr(B_t = b | s_{1:T}) and
    xi_sum[b, b2] = sum_t Pr(B_t = b, B_{t+1} = b2 | s_{1:T}).
    """
    alpha, ll, lik, log_norm = _forward(model, bins)
    gamma, xi = _kernels.backward(model.theta, lik, alpha, log_norm)
    return gamma, xi, ll
