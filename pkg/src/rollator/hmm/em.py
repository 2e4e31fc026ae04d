"""Unsupervised HMM learning with Baum-Welch EM and random restarts."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import DataError
from ..features import Discretizer
from .inference import Observations, as_bins, log_likelihood, posteriors
from .model import HmmModel

log = logging.getLogger(__name__)

DEFAULT_RESTARTS = 20


@dataclass
class EMResult:
    model: HmmModel
    log_likelihood: float
    best_restart: int
    traces: list = field(default_factory=list)  # per restart: log-likelihood before each M-step


def random_model(rng: np.random.Generator, L: int, n: int, D: int) -> HmmModel:
    """Parameters drawn from symmetric Dirichlet(1) distributions."""
    return HmmModel(rng.dirichlet(np.ones(L)), rng.dirichlet(np.ones(L), size=L),
                    rng.dirichlet(np.ones(D), size=(L, n)))


def em_step(model: HmmModel, data: Sequence[np.ndarray]) -> tuple[HmmModel, float]:
    """One E-step + M-step. Returns the updated model and the log-likelihood of ``model``."""
    L, n, D = model.m, model.n, model.D
    e0 = np.zeros(L)
    e_trans = np.zeros((L, L))
    e_emit = np.zeros((L, n, D))
    total = 0.0
    for bins in data:
        gamma, xi, ll = posteriors(model, bins)
        total += ll
        e0 += gamma[0]
        e_trans += xi
        for k in range(n):
            col = bins[:, k] - 1
            for b in range(L):
                e_emit[b, k] += np.bincount(col, weights=gamma[:, b], minlength=D)
    pi = e0 / e0.sum()
    theta = _rows_or_keep(e_trans, model.theta)
    phi = _rows_or_keep(e_emit, model.phi)
    return HmmModel(pi, theta, phi, model.state_names), total


def _rows_or_keep(expected: np.ndarray, previous: np.ndarray) -> np.ndarray:
    # a state with no posterior mass keeps its old row; it cannot affect the likelihood
    totals = expected.sum(axis=-1, keepdims=True)
    return np.where(totals > 0, expected / np.where(totals > 0, totals, 1.0), previous)


def fit_em(data: Sequence[Observations], num_states: int, D: int, restarts: int = DEFAULT_RESTARTS,
           max_iters: int = 200, tol: float = 1e-4, rng_seed: int = 0,
           discretizer: Optional[Discretizer] = None) -> EMResult:
    """Baum-Welch from ``restarts`` seeded random initialisations.

    Each run stops after ``max_iters`` M-steps or when the log-likelihood
    improves by less than ``tol``; the run with the highest final
    log-likelihood wins.
    """
    if num_states < 1:
        raise DataError("num_states must be at least 1")
    if restarts < 1:
        raise DataError("restarts must be at least 1")
    if not data:
        raise DataError("empty dataset")
    seqs = [as_bins(o, D=D) for o in data]
    n = seqs[0].shape[1]
    if any(s.shape[1] != n for s in seqs):
        raise DataError("sequences disagree on sensor count")

    best: Optional[tuple[float, int, HmmModel]] = None
    traces = []
    for r, child in enumerate(np.random.SeedSequence(rng_seed).spawn(restarts)):
        model = random_model(np.random.default_rng(child), num_states, n, D)
        trace = []
        prev = -np.inf
        for _ in range(max_iters):
            updated, ll = em_step(model, seqs)
            trace.append(ll)
            model = updated
            if ll - prev < tol:
                break
            prev = ll
        final = sum(log_likelihood(model, s) for s in seqs)
        trace.append(final)
        traces.append(np.asarray(trace))
        log.debug("EM restart %d: %d iterations, log-likelihood %.6f", r, len(trace) - 1, final)
        if best is None or final > best[0]:
            best = (final, r, model)
    final, r, model = best
    if discretizer is not None:
        model = model.with_discretizer(discretizer)
    return EMResult(model, final, r, traces)

