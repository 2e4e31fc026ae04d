"""Maximum-likelihood HMM estimation from labeled, discretized sequences."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..core.types import FeatureSequence, LabelSet
from ..errors import DataError
from ..features import Discretizer
from .model import HmmModel

TRANSITIONS = ("learned", "persistence")
PRIORS = ("learned", "uniform", "initial")
DEFAULT_TAU = 4000.0


def persistence_transitions(m: int, tau: float) -> np.ndarray:
    """Rows where staying is tau times as likely as moving to any one other state."""
    if not tau > 0:
        raise DataError("tau must be positive")
    denom = m + tau - 1
    theta = np.full((m, m), 1.0 / denom)
    np.fill_diagonal(theta, tau / denom)
    return theta


def _normalize_rows(counts: np.ndarray, what: str, labels) -> np.ndarray:
    totals = counts.sum(axis=-1, keepdims=True)
    if np.any(totals == 0):
        b = int(np.argwhere(totals[..., 0] == 0)[0][0])
        raise DataError(
            f"{what} for state {labels[b]!r} has no counts; use a positive pseudocount")
    return counts / totals


def fit_supervised(data: Sequence[FeatureSequence], label_set: LabelSet, D: Optional[int] = None,
                   transitions: str = "learned", tau: float = DEFAULT_TAU,
                   prior: str = "learned", pseudocount: float = 1.0,
                   discretizer: Optional[Discretizer] = None) -> HmmModel:
    """Count-based estimates of pi, theta and phi with additive smoothing.

    ``prior="learned"`` is the pooled label frequency over all ticks;
    ``"initial"`` instead counts first labels of each sequence (smoothed).
    """
    transitions, prior = transitions.lower(), prior.lower()
    if transitions not in TRANSITIONS:
        raise DataError(f"transitions must be one of {TRANSITIONS}")
    if prior not in PRIORS:
        raise DataError(f"prior must be one of {PRIORS}")
    if pseudocount < 0:
        raise DataError("pseudocount must be non-negative")
    if not data:
        raise DataError("no training sequences")
    if D is None:
        D = discretizer.D if discretizer is not None else data[0].D
    if D is None:
        raise DataError("bin count D is unknown")
    m = label_set.m
    n = data[0].n
    trans = np.zeros((m, m))
    emit = np.zeros((m, n, D))
    freq = np.zeros(m)
    first = np.zeros(m)
    for seq in data:
        if seq.labels is None or seq.discretized is None:
            raise DataError(f"sequence {seq.participant_id!r} must be labeled and discretized")
        if seq.n != n:
            raise DataError("sequences disagree on sensor count")
        bins = seq.discretized
        if bins.max() > D:
            raise DataError(f"bin index {bins.max()} exceeds D={D}")
        z = label_set.encode(seq.labels)
        np.add.at(trans, (z[:-1], z[1:]), 1.0)
        freq += np.bincount(z, minlength=m)
        first[z[0]] += 1
        for k in range(n):
            np.add.at(emit, (z, k, bins[:, k] - 1), 1.0)

    if transitions == "learned":
        theta = _normalize_rows(trans + pseudocount, "transition row", label_set.members)
    else:
        theta = persistence_transitions(m, tau)
    if prior == "uniform":
        pi = np.full(m, 1.0 / m)
    elif prior == "learned":
        pi = freq / freq.sum()
    else:
        pi = (first + pseudocount) / (first.sum() + m * pseudocount)
    phi = _normalize_rows(emit + pseudocount, "emission row", label_set.members)
    names = discretizer.feature_names if discretizer is not None else data[0].feature_names
    return HmmModel(pi, theta, phi, label_set.members, names, discretizer)
