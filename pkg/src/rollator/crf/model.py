"""Linear-chain CRF with threshold-indicator state features.

The conditional of a label sequence given observations is

    Pr(b_{1:T} | s) = exp(sum_t mu . f(s_t, b_t) + nu * sum_t [b_{t-1} = b_t]) / Z(s)

where f holds, for every ordered pair (b_t, b') and feature k, one
exceed and one not-exceed indicator (exceed iff s_t[k] > threshold). Only
pairs whose first member is the current label are active.

Weights pack into one vector: all exceed weights (m, m-1, n) flattened,
then all not-exceed weights, then nu.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from ..core.types import FeatureSequence, LabelSet
from ..errors import DataError, NumericalError
from . import _kernels
from .thresholds import ThresholdBank

DEFAULT_SIGMA2 = 1.0


def num_weights(m: int, n: int) -> int:
    return 2 * m * (m - 1) * n + 1


def unpack(weights, m: int, n: int):
    """Split a weight vector into (mu_exceed, mu_not, nu)."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (num_weights(m, n),):
        raise DataError(f"expected {num_weights(m, n)} weights, got shape {w.shape}")
    half = m * (m - 1) * n
    return (w[:half].reshape(m, m - 1, n), w[half:2 * half].reshape(m, m - 1, n),
            float(w[-1]))


def pack(mu_e, mu_n, nu) -> np.ndarray:
    return np.concatenate([np.ravel(mu_e), np.ravel(mu_n), [float(nu)]])


@dataclass(frozen=True, eq=False)
class CrfModel:
    bank: ThresholdBank
    mu_exceed: np.ndarray  # (m, m-1, n)
    mu_not: np.ndarray  # (m, m-1, n)
    nu: float
    sigma2: float = DEFAULT_SIGMA2

    def __post_init__(self):
        shape = self.bank.thresholds.shape
        mu_e = np.array(self.mu_exceed, dtype=float)
        mu_n = np.array(self.mu_not, dtype=float)
        if mu_e.shape != shape or mu_n.shape != shape:
            raise DataError(f"weights must have shape {shape}")
        if not (np.all(np.isfinite(mu_e)) and np.all(np.isfinite(mu_n))
                and math.isfinite(self.nu)):
            raise DataError("CRF weights must be finite")
        if not self.sigma2 > 0:
            raise DataError("sigma2 must be positive")
        mu_e.setflags(write=False)
        mu_n.setflags(write=False)
        object.__setattr__(self, "mu_exceed", mu_e)
        object.__setattr__(self, "mu_not", mu_n)
        object.__setattr__(self, "nu", float(self.nu))
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @classmethod
    def from_weights(cls, weights, bank: ThresholdBank, sigma2: float = DEFAULT_SIGMA2):
        mu_e, mu_n, nu = unpack(weights, bank.m, bank.n)
        return cls(bank, mu_e, mu_n, nu, sigma2)

    @classmethod
    def zeros(cls, bank: ThresholdBank, sigma2: float = DEFAULT_SIGMA2):
        return cls.from_weights(np.zeros(num_weights(bank.m, bank.n)), bank, sigma2)

    @property
    def label_set(self) -> LabelSet:
        return self.bank.label_set

    @property
    def m(self) -> int:
        return self.bank.m

    @property
    def n(self) -> int:
        return self.bank.n

    @property
    def weights(self) -> np.ndarray:
        return pack(self.mu_exceed, self.mu_not, self.nu)

    def __eq__(self, other):
        if not isinstance(other, CrfModel):
            return NotImplemented
        return (self.bank == other.bank and self.nu == other.nu and self.sigma2 == other.sigma2
                and np.array_equal(self.mu_exceed, other.mu_exceed)
                and np.array_equal(self.mu_not, other.mu_not))


def feature_vector(obs_t, b_t: str, bank: ThresholdBank, prev=None) -> np.ndarray:
    """Indicator vector aligned with the packed weights for one tick.

    The last slot is the transition feature [prev == b_t]; it is 0 when no
    previous label is given.
    """
    x = np.asarray(obs_t, dtype=float)
    if x.shape != (bank.n,):
        raise DataError(f"expected {bank.n} features, got shape {x.shape}")
    m, n = bank.m, bank.n
    b = bank.label_set.index(b_t)
    exceed = np.zeros((m, m - 1, n))
    not_exceed = np.zeros((m, m - 1, n))
    above = x[None, :] > bank.thresholds[b]
    exceed[b] = above
    not_exceed[b] = ~above
    return pack(exceed, not_exceed, transition_feature(prev, b_t) if prev is not None else 0)


def transition_feature(prev: str, cur: str) -> int:
    return int(str(prev) == str(cur))


def _as_values(obs, n: int) -> np.ndarray:
    x = obs.values if isinstance(obs, FeatureSequence) else obs
    x = np.ascontiguousarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != n:
        raise DataError(f"expected a T x {n} observation matrix, got shape {x.shape}")
    if x.shape[0] == 0:
        raise DataError("empty observation sequence")
    return x


def _labeled(data, bank: ThresholdBank):
    out = []
    for item in data:
        if isinstance(item, FeatureSequence):
            if item.labels is None:
                raise DataError(f"sequence {item.participant_id} is unlabeled")
            x, labels = item.values, item.labels
        else:
            x, labels = item
        x = _as_values(x, bank.n)
        labels = np.asarray(labels)
        y = labels.astype(np.int64) if labels.dtype.kind in "iu" else bank.label_set.encode(labels)
        if y.shape != (x.shape[0],):
            raise DataError(f"{y.shape[0]} labels for {x.shape[0]} ticks")
        if y.min() < 0 or y.max() >= bank.m:
            raise DataError("label index out of range")
        out.append((bank.ranks(x), y))
    if not out:
        raise DataError("no training sequences")
    return out


class PreparedData(list):
    """Labeled sequences as (threshold ranks, label indices) pairs for one bank."""

    def __init__(self, items, bank: ThresholdBank):
        super().__init__(items)
        self.bank = bank


def prepare(data, bank: ThresholdBank) -> PreparedData:
    return PreparedData(_labeled(data, bank), bank)


def _score_tables(mu_e, mu_n, bank: ThresholdBank):
    # base[b]: score with nothing exceeded; prefix[b, k, r]: gain from the r lowest thresholds
    order, _ = bank.sort_order
    delta = np.take_along_axis(np.moveaxis(mu_e - mu_n, 1, 2), order, axis=2)
    prefix = np.zeros(delta.shape[:2] + (delta.shape[2] + 1,))
    np.cumsum(delta, axis=2, out=prefix[:, :, 1:])
    return mu_n.sum(axis=(1, 2)), prefix


def _indicator_counts(hist, order):
    # hist[b, k, r] -> weighted exceed / not-exceed counts in (m, m-1, n) layout
    suffix = np.cumsum(hist[:, :, ::-1], axis=2)[:, :, ::-1]
    exceed = np.empty(order.shape)
    np.put_along_axis(exceed, order, suffix[:, :, 1:], axis=2)
    exceed = np.moveaxis(exceed, 2, 1)
    total = suffix[:, 0, 0]
    return exceed, total[:, None, None] - exceed


def node_scores(weights, bank: ThresholdBank, x: np.ndarray) -> np.ndarray:
    """Per-tick, per-label state score (T, m)."""
    mu_e, mu_n, _ = unpack(weights, bank.m, bank.n)
    base, prefix = _score_tables(mu_e, mu_n, bank)
    return _kernels.node_scores(bank.ranks(_as_values(x, bank.n)), base, prefix)


def _sequence_terms(rank, y, base, prefix, order, nu):
    # (nll contribution, gradient contribution) for one labeled sequence
    node = _kernels.node_scores(rank, base, prefix)
    log_z, gamma, same = _kernels.forward_backward(node, nu)
    if not math.isfinite(log_z):
        raise NumericalError("log partition function is not finite")
    T = y.shape[0]
    emp_same = float(np.count_nonzero(y[1:] == y[:-1]))
    score = math.fsum(node[np.arange(T), y]) + nu * emp_same
    w = gamma
    w[np.arange(T), y] -= 1.0
    ce, cn = _indicator_counts(_kernels.rank_histogram(rank, w, order.shape[2]), order)
    return log_z - score, pack(ce, cn, same - emp_same)


def nll_and_gradient(weights, data, bank: ThresholdBank, sigma2: float = DEFAULT_SIGMA2,
                     workers: int = 1):
    """Penalised negative log-likelihood and its gradient.

    L = sum_seq (log Z - score(labels)) + |w|^2 / (2 sigma2). Per-sequence
    terms are combined with exactly rounded summation, so the result does not
    depend on evaluation order.
    """
    if not sigma2 > 0:
        raise DataError("sigma2 must be positive")
    w = np.asarray(weights, dtype=float)
    if not np.all(np.isfinite(w)):
        raise DataError("weights must be finite")
    mu_e, mu_n, nu = unpack(w, bank.m, bank.n)
    base, prefix = _score_tables(mu_e, mu_n, bank)
    order, _ = bank.sort_order
    prepared = isinstance(data, PreparedData) and data.bank is bank
    seqs = data if prepared else _labeled(data, bank)

    def run(item):
        return _sequence_terms(item[0], item[1], base, prefix, order, nu)

    if workers > 1 and len(seqs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, seqs))
    else:
        parts = [run(s) for s in seqs]
    nll = math.fsum([p[0] for p in parts] + [math.fsum(w * w) / (2.0 * sigma2)])
    grads = np.stack([p[1] for p in parts] + [w / sigma2])
    grad = np.array([math.fsum(col) for col in grads.T])
    return nll, grad


def log_partition(model: CrfModel, obs) -> float:
    """log Z for one observation sequence."""
    node = node_scores(model.weights, model.bank, obs)
    return float(_kernels.forward_backward(node, model.nu)[0])


def label_marginals(model: CrfModel, obs) -> np.ndarray:
    node = node_scores(model.weights, model.bank, obs)
    return _kernels.forward_backward(node, model.nu)[1]


def viterbi_decode(model: CrfModel, obs: Union[FeatureSequence, np.ndarray]) -> tuple[str, ...]:
    """Highest-scoring label sequence; ties go to the label earliest in label-set order."""
    node = node_scores(model.weights, model.bank, obs)
    return model.label_set.decode(_kernels.viterbi(node, model.nu))


def sequence_score(model: CrfModel, obs, labels: Sequence[str]) -> float:
    """Unnormalised log score of a labeling."""
    y = model.label_set.encode(labels)
    node = node_scores(model.weights, model.bank, obs)
    return float(node[np.arange(len(y)), y].sum() + model.nu * np.count_nonzero(y[1:] == y[:-1]))
