"""Per-pair, per-feature thresholds for the CRF state features.

For an ordered behaviour pair (b, b') and feature k the threshold is the
midpoint of the class medians of feature k under b and under b'. When the
two class histograms overlap too much to separate the pair, the entry is
marked FALLBACK and set to the feature's pooled training mean.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from ..core.types import FeatureSequence, LabelSet
from ..errors import DataError

DEFAULT_OVERLAP_CUTOFF = 0.75
OVERLAP_BINS = 20


def others(m: int, b: int) -> list[int]:
    """Label indices paired with ``b``, in label order."""
    return [c for c in range(m) if c != b]


@dataclass(frozen=True, eq=False)
class ThresholdBank:
    """Thresholds and relevance flags, both shaped (m, m-1, n).

    Entry [b, j, k] belongs to the pair (b, others(m, b)[j]) and feature k.
    """

    label_set: LabelSet
    feature_names: tuple[str, ...]
    thresholds: np.ndarray
    relevant: np.ndarray

    def __post_init__(self):
        m, n = self.label_set.m, len(self.feature_names)
        thr = np.array(self.thresholds, dtype=float)
        rel = np.array(self.relevant, dtype=bool)
        if thr.shape != (m, m - 1, n) or rel.shape != thr.shape:
            raise DataError(f"threshold bank must have shape {(m, m - 1, n)}, got {thr.shape}")
        if not np.all(np.isfinite(thr)):
            raise DataError("thresholds must be finite")
        thr.setflags(write=False)
        rel.setflags(write=False)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "thresholds", thr)
        object.__setattr__(self, "relevant", rel)

    @property
    def m(self) -> int:
        return self.label_set.m

    @property
    def n(self) -> int:
        return len(self.feature_names)

    @cached_property
    def sort_order(self) -> tuple[np.ndarray, np.ndarray]:
        """(order, sorted thresholds), both (m, n, m-1), sorting each (b, k) row."""
        t = np.moveaxis(self.thresholds, 1, 2)
        order = np.argsort(t, axis=2, kind="stable")
        return order, np.take_along_axis(t, order, axis=2)

    def ranks(self, x: np.ndarray) -> np.ndarray:
        """rank[t, b, k] = number of thresholds of (b, ., k) strictly below x[t, k]."""
        _, srt = self.sort_order
        out = np.empty((x.shape[0], self.m, self.n), dtype=np.int64)
        for b in range(self.m):
            for k in range(self.n):
                out[:, b, k] = np.searchsorted(srt[b, k], x[:, k], side="left")
        return out

    def pairs(self) -> list[tuple[str, str]]:
        codes = self.label_set.members
        return [(codes[b], codes[c]) for b in range(self.m) for c in others(self.m, b)]

    def threshold(self, b: str, b2: str, k: int) -> float:
        i, c = self.label_set.index(b), self.label_set.index(b2)
        if i == c:
            raise DataError("thresholds exist only for distinct behaviours")
        return float(self.thresholds[i, c if c < i else c - 1, k])

    def __eq__(self, other):
        if not isinstance(other, ThresholdBank):
            return NotImplemented
        return (self.label_set == other.label_set and self.feature_names == other.feature_names
                and np.array_equal(self.thresholds, other.thresholds)
                and np.array_equal(self.relevant, other.relevant))


def overlap_coefficient(a, b, bins: int = OVERLAP_BINS) -> float:
    """Shared mass of the two empirical histograms on a common grid, in [0, 1]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    if hi == lo:
        return 1.0
    # np.histogram rejects subnormal ranges; halving keeps overflowing ranges finite
    with np.errstate(over="ignore"):
        half = not np.isfinite(hi - lo)

    def hist(x):
        pos = (x / 2 - lo / 2) / (hi / 2 - lo / 2) if half else (x - lo) / (hi - lo)
        idx = np.floor(pos * bins).astype(np.int64)
        return np.bincount(np.clip(idx, 0, bins - 1), minlength=bins) / x.size

    return float(np.minimum(hist(a), hist(b)).sum())


def fit_thresholds(training: Sequence[FeatureSequence], label_set: LabelSet,
                   overlap_cutoff: float = DEFAULT_OVERLAP_CUTOFF,
                   feature_names: Optional[Sequence[str]] = None) -> ThresholdBank:
    """Fit one threshold per (ordered pair, feature) from labeled training data."""
    if not training:
        raise DataError("no training sequences")
    names = tuple(feature_names or training[0].feature_names)
    values, labels = [], []
    for seq in training:
        if seq.labels is None:
            raise DataError(f"sequence {seq.participant_id} is unlabeled")
        if seq.feature_names != names:
            raise DataError("training sequences disagree on feature layout")
        values.append(np.asarray(seq.values, dtype=float))
        labels.append(label_set.encode(seq.labels))
    X = np.vstack(values)
    y = np.concatenate(labels)
    m, n = label_set.m, len(names)
    by_class = [X[y == b] for b in range(m)]
    missing = [label_set.members[b] for b in range(m) if by_class[b].shape[0] == 0]
    if missing:
        warnings.warn(f"no training ticks for {', '.join(missing)}; their pairs use the "
                      f"feature mean", RuntimeWarning, stacklevel=2)
    means = X.mean(axis=0)
    medians = [np.median(c, axis=0) if c.shape[0] else None for c in by_class]

    thr = np.empty((m, m - 1, n))
    rel = np.zeros((m, m - 1, n), dtype=bool)
    for b in range(m):
        for j, c in enumerate(others(m, b)):
            for k in range(n):
                if by_class[b].shape[0] and by_class[c].shape[0] and overlap_coefficient(
                        by_class[b][:, k], by_class[c][:, k]) <= overlap_cutoff:
                    thr[b, j, k] = 0.5 * (medians[b][k] + medians[c][k])
                    rel[b, j, k] = True
                else:
                    thr[b, j, k] = means[k]
    return ThresholdBank(label_set, names, thr, rel)
