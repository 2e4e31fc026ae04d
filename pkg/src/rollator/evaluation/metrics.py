"""Windowed accuracy, windowed confusion matrices and transition counts.

A tick t counts as correct under window x when the true label at t appears
anywhere in the predicted sequence within [t - x, t + x].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from ..core.types import LabelSet
from ..errors import DataError

DEFAULT_WINDOWS = tuple(range(0, 51, 5))
DEFAULT_WINDOW = 25


def _check(actual, predicted, window):
    a = np.asarray(actual)
    p = np.asarray(predicted)
    if a.ndim != 1 or p.ndim != 1:
        raise DataError("label sequences must be one-dimensional")
    if a.shape != p.shape:
        raise DataError(f"length mismatch: {a.shape[0]} actual vs {p.shape[0]} predicted labels")
    if a.shape[0] == 0:
        raise DataError("empty label sequences")
    if window < 0 or int(window) != window:
        raise DataError("window must be a non-negative integer")
    return a, p, int(window)


def window_hits(actual, predicted, window: int = 0) -> np.ndarray:
    """Boolean per tick: is actual[t] among predicted[t-x .. t+x]?"""
    a, p, x = _check(actual, predicted, window)
    T = a.shape[0]
    t = np.arange(T)
    lo = np.maximum(0, t - x)
    hi = np.minimum(T - 1, t + x)
    hits = np.zeros(T, dtype=bool)
    for label in np.unique(a):
        rows = np.flatnonzero(a == label)
        prefix = np.concatenate([[0], np.cumsum(p == label)])
        hits[rows] = prefix[hi[rows] + 1] - prefix[lo[rows]] > 0
    return hits


def windowed_accuracy(actual, predicted, window: int = 0) -> float:
    """Fraction of ticks whose true label occurs in the predicted window."""
    return float(window_hits(actual, predicted, window).mean())


def windowed_confusion(actual, predicted, label_set: LabelSet, window: int = 0) -> np.ndarray:
    """m x m counts; row = true label. A windowed hit lands on the diagonal,
    otherwise the tick is charged to the label predicted at t."""
    hits = window_hits(actual, predicted, window)
    ai = label_set.encode(list(np.asarray(actual)))
    pi = label_set.encode(list(np.asarray(predicted)))
    cols = np.where(hits, ai, pi)
    conf = np.zeros((label_set.m, label_set.m), dtype=np.int64)
    np.add.at(conf, (ai, cols), 1)
    return conf


def per_behaviour_accuracy(confusion: np.ndarray) -> np.ndarray:
    """Diagonal over row sums; NaN for behaviours that never occur."""
    conf = np.asarray(confusion, dtype=float)
    rows = conf.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(rows > 0, np.diag(conf) / rows, np.nan)


@dataclass(frozen=True)
class TransitionCounts:
    at: int  # actual transitions
    pt: int  # predicted transitions
    cpt: int  # correctly predicted transitions

    def __post_init__(self):
        if not 0 <= self.cpt <= min(self.at, self.pt):
            raise DataError("CPT must lie in [0, min(AT, PT)]")

    @property
    def cpt_over_at(self) -> float:
        """Reported as "precision" in the original metric definition."""
        return self.cpt / self.at if self.at else 0.0

    @property
    def cpt_over_pt(self) -> float:
        """Reported as "recall" in the original metric definition."""
        return self.cpt / self.pt if self.pt else 0.0

    def __add__(self, other: "TransitionCounts") -> "TransitionCounts":
        return TransitionCounts(self.at + other.at, self.pt + other.pt, self.cpt + other.cpt)


def _transitions(seq: np.ndarray):
    t = np.flatnonzero(seq[1:] != seq[:-1]) + 1
    return t, seq[t - 1], seq[t]


def transition_metrics(actual, predicted, window: int = 0) -> TransitionCounts:
    """AT, PT and CPT.

    A predicted transition at t is correct if an actual transition with the
    same (from, to) labels occurs at some t' in [t - x, t + x]; each actual
    transition can be claimed once. Predicted transitions are matched in time
    order to the earliest free actual candidate, which yields a maximum
    matching because every window has the same width. With x = 0 this is
    CPT = sum_t [p_t != p_{t-1}, a_t = p_t, a_{t-1} = p_{t-1}].
    """
    a, p, x = _check(actual, predicted, window)
    at, a_from, a_to = _transitions(a)
    pt, p_from, p_to = _transitions(p)
    cands: dict = {}
    for t, f, g in zip(at, a_from, a_to):
        cands.setdefault((f, g), []).append(t)
    nxt = dict.fromkeys(cands, 0)  # candidates before nxt[key] are used or out of reach
    cpt = 0
    for t, f, g in zip(pt, p_from, p_to):
        c = cands.get((f, g))
        if c is None:
            continue
        i = nxt[(f, g)]
        while i < len(c) and c[i] < t - x:
            i += 1
        if i < len(c) and c[i] <= t + x:
            cpt += 1
            i += 1
        nxt[(f, g)] = i
    return TransitionCounts(int(at.size), int(pt.size), cpt)


@dataclass
class EvalReport:
    """Windowed metrics for one or more sequences pooled together."""

    label_set: LabelSet
    window: int
    confusion: np.ndarray
    transitions: TransitionCounts

    @property
    def total(self) -> int:
        return int(self.confusion.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.confusion) / self.total)

    @property
    def per_behaviour(self) -> dict:
        acc = per_behaviour_accuracy(self.confusion)
        return {b: float(v) for b, v in zip(self.label_set.members, acc)}

    def __add__(self, other: "EvalReport") -> "EvalReport":
        if self.label_set != other.label_set or self.window != other.window:
            raise DataError("can only pool reports with the same labels and window")
        return EvalReport(self.label_set, self.window, self.confusion + other.confusion,
                          self.transitions + other.transitions)

    def to_json(self) -> dict:
        t = self.transitions
        return {
            "window": self.window,
            "ticks": self.total,
            "accuracy": self.accuracy,
            "accuracy_pct": 100.0 * self.accuracy,
            "per_behaviour_accuracy_pct": {
                b: (None if np.isnan(v) else 100.0 * v) for b, v in self.per_behaviour.items()},
            "labels": list(self.label_set.members),
            "confusion": self.confusion.tolist(),
            "transitions": {"AT": t.at, "PT": t.pt, "CPT": t.cpt,
                            "cpt_over_at": t.cpt_over_at, "cpt_over_pt": t.cpt_over_pt},
        }


def evaluate(actual, predicted, label_set: LabelSet, window: int = DEFAULT_WINDOW) -> EvalReport:
    conf = windowed_confusion(actual, predicted, label_set, window)
    return EvalReport(label_set, int(window), conf, transition_metrics(actual, predicted, window))


def pool(reports: Iterable[EvalReport]) -> EvalReport:
    reports = list(reports)
    if not reports:
        raise DataError("nothing to pool")
    out = reports[0]
    for r in reports[1:]:
        out = out + r
    return out


def evaluate_many(actual_seqs: Sequence, predicted_seqs: Sequence, label_set: LabelSet,
                  windows: Optional[Sequence[int]] = None) -> dict:
    """{window: pooled EvalReport}; windows never cross sequence boundaries."""
    if len(actual_seqs) != len(predicted_seqs):
        raise DataError("different numbers of actual and predicted sequences")
    windows = DEFAULT_WINDOWS if windows is None else windows
    return {int(x): pool(evaluate(a, p, label_set, x) for a, p in zip(actual_seqs, predicted_seqs))
            for x in windows}


SWEEP_HEADER = ("window", "accuracy", "cpt_over_at", "cpt_over_pt")


def window_sweep(reports: dict) -> list[tuple]:
    """Rows (window, accuracy, cpt_over_at, cpt_over_pt) sorted by window."""
    return [(x, r.accuracy, r.transitions.cpt_over_at, r.transitions.cpt_over_pt)
            for x, r in sorted(reports.items())]
