"""Leave-one-participant-out cross-validation.

EXP2: each fold tests every run of one participant and trains on all other
participants. EXP1: each fold tests one participant's last run and trains on
everyone else plus that participant's remaining runs. Calibration,
discretizer and thresholds are refit inside every fold from training runs only.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..core.types import LabelSet, RawSequence
from ..errors import DataError
from .metrics import DEFAULT_WINDOW, DEFAULT_WINDOWS, EvalReport, evaluate_many, pool
from .recipes import Model, Recipe, featurize, predict_labels, train_model

PROTOCOLS = ("exp1", "exp2")


@dataclass(frozen=True)
class Fold:
    participant: str
    train: tuple  # indices into the input run list
    test: tuple


@dataclass
class FoldResult:
    fold: Fold
    model: Model
    actual: list  # label tuples, one per test run
    predicted: list
    reports: dict  # window -> EvalReport

    @property
    def ticks(self) -> int:
        return sum(len(a) for a in self.actual)


@dataclass
class CrossValResult:
    recipe: Recipe
    protocol: str
    label_set: LabelSet
    window: int
    folds: list

    def pooled(self, window: Optional[int] = None) -> EvalReport:
        """Counts summed over folds, so accuracy is the tick-weighted fold mean."""
        x = self.window if window is None else window
        return pool(f.reports[x] for f in self.folds)

    @property
    def windows(self) -> tuple:
        return tuple(sorted(self.folds[0].reports))

    def pooled_sweep(self) -> dict:
        return {x: self.pooled(x) for x in self.windows}


def make_folds(raws: Sequence[RawSequence], protocol: str = "exp2") -> list[Fold]:
    """Folds in order of first appearance of each participant."""
    if protocol not in PROTOCOLS:
        raise DataError(f"protocol must be one of {PROTOCOLS}")
    groups: dict = {}
    for i, r in enumerate(raws):
        groups.setdefault(r.participant_id, []).append(i)
    if len(groups) < 2:
        raise DataError("cross-validation needs at least 2 participants")
    folds = []
    for p, idx in groups.items():
        others = [i for q, ix in groups.items() if q != p for i in ix]
        if protocol == "exp2":
            folds.append(Fold(p, tuple(others), tuple(idx)))
        else:
            if len(idx) < 2:
                raise DataError(f"EXP1 protocol needs at least 2 runs per participant; "
                                f"{p} has {len(idx)}")
            folds.append(Fold(p, tuple(sorted(others + idx[:-1])), (idx[-1],)))
    return folds


def _run_fold(fold: Fold, raws, label_set, recipe, windows, seed) -> FoldResult:
    train_raws = [raws[i] for i in fold.train]
    test_raws = [raws[i] for i in fold.test]
    for r in train_raws + test_raws:
        if r.labels is None:
            raise DataError(f"run of {r.participant_id} is unlabeled")
    train = featurize(train_raws, recipe)
    own_train = [r for r in train_raws if r.participant_id == fold.participant]
    test = featurize(test_raws, recipe, {fold.participant: own_train} if own_train else None)
    model = train_model(recipe, train, label_set, seed)
    predicted = [predict_labels(model, s) for s in test]
    actual = [r.labels for r in test_raws]
    return FoldResult(fold, model, actual, predicted,
                      evaluate_many(actual, predicted, label_set, windows))


def loocv(raws: Sequence[RawSequence], label_set: LabelSet, recipe: Recipe,
          protocol: str = "exp2", windows: Optional[Sequence[int]] = None,
          window: int = DEFAULT_WINDOW, seed: int = 0, workers: int = 1) -> CrossValResult:
    """Run every fold; each gets an independent seed spawned from ``seed``."""
    windows = tuple(sorted(set(DEFAULT_WINDOWS if windows is None else windows) | {window}))
    folds = make_folds(raws, protocol)
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(len(folds))]
    args = [(f, raws, label_set, recipe, windows, s) for f, s in zip(folds, seeds)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(lambda a: _run_fold(*a), args))
    else:
        results = [_run_fold(*a) for a in args]
    return CrossValResult(recipe, protocol, label_set, int(window), results)
