"""Penalised maximum-likelihood training by nonlinear conjugate gradients.

Polak-Ribiere+ directions (reset to steepest descent whenever the update
coefficient is negative or the direction is not a descent direction), with
step lengths from scipy's strong-Wolfe line search. If that search fails the
step falls back to steepest descent with step halving.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import line_search

from ..core.types import FeatureSequence, LabelSet
from ..errors import DataError
from .model import DEFAULT_SIGMA2, CrfModel, nll_and_gradient, num_weights, prepare
from .thresholds import DEFAULT_OVERLAP_CUTOFF, ThresholdBank, fit_thresholds

DEFAULT_MAX_ITERS = 100
DEFAULT_GTOL = 1e-6
WOLFE_C1 = 1e-4
WOLFE_C2 = 0.1
MAX_HALVINGS = 60


@dataclass
class CrfTrainResult:
    model: CrfModel
    trace: np.ndarray  # rows (iteration, L, gradient norm); row 0 is the starting point
    converged: bool
    fallback_steps: int = 0


class _Objective:
    """Caches (L, gradient) for recently evaluated points so the line search
    does not recompute them."""

    def __init__(self, data, bank, sigma2, workers):
        self.data, self.bank, self.sigma2, self.workers = data, bank, sigma2, workers
        self._cache: dict[bytes, tuple[float, np.ndarray]] = {}

    def both(self, w):
        key = np.asarray(w, dtype=float).tobytes()
        hit = self._cache.get(key)
        if hit is None:
            hit = nll_and_gradient(w, self.data, self.bank, self.sigma2, self.workers)
            if len(self._cache) > 8:
                self._cache.clear()
            self._cache[key] = hit
        return hit

    def f(self, w):
        return self.both(w)[0]

    def grad(self, w):
        return self.both(w)[1]


def minimize_cg(objective: _Objective, w0: np.ndarray, max_iters: int = DEFAULT_MAX_ITERS,
                gtol: float = DEFAULT_GTOL):
    """Returns (w, trace rows, converged, number of fallback steps)."""
    w = np.array(w0, dtype=float)
    f, g = objective.both(w)
    trace = [(0, f, float(np.linalg.norm(g)))]
    d = -g
    f_prev = None
    fallbacks = []
    for it in range(1, max_iters + 1):
        if np.linalg.norm(g) < gtol:
            return _done(w, trace, True, fallbacks)
        if float(g @ d) >= 0:
            d = -g
        with warnings.catch_warnings():
            # scipy's per-call warnings are replaced by one aggregated warning per run
            warnings.filterwarnings("ignore", "(The line search|Rounding errors)", RuntimeWarning)
            step, _, _, f_new, _, _ = line_search(objective.f, objective.grad, w, d, g, f,
                                                  f_prev, c1=WOLFE_C1, c2=WOLFE_C2)
        if step is None or f_new is None or not f_new <= f:
            fallbacks.append(it)
            step, d = _halving_step(objective, w, f, g)
            if step is None:
                return _done(w, trace, False, fallbacks)
        w_new = w + step * d
        f_new, g_new = objective.both(w_new)
        beta = max(0.0, float(g_new @ (g_new - g)) / float(g @ g))
        d = -g_new + beta * d
        w, f_prev, f, g = w_new, f, f_new, g_new
        trace.append((it, f, float(np.linalg.norm(g))))
    return _done(w, trace, bool(np.linalg.norm(g) < gtol), fallbacks)


def _done(w, trace, converged, fallbacks):
    if fallbacks:
        warnings.warn(f"line search failed at {len(fallbacks)} iteration(s), first at "
                      f"{fallbacks[0]}; took steepest-descent steps instead", RuntimeWarning,
                      stacklevel=4)
    return w, trace, converged, len(fallbacks)


def _halving_step(objective, w, f, g):
    d = -g
    step = 1.0
    gg = float(g @ g)
    for _ in range(MAX_HALVINGS):
        if objective.f(w + step * d) <= f - WOLFE_C1 * step * gg:
            return step, d
        step *= 0.5
    return None, d


def train_crf(data: Sequence[FeatureSequence], label_set: LabelSet,
              sigma2: float = DEFAULT_SIGMA2, max_iters: int = DEFAULT_MAX_ITERS,
              gtol: float = DEFAULT_GTOL, bank: Optional[ThresholdBank] = None,
              overlap_cutoff: float = DEFAULT_OVERLAP_CUTOFF, workers: int = 1) -> CrfTrainResult:
    """Fit thresholds (unless given) and weights from labeled feature sequences.

    Starts from all-zero weights; deterministic given the data.
    """
    if not data:
        raise DataError("no training sequences")
    if not sigma2 > 0:
        raise DataError("sigma2 must be positive")
    if max_iters < 0:
        raise DataError("max_iters must be non-negative")
    if bank is None:
        bank = fit_thresholds(data, label_set, overlap_cutoff)
    elif bank.label_set != label_set:
        raise DataError("threshold bank was fitted for a different label set")
    objective = _Objective(prepare(data, bank), bank, sigma2, workers)
    w, trace, converged, fallbacks = minimize_cg(
        objective, np.zeros(num_weights(bank.m, bank.n)), max_iters, gtol)
    model = CrfModel.from_weights(w, bank, sigma2)
    return CrfTrainResult(model, np.array(trace, dtype=float), converged, fallbacks)
