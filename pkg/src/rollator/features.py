"""Feature extraction (normalized loads or centre of pressure) and discretization."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .core.types import (
    LOAD_CHANNELS,
    RAW_CHANNELS,
    SAMPLE_RATE_HZ,
    FeatureSequence,
    RawSequence,
)
from .errors import DataError

DEFAULT_BINS = 20

NL_FEATURES = ("accel_x", "accel_y", "accel_z", "speed",
               "nload_fl", "nload_fr", "nload_rl", "nload_rr")
COP_FEATURES = ("accel_x", "accel_y", "accel_z", "speed",
                "frontal_cop", "sagittal_cop", "total_load")
MODES = ("nl", "cop")


def normalize_load(value, lo, hi):
    """Min-max normalise load readings, clamped to [0, 1]."""
    if not hi > lo:
        raise DataError(f"degenerate load range: min={lo}, max={hi}")
    out = (np.asarray(value, dtype=float) - lo) / (hi - lo)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def compute_cop(load_fl, load_fr, load_rl, load_rr):
    """Frontal and sagittal centre of pressure plus total load.

    frontal = (left - right) / total, sagittal = (rear - front) / total.
    Both are 0 where the total load is 0.
    """
    fl, fr, rl, rr = (np.asarray(v, dtype=float) for v in (load_fl, load_fr, load_rl, load_rr))
    if np.any(fl < 0) or np.any(fr < 0) or np.any(rl < 0) or np.any(rr < 0):
        raise DataError("loads must be non-negative")
    total = fl + fr + rl + rr
    safe = np.where(total > 0, total, 1.0)
    frontal = np.where(total > 0, ((fl + rl) - (fr + rr)) / safe, 0.0)
    sagittal = np.where(total > 0, ((rl + rr) - (fl + fr)) / safe, 0.0)
    if total.ndim == 0:
        return float(frontal), float(sagittal), float(total)
    return frontal, sagittal, total


def compute_speed(encoder, ticks_per_meter: float = 1.0) -> np.ndarray:
    """Signed walker speed from successive wheel-encoder readings; speed[0] = 0."""
    enc = np.asarray(encoder, dtype=float)
    if enc.ndim != 1 or enc.size < 1:
        raise DataError("encoder must be a non-empty 1-D sequence")
    if not ticks_per_meter > 0:
        raise DataError("ticks_per_meter must be positive")
    speed = np.zeros_like(enc)
    speed[1:] = np.diff(enc) / ticks_per_meter * SAMPLE_RATE_HZ
    return speed


@dataclass(frozen=True)
class Calibration:
    """Per-participant load range and encoder scale used by ``build_features``."""

    load_min: Optional[float] = None
    load_max: Optional[float] = None
    ticks_per_meter: float = 1.0


def fit_load_calibration(raws: Iterable[RawSequence], ticks_per_meter: float = 1.0) -> Calibration:
    """Min/max over the four load cells, pooled across the given sequences."""
    loads = np.concatenate([_loads(r).ravel() for r in raws])
    if loads.size == 0:
        raise DataError("no load readings to calibrate from")
    return Calibration(float(loads.min()), float(loads.max()), ticks_per_meter)


def _loads(raw: RawSequence) -> np.ndarray:
    try:
        idx = [raw.channel_names.index(c) for c in LOAD_CHANNELS]
    except ValueError:
        raise DataError(f"raw layout {raw.channel_names} lacks load channels") from None
    return raw.channels[:, idx]


def build_features(raw: RawSequence, mode: str = "cop",
                   calib: Optional[Calibration] = None) -> FeatureSequence:
    """Turn a canonical 8-channel raw sequence into NL (8) or COP (7) features.

    Accelerometer channels pass through unchanged. In NL mode a calibration
    without a load range falls back to the sequence's own min/max.
    """
    if tuple(raw.channel_names) != RAW_CHANNELS:
        raise DataError(f"expected raw layout {RAW_CHANNELS}, got {raw.channel_names}")
    mode = mode.lower()
    if mode not in MODES:
        raise DataError(f"unknown feature mode {mode!r}; expected one of {MODES}")
    calib = calib or Calibration()
    ch = raw.channels.astype(float)
    accel = ch[:, 0:3]
    speed = compute_speed(ch[:, 7], calib.ticks_per_meter)[:, None]
    loads = ch[:, 3:7]
    if mode == "nl":
        lo, hi = calib.load_min, calib.load_max
        if lo is None or hi is None:
            lo, hi = float(loads.min()), float(loads.max())
        values = np.hstack([accel, speed, normalize_load(loads, lo, hi)])
        names = NL_FEATURES
    else:
        frontal, sagittal, total = compute_cop(*loads.T)
        values = np.hstack([accel, speed, np.column_stack([frontal, sagittal, total])])
        names = COP_FEATURES
    return FeatureSequence(raw.participant_id, names, values, labels=raw.labels)


@dataclass(frozen=True, eq=False)
class Discretizer:
    """Equal-frequency bins per feature; ``edges[k]`` holds the D-1 interior edges.

    A value x falls in bin 1 + #{edges < x}, so a value equal to an edge goes
    to the lower bin.
    """

    D: int
    edges: tuple[np.ndarray, ...]
    feature_names: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if self.D < 2:
            raise DataError("need at least two bins")
        edges = tuple(np.array(e, dtype=float) for e in self.edges)
        for e in edges:
            if e.shape != (self.D - 1,):
                raise DataError(f"each feature needs {self.D - 1} interior edges")
            if np.any(np.diff(e) < 0):
                raise DataError("bin edges must be non-decreasing")
            e.setflags(write=False)
        object.__setattr__(self, "edges", edges)

    @property
    def n(self) -> int:
        return len(self.edges)

    def transform(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[1] != self.n:
            raise DataError(f"expected {self.n} features, got {values.shape[1]}")
        out = np.empty(values.shape, dtype=np.int64)
        for k, e in enumerate(self.edges):
            out[:, k] = np.searchsorted(e, values[:, k], side="left") + 1
        return out

    def __eq__(self, other):
        if not isinstance(other, Discretizer):
            return NotImplemented
        return (self.D == other.D and self.feature_names == other.feature_names
                and len(self.edges) == len(other.edges)
                and all(np.array_equal(a, b) for a, b in zip(self.edges, other.edges)))


def fit_discretizer(training: Sequence[FeatureSequence], D: int = DEFAULT_BINS) -> Discretizer:
    """Per-feature (j/D)-quantiles of the pooled training values, j = 1..D-1."""
    if D < 2:
        raise DataError("need at least two bins")
    if not training:
        raise DataError("no training sequences")
    names = training[0].feature_names
    if any(s.feature_names != names for s in training):
        raise DataError("training sequences disagree on feature layout")
    pooled = np.vstack([s.values for s in training])
    if pooled.shape[0] == 0:
        raise DataError("no training values")
    N = pooled.shape[0]
    # inverted-CDF quantile j/D is the ceil(j N / D)-th smallest value; integer maths avoids
    # float rounding such as 0.55 * 100 > 55
    idx = (np.arange(1, D) * N + D - 1) // D - 1
    edges = []
    for k in range(pooled.shape[1]):
        e = np.sort(pooled[:, k])[idx]
        if np.any(np.diff(e) == 0):
            warnings.warn(f"feature {names[k]!r}: duplicate bin edges, bins merged",
                          RuntimeWarning, stacklevel=2)
        edges.append(e)
    return Discretizer(D, tuple(edges), tuple(names))


def apply_discretizer(disc: Discretizer, seq: FeatureSequence) -> FeatureSequence:
    if disc.feature_names is not None and tuple(disc.feature_names) != seq.feature_names:
        raise DataError(f"discretizer fitted on {disc.feature_names}, got {seq.feature_names}")
    return FeatureSequence(seq.participant_id, seq.feature_names, seq.values,
                           disc.transform(seq.values), seq.labels, disc.D)
