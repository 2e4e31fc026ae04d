"""Domain types: behaviours, label sets, raw and feature sequences."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from ..errors import DataError

RAW_MAX = 2**16 - 1
SAMPLE_RATE_HZ = 50

RAW_CHANNELS = (
    "accel_x",
    "accel_y",
    "accel_z",
    "load_fl",
    "load_fr",
    "load_rl",
    "load_rr",
    "encoder",
)
LOAD_CHANNELS = RAW_CHANNELS[3:7]


class Behaviour(str, enum.Enum):
    """The 13 walker behaviours."""

    NTW = "NTW"  # not touching the walker
    ST = "ST"  # stop / standing
    WF = "WF"  # walking forward
    TL = "TL"  # turn left
    TR = "TR"  # turn right
    WB = "WB"  # walking backwards
    TRS = "TRS"  # transfer (sit-to-stand / stand-to-sit)
    GUR = "GUR"  # going up ramp
    GDR = "GDR"  # going down ramp
    SW = "SW"  # sitting on walker
    RT = "RT"  # reaching task
    GUC = "GUC"  # going up curb
    GDC = "GDC"  # going down curb

    def __str__(self) -> str:
        return self.value


EXPERIMENT1_BEHAVIOURS = ("NTW", "ST", "WF", "TL", "TR", "WB", "TRS")
EXPERIMENT2_EXTRA = ("GUR", "GDR", "SW", "RT", "GUC", "GDC")
ALL_BEHAVIOURS = tuple(b.value for b in Behaviour)


@dataclass(frozen=True)
class LabelSet:
    """Ordered, duplicate-free subset of the behaviour universe.

    The order matters: it fixes state indices in every model and is the
    tie-breaking order wherever a rule says "first in label-set order".
    """

    members: tuple[str, ...]

    def __init__(self, members: Iterable[Union[str, Behaviour]]):
        codes = tuple(_checked_codes(members))
        if len(set(codes)) != len(codes):
            raise DataError(f"duplicate behaviours in label set: {codes}")
        if len(codes) < 2:
            raise DataError("a label set needs at least two behaviours")
        object.__setattr__(self, "members", codes)
        object.__setattr__(self, "_index", {c: i for i, c in enumerate(codes)})

    @property
    def m(self) -> int:
        return len(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, code) -> bool:
        return str(code) in self._index

    def index(self, code) -> int:
        try:
            return self._index[str(code)]
        except KeyError:
            raise DataError(f"label {code!r} is not in the label set {self.members}") from None

    def encode(self, labels: Sequence) -> np.ndarray:
        return np.fromiter((self.index(b) for b in labels), dtype=np.int64, count=len(labels))

    def decode(self, indices: Iterable[int]) -> tuple[str, ...]:
        return tuple(self.members[int(i)] for i in indices)

    @classmethod
    def experiment1(cls) -> "LabelSet":
        return cls(EXPERIMENT1_BEHAVIOURS)

    @classmethod
    def experiment2(cls, include_transfers: bool = True) -> "LabelSet":
        base = EXPERIMENT1_BEHAVIOURS if include_transfers else EXPERIMENT1_BEHAVIOURS[:-1]
        return cls(base + EXPERIMENT2_EXTRA)


def _checked_codes(members):
    for m in members:
        code = m.value if isinstance(m, Behaviour) else str(m)
        if code not in ALL_BEHAVIOURS:
            raise DataError(f"unknown behaviour {code!r}")
        yield code


@dataclass(frozen=True)
class SensorFrame:
    tick: int
    channels: tuple[int, ...]

    def __post_init__(self):
        if any(v < 0 or v > RAW_MAX for v in self.channels):
            raise DataError(f"tick {self.tick}: channel value outside [0, {RAW_MAX}]")


@dataclass(frozen=True, eq=False)
class RawSequence:
    """Raw 50 Hz readings, stored column-wise as a T x n integer array."""

    participant_id: str
    ticks: np.ndarray
    channels: np.ndarray
    labels: Optional[tuple[str, ...]] = None
    channel_names: tuple[str, ...] = RAW_CHANNELS

    def __post_init__(self):
        ticks = np.array(self.ticks, dtype=np.int64)
        channels = np.asarray(self.channels)
        if channels.ndim != 2 or channels.shape[0] != ticks.shape[0]:
            raise DataError("channels must be a T x n array aligned with ticks")
        if channels.shape[1] != len(self.channel_names):
            raise DataError(
                f"expected {len(self.channel_names)} channels, got {channels.shape[1]}")
        if ticks.shape[0] < 1:
            raise DataError("a sequence needs at least one frame")
        if np.any(np.diff(ticks) != 1):
            raise DataError("ticks must increase by exactly 1")
        if channels.size and (channels.min() < 0 or channels.max() > RAW_MAX):
            raise DataError(f"channel value outside [0, {RAW_MAX}]")
        channels = channels.astype(np.int64, copy=True)
        ticks.setflags(write=False)
        channels.setflags(write=False)
        object.__setattr__(self, "ticks", ticks)
        object.__setattr__(self, "channels", channels)
        if self.labels is not None:
            labels = tuple(str(b) for b in self.labels)
            if len(labels) != ticks.shape[0]:
                raise DataError(
                    f"{len(labels)} labels for {ticks.shape[0]} frames")
            object.__setattr__(self, "labels", labels)

    @property
    def T(self) -> int:
        return int(self.ticks.shape[0])

    def __len__(self) -> int:
        return self.T

    @property
    def frames(self) -> list[SensorFrame]:
        return [SensorFrame(int(t), tuple(int(v) for v in row))
                for t, row in zip(self.ticks, self.channels)]

    def channel(self, name: str) -> np.ndarray:
        return self.channels[:, self.channel_names.index(name)]


@dataclass(frozen=True, eq=False)
class FeatureSequence:
    """Per-tick derived features, optionally discretized (bins 1..D) and labeled."""

    participant_id: str
    feature_names: tuple[str, ...]
    values: np.ndarray
    discretized: Optional[np.ndarray] = None
    labels: Optional[tuple[str, ...]] = None
    D: Optional[int] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != len(self.feature_names):
            raise DataError("values must be T x n with one column per feature name")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if self.discretized is not None:
            disc = np.array(self.discretized, dtype=np.int64)
            if disc.shape != values.shape:
                raise DataError("discretized matrix must match values shape")
            upper = self.D if self.D is not None else disc.max(initial=1)
            if disc.size and (disc.min() < 1 or disc.max() > upper):
                raise DataError(f"bin indices must lie in [1, {upper}]")
            disc.setflags(write=False)
            object.__setattr__(self, "discretized", disc)
        if self.labels is not None:
            labels = tuple(str(b) for b in self.labels)
            if len(labels) != values.shape[0]:
                raise DataError(f"{len(labels)} labels for {values.shape[0]} ticks")
            object.__setattr__(self, "labels", labels)

    @property
    def T(self) -> int:
        return int(self.values.shape[0])

    def __len__(self) -> int:
        return self.T

    @property
    def n(self) -> int:
        return len(self.feature_names)

    @classmethod
    def from_bins(cls, bins, labels=None, D=None, participant_id="synthetic"):
        """Wrap an integer observation matrix (bins 1..D) as a sequence."""
        bins = np.asarray(bins, dtype=np.int64)
        if bins.ndim == 1:
            bins = bins[:, None]
        names = tuple(f"s{k}" for k in range(bins.shape[1]))
        return cls(participant_id, names, bins.astype(float), bins, labels, D)


@dataclass(frozen=True)
class Dataset:
    """Sequences sharing one channel/feature layout and one label set."""

    label_set: LabelSet
    sequences: tuple = field(default_factory=tuple)

    def __post_init__(self):
        seqs = tuple(self.sequences)
        object.__setattr__(self, "sequences", seqs)
        layouts = {_layout(s) for s in seqs}
        if len(layouts) > 1:
            raise DataError(f"sequences do not share a layout: {sorted(layouts)}")
        for s in seqs:
            if s.labels is not None:
                for b in set(s.labels):
                    if b not in self.label_set:
                        raise DataError(
                            f"participant {s.participant_id}: label {b!r} not in label set")

    def __len__(self) -> int:
        return len(self.sequences)

    def __iter__(self):
        return iter(self.sequences)

    @property
    def participants(self) -> list[str]:
        seen: dict[str, None] = {}
        for s in self.sequences:
            seen.setdefault(s.participant_id, None)
        return list(seen)


def _layout(seq) -> tuple[str, ...]:
    if isinstance(seq, RawSequence):
        return seq.channel_names
    return seq.feature_names
