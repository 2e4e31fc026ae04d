"""Scripted walker-course simulator.

Each behaviour has a mean user load per cell, accelerometer offsets and an
encoder rate (see ``data/emissions.json``). Channels are the baseline plus
those offsets plus Gaussian noise, clamped to the 16-bit range. The table
is a test fixture shaped by qualitative expectations (no load and no motion
when the walker is untouched, heavy load when sitting on it, load shifted
toward the side of a turn, sustained forward/backward acceleration on
ramps, vertical jolts on curbs); it does not model walker physics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from ..core.types import ALL_BEHAVIOURS, RAW_CHANNELS, RAW_MAX, RawSequence
from ..errors import DataError

CANONICAL_NOISE = 1.0


def _data_file(name: str) -> dict:
    return json.loads(resources.files("rollator.simgen").joinpath("data", name).read_text())


def load_emission_table(path=None) -> dict:
    table = json.loads(Path(path).read_text()) if path is not None else _data_file("emissions.json")
    if table.get("format_version") != 1:
        raise DataError("unsupported emission table version")
    return table


@dataclass(frozen=True)
class CourseScript:
    segments: tuple  # ((behaviour, duration_ticks), ...)
    noise_level: float = CANONICAL_NOISE
    rng_seed: int = 0
    participant_id: str = "p01"
    load_scale: float = 1.0  # participant body-weight factor on user load
    speed_scale: float = 1.0

    def __post_init__(self):
        segs = tuple((str(b), int(d)) for b, d in self.segments)
        if not segs:
            raise DataError("a course script needs at least one segment")
        for b, d in segs:
            if b not in ALL_BEHAVIOURS:
                raise DataError(f"unknown behaviour {b!r} in script")
            if d < 1:
                raise DataError(f"segment {b} has non-positive duration {d}")
        if self.noise_level < 0:
            raise DataError("noise_level must be non-negative")
        object.__setattr__(self, "segments", segs)

    @property
    def T(self) -> int:
        return sum(d for _, d in self.segments)

    def to_json(self) -> dict:
        return {"participant_id": self.participant_id, "rng_seed": self.rng_seed,
                "noise_level": self.noise_level, "load_scale": self.load_scale,
                "speed_scale": self.speed_scale,
                "segments": [[b, d] for b, d in self.segments]}

    @classmethod
    def from_json(cls, obj: dict) -> "CourseScript":
        try:
            return cls(tuple(tuple(s) for s in obj["segments"]),
                       float(obj.get("noise_level", CANONICAL_NOISE)),
                       int(obj.get("rng_seed", 0)), str(obj.get("participant_id", "p01")),
                       float(obj.get("load_scale", 1.0)), float(obj.get("speed_scale", 1.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed course script: {exc}") from None


def default_course(kind: str = "exp2", participant: int = 1, seed: int = 0,
                   noise_level: float = CANONICAL_NOISE, jitter: float = 0.2) -> CourseScript:
    """One participant's run of a built-in course with per-participant variation.

    Segment durations are jittered by up to +/- ``jitter``; body weight and
    walking speed are scaled by factors in [0.85, 1.15] and [0.9, 1.1].
    """
    base = _data_file({"exp1": "course_exp1.json", "exp2": "course_exp2.json"}[kind])
    rng = np.random.default_rng([seed, participant])
    segs = tuple((b, max(1, int(round(d * rng.uniform(1 - jitter, 1 + jitter)))))
                 for b, d in base["segments"])
    return CourseScript(segs, noise_level, int(rng.integers(2**31)), f"p{participant:02d}",
                        float(rng.uniform(0.85, 1.15)), float(rng.uniform(0.9, 1.1)))


def simulate_course(script: CourseScript, table: Optional[dict] = None) -> RawSequence:
    """Render a script as a labeled 8-channel raw sequence at 50 Hz."""
    table = table or load_emission_table()
    beh = table["behaviours"]
    base = table["baseline"]
    noise = table["noise"]
    rng = np.random.default_rng(script.rng_seed)
    T = script.T
    accel = np.zeros((T, 3))
    loads = np.zeros((T, 4))
    rate = np.zeros(T)
    accel_sd = np.zeros(T)
    load_sd = np.zeros(T)
    rate_sd = np.zeros(T)
    labels = []
    pos = 0
    for b, d in script.segments:
        params = beh.get(b)
        if params is None:
            raise DataError(f"emission table has no entry for {b}")
        sl = slice(pos, pos + d)
        start = np.asarray(params["load"], dtype=float)
        end = np.asarray(params.get("load_end", params["load"]), dtype=float)
        frac = np.linspace(0.0, 1.0, d)[:, None] if d > 1 else np.zeros((1, 1))
        loads[sl] = (start + (end - start) * frac) * script.load_scale
        accel[sl] = params["accel"]
        rate[sl] = params["rate"] * script.speed_scale
        accel_sd[sl] = noise["accel"] * params["accel_noise"]
        load_sd[sl] = noise["load"] * params["load_noise"]
        rate_sd[sl] = noise["rate"] * params["rate_noise"]
        labels.extend([b] * d)
        pos += d

    lvl = script.noise_level
    accel = accel + np.asarray(base["accel"], dtype=float)
    accel += rng.standard_normal((T, 3)) * (accel_sd * lvl)[:, None]
    loads = loads + base["load"] + rng.standard_normal((T, 4)) * (load_sd * lvl)[:, None]
    steps = rate + rng.standard_normal(T) * rate_sd * lvl
    steps[0] = 0.0
    encoder = base["encoder_start"] + np.cumsum(steps)

    raw = np.column_stack([accel, loads, encoder])
    raw = np.clip(np.rint(raw), 0, RAW_MAX).astype(np.int64)
    return RawSequence(script.participant_id, np.arange(T), raw, tuple(labels), RAW_CHANNELS)


def simulate_participants(n: int, kind: str = "exp2", runs: int = 1, seed: int = 0,
                          noise_level: float = CANONICAL_NOISE) -> list[RawSequence]:
    """``runs`` course executions for each of ``n`` participants, ordered by participant."""
    out = []
    for p in range(1, n + 1):
        for r in range(runs):
            script = default_course(kind, p, seed=seed * 1000 + r, noise_level=noise_level)
            # runs of one participant share body weight and speed, differ in timing and noise
            if r > 0:
                first = default_course(kind, p, seed=seed * 1000, noise_level=noise_level)
                script = CourseScript(script.segments, noise_level, script.rng_seed,
                                      first.participant_id, first.load_scale, first.speed_scale)
            out.append(simulate_course(script))
    return out
