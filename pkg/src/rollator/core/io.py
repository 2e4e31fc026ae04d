"""CSV ingestion/emission and atomic file writes."""

from __future__ import annotations

import contextlib
import csv
import os
import tempfile
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from ..errors import DataError
from .types import ALL_BEHAVIOURS, RAW_CHANNELS, RAW_MAX, FeatureSequence, LabelSet, RawSequence


@contextlib.contextmanager
def atomic_write(path, mode: str = "w", newline: Optional[str] = ""):
    """Write to a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, newline=newline) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def load_csv(path, schema: Sequence[str] = RAW_CHANNELS, label_set: Optional[LabelSet] = None,
             participant_id: Optional[str] = None) -> RawSequence:
    """Read a raw sensor CSV with header ``t,<schema...>[,label]``.

    Raises DataError naming the offending line for any malformed row,
    out-of-range reading or unknown label.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    expected = ["t", *schema]
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        has_label = header == expected + ["label"]
        if header != expected and not has_label:
            raise DataError(f"{path}: header {header} does not match {expected}[+label]")
        width = len(header)
        ticks, rows, labels = [], [], []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise DataError(f"{path}:{line}: expected {width} fields, got {len(row)}")
            try:
                ints = [int(c) for c in row[: len(expected)]]
            except ValueError:
                raise DataError(f"{path}:{line}: non-integer value in {row}") from None
            vals = ints[1:]
            if any(v < 0 or v > RAW_MAX for v in vals):
                raise DataError(f"{path}:{line}: value outside [0, {RAW_MAX}]")
            if has_label:
                lab = row[-1].strip()
                if lab not in (label_set if label_set is not None else ALL_BEHAVIOURS):
                    raise DataError(f"{path}:{line}: unknown label {lab!r}")
                labels.append(lab)
            ticks.append(ints[0])
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    ticks_arr = np.asarray(ticks, dtype=np.int64)
    if np.any(np.diff(ticks_arr) != 1):
        bad = int(np.flatnonzero(np.diff(ticks_arr) != 1)[0]) + 3
        raise DataError(f"{path}:{bad}: ticks must increase by exactly 1")
    pid = participant_id if participant_id is not None else path.stem
    try:
        return RawSequence(pid, ticks_arr, np.asarray(rows, dtype=np.int64),
                           tuple(labels) if has_label else None, tuple(schema))
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def write_raw_csv(seq: RawSequence, path) -> None:
    header = ["t", *seq.channel_names] + (["label"] if seq.labels is not None else [])
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(seq.T):
            row = [int(seq.ticks[i]), *(int(v) for v in seq.channels[i])]
            if seq.labels is not None:
                row.append(seq.labels[i])
            w.writerow(row)


def write_feature_csv(seq: FeatureSequence, path) -> None:
    header = ["t", *seq.feature_names] + (["label"] if seq.labels is not None else [])
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(seq.T):
            row = [i, *(repr(float(v)) for v in seq.values[i])]
            if seq.labels is not None:
                row.append(seq.labels[i])
            w.writerow(row)


def read_feature_csv(path, participant_id: Optional[str] = None) -> FeatureSequence:
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if not header or header[0] != "t":
            raise DataError(f"{path}: first column must be 't'")
        has_label = header[-1] == "label"
        names = header[1:-1] if has_label else header[1:]
        values, labels = [], []
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{reader.line_num}: expected {len(header)} fields")
            try:
                values.append([float(c) for c in row[1:1 + len(names)]])
            except ValueError:
                raise DataError(f"{path}:{reader.line_num}: non-numeric feature value") from None
            if has_label:
                labels.append(row[-1].strip())
    if not values:
        raise DataError(f"{path}: no data rows")
    pid = participant_id if participant_id is not None else path.stem
    return FeatureSequence(pid, tuple(names), np.asarray(values),
                           labels=tuple(labels) if has_label else None)


def read_labels_csv(path) -> tuple[str, ...]:
    """Read the ``label`` column of any CSV with a header (predictions, raw or features)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "label" not in reader.fieldnames:
            raise DataError(f"{path}: no 'label' column")
        return tuple(row["label"].strip() for row in reader)


def write_labels_csv(labels: Iterable[str], path) -> None:
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "label"])
        for i, b in enumerate(labels):
            w.writerow([i, b])


def write_table_csv(header: Sequence[str], rows: Iterable[Sequence], path) -> None:
    """Plain table dump; floats are written with full round-trip precision."""
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                        for v in row])

