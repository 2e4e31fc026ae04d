"""Map latent states of an unsupervised model onto behaviours."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..core.types import LabelSet
from ..errors import DataError


def match_states(latent: Sequence[Sequence[int]], reference: Sequence[Sequence[str]],
                 label_set: LabelSet, num_states: Optional[int] = None) -> dict[int, str]:
    """Assign each latent state the behaviour it co-occurs with most often.

    Ties go to the behaviour listed first in ``label_set``. Several latent
    states may share a behaviour. A latent state that never occurs maps to the
    most frequent behaviour overall.
    """
    if len(latent) != len(reference):
        raise DataError("latent and reference sequence counts differ")
    z_all, b_all = [], []
    for z, ref in zip(latent, reference):
        if len(z) != len(ref):
            raise DataError("latent and reference sequences must be aligned tick for tick")
        z_all.append(np.asarray(z, dtype=np.int64))
        b_all.append(label_set.encode(ref))
    z = np.concatenate(z_all) if z_all else np.zeros(0, dtype=np.int64)
    b = np.concatenate(b_all) if b_all else np.zeros(0, dtype=np.int64)
    if z.size == 0:
        raise DataError("no ticks to match on")
    if z.min() < 0:
        raise DataError("latent states must be non-negative integers")
    L = num_states if num_states is not None else int(z.max()) + 1
    co = np.zeros((L, label_set.m), dtype=np.int64)
    np.add.at(co, (z, b), 1)
    fallback = int(np.argmax(np.bincount(b, minlength=label_set.m)))
    return {s: label_set.members[int(np.argmax(co[s])) if co[s].any() else fallback]
            for s in range(L)}


def relabel(latent: Sequence[int], mapping: dict[int, str]) -> tuple[str, ...]:
    return tuple(mapping[int(s)] for s in latent)
