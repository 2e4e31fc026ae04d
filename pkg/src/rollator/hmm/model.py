from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DataError
from ..features import Discretizer

ROW_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class HmmModel:
    """Discrete-emission HMM.

    Attributes:
        pi: (m,) initial distribution.
        theta: (m, m) transitions, ``theta[b, b2] = Pr(B_t = b2 | B_{t-1} = b)``.
        phi: (m, n, D) emissions, ``phi[b, k, s-1] = Pr(S_t^k = s | B_t = b)``
            for bins s = 1..D.
        state_names: behaviour codes, or integers for latent states.
        discretizer: the binning the emissions were fitted on, if any.
    """

    pi: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    state_names: tuple = ()
    feature_names: Optional[tuple[str, ...]] = None
    discretizer: Optional[Discretizer] = None

    def __post_init__(self):
        pi = np.array(self.pi, dtype=float)
        theta = np.array(self.theta, dtype=float)
        phi = np.array(self.phi, dtype=float)
        m = pi.shape[0]
        if pi.ndim != 1 or theta.shape != (m, m) or phi.ndim != 3 or phi.shape[0] != m:
            raise DataError(
                f"inconsistent HMM shapes: pi {pi.shape}, theta {theta.shape}, phi {phi.shape}")
        for name, arr in (("pi", pi), ("theta", theta), ("phi", phi)):
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise DataError(f"{name} must be finite and non-negative")
        if abs(pi.sum() - 1.0) > ROW_TOL:
            raise DataError(f"pi sums to {float(pi.sum())!r}, not 1")
        bad = np.flatnonzero(np.abs(theta.sum(axis=1) - 1.0) > ROW_TOL)
        if bad.size:
            row = int(bad[0])
            raise DataError(f"theta row {row} sums to {float(theta[row].sum())!r}, not 1")
        sums = phi.sum(axis=2)
        if np.any(np.abs(sums - 1.0) > ROW_TOL):
            b, k = np.argwhere(np.abs(sums - 1.0) > ROW_TOL)[0]
            raise DataError(f"phi[{b}][{k}] sums to {float(sums[b, k])!r}, not 1")
        names = tuple(self.state_names) if len(self.state_names) else tuple(range(m))
        if len(names) != m:
            raise DataError(f"{len(names)} state names for {m} states")
        if self.discretizer is not None and (self.discretizer.D != phi.shape[2]
                                             or self.discretizer.n != phi.shape[1]):
            raise DataError("discretizer does not match emission table dimensions")
        for arr in (pi, theta, phi):
            arr.setflags(write=False)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "state_names", names)
        if self.feature_names is not None:
            object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def m(self) -> int:
        return self.pi.shape[0]

    @property
    def n(self) -> int:
        return self.phi.shape[1]

    @property
    def D(self) -> int:
        return self.phi.shape[2]

    def __eq__(self, other):
        if not isinstance(other, HmmModel):
            return NotImplemented
        return (np.array_equal(self.pi, other.pi) and np.array_equal(self.theta, other.theta)
                and np.array_equal(self.phi, other.phi)
                and self.state_names == other.state_names
                and self.feature_names == other.feature_names
                and self.discretizer == other.discretizer)

    __hash__ = None

    def with_names(self, state_names) -> "HmmModel":
        return HmmModel(self.pi, self.theta, self.phi, tuple(state_names),
                        self.feature_names, self.discretizer)

    def with_discretizer(self, discretizer: Optional[Discretizer]) -> "HmmModel":
        names = discretizer.feature_names if discretizer is not None else self.feature_names
        return HmmModel(self.pi, self.theta, self.phi, self.state_names, names, discretizer)
