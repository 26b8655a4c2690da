"""Uniformly sampled signals on the grid ``t_j = j * ts``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

#: Magnitudes above this are treated like non-finite values at grid endpoints.
HUGE = 1e300


class GridMismatchError(ValueError):
    """Two signals that must share a grid do not."""


def nonfinite(values: np.ndarray) -> np.ndarray:
    """Boolean mask of entries that are non-finite or overflow-sized."""
    values = np.asarray(values, dtype=float)
    with np.errstate(invalid="ignore"):
        return ~np.isfinite(values) | (np.abs(values) > HUGE)


@dataclass(frozen=True, eq=False)
class SampledSignal:
    """Real signal sampled at ``t_j = j * ts`` for ``j = 0..m``.

    Only the two endpoint samples may be non-finite; they mark singular
    behaviour (for example ``t**-1.5`` at ``t = 0``) that quadrature drops.
    """

    ts: float
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if not (np.isfinite(self.ts) and self.ts > 0):
            raise ValueError(f"sampling period must be positive, got {self.ts!r}")
        if values.ndim != 1 or values.size < 3:
            raise ValueError("a sampled signal needs at least 3 samples (m >= 2)")
        if nonfinite(values[1:-1]).any():
            raise ValueError("non-finite samples are only allowed at the endpoints")

    @classmethod
    def from_function(cls, f: Callable, ts: float, m: int, *, singular_start: bool = False):
        """Sample ``f`` on ``j * ts``, ``j = 0..m``.

        With ``singular_start`` the sample at ``t = 0`` is stored as ``inf``
        instead of calling ``f(0)``.
        """
        t = np.arange(m + 1) * ts
        if singular_start:
            values = np.empty(m + 1)
            values[0] = np.inf
            values[1:] = f(t[1:])
        else:
            values = f(t)
        return cls(ts, np.broadcast_to(np.asarray(values, dtype=float), t.shape))

    @property
    def m(self) -> int:
        return self.values.size - 1

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.m + 1) * self.ts

    @property
    def horizon(self) -> float:
        return self.m * self.ts

    def prefix(self, i: int) -> "SampledSignal":
        """Samples ``0..i``; the data an on-line estimator has at ``t_i``."""
        if not 2 <= i <= self.m:
            raise IndexError(f"prefix index {i} outside 2..{self.m}")
        return SampledSignal(self.ts, self.values[: i + 1])

    def __add__(self, other: "SampledSignal") -> "SampledSignal":
        check_same_grid(self, other)
        return SampledSignal(self.ts, self.values + other.values)

    def __len__(self) -> int:
        return self.values.size


def check_same_grid(a: SampledSignal, b: SampledSignal) -> None:
    if a.m != b.m or not np.isclose(a.ts, b.ts, rtol=1e-12, atol=0.0):
        raise GridMismatchError(
            f"grids differ: (ts={a.ts}, m={a.m}) vs (ts={b.ts}, m={b.m})"
        )
