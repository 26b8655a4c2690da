"""Quadrature on the uniform sampling grid.

Samples that are infinite (or larger than :data:`~modfrac.signals.HUGE`) at
``t_0`` or ``t_m`` get weight zero instead of poisoning the sum; the same
situation in the interior is an error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signals import SampledSignal, check_same_grid, nonfinite


class NonFiniteSampleError(ValueError):
    """A non-finite integrand value away from the grid endpoints."""


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Weights ``w_0..w_m``; the integral is ``ts * sum(w_j f_j)``."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 3 or np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be a finite, non-negative vector of length >= 3")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return self.weights.size - 1


def trapezoid_rule(m: int) -> QuadratureRule:
    if m < 2:
        raise ValueError("trapezoid rule needs m >= 2")
    w = np.ones(m + 1)
    w[0] = w[-1] = 0.5
    return QuadratureRule(w)


def _weighted_sum(weights: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise ``sum(w * v)`` with endpoint zeroing; also returns dropped-sample counts."""
    values = np.atleast_2d(values)
    bad = nonfinite(values)
    if bad[:, 1:-1].any():
        raise NonFiniteSampleError("non-finite integrand value at an interior grid point")
    clean = np.where(bad, 0.0, values)
    return clean @ weights, bad.sum(axis=1)


def integrate(rule: QuadratureRule, samples: SampledSignal) -> float:
    if rule.m != samples.m:
        raise ValueError(f"rule has m={rule.m}, samples have m={samples.m}")
    total, _ = _weighted_sum(rule.weights, samples.values)
    return float(samples.ts * total[0])


def modulated_integrals(kernels: np.ndarray, signal: SampledSignal,
                        rule: QuadratureRule | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``ts * sum_j w_j k(t_j) s(t_{m-j})`` for every row ``k`` of ``kernels``.

    Returns the integrals and, per row, how many endpoint samples were
    dropped because the product there was non-finite.
    """
    kernels = np.atleast_2d(np.asarray(kernels, dtype=float))
    if kernels.shape[1] != signal.m + 1:
        raise ValueError("kernel rows and signal must have the same number of samples")
    rule = rule or trapezoid_rule(signal.m)
    if rule.m != signal.m:
        raise ValueError(f"rule has m={rule.m}, signal has m={signal.m}")
    with np.errstate(invalid="ignore", over="ignore"):
        products = kernels * signal.values[::-1]
    # a finite kernel zero times an infinite endpoint sample is nan; nonfinite() catches it
    totals, dropped = _weighted_sum(rule.weights, products)
    return signal.ts * totals, dropped


def modulated_integral(kernel: SampledSignal, signal: SampledSignal,
                       rule: QuadratureRule | None = None) -> float:
    """Discrete lag-``T`` convolution ``int_0^T k(t) s(T - t) dt``."""
    check_same_grid(kernel, signal)
    totals, _ = modulated_integrals(kernel.values, signal, rule)
    return float(totals[0])
