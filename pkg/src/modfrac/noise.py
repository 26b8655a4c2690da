"""Measurement-noise models and their contribution to the modulated integrals.

Noise enters the identification only through
``e = ts * sum_j w_j D^alpha g(t_j) noise(t_{m-j})``. For a sinusoid this is
bounded by ``(c/omega) * (T sup|D^{alpha+1} g| + |D^alpha g(T)|)``; for
independent zero-mean noise its standard deviation shrinks like ``sqrt(ts)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as sp_integrate

from .basis import ModulatingFunction, endpoint_frac_value, sup_frac_deriv
from .quadrature import QuadratureRule, modulated_integral
from .signals import SampledSignal

#: Bit generator behind every Gaussian path; reported in run metadata.
RNG_ALGORITHM = "numpy.random.Generator(PCG64)"


@dataclass(frozen=True)
class SinusoidalNoise:
    amplitude: float
    omega: float
    phase: float = 0.0

    def __post_init__(self):
        if self.amplitude <= 0 or self.omega <= 0:
            raise ValueError("amplitude and angular frequency must be positive")
        if not 0 <= self.phase < 2 * math.pi:
            raise ValueError("phase must lie in [0, 2*pi)")

    def __call__(self, t):
        return self.amplitude * np.sin(self.omega * np.asarray(t, dtype=float) + self.phase)


@dataclass(frozen=True)
class GaussianNoise:
    """I.i.d. normal samples; the same seed always gives the same path."""

    sigma: float
    seed: int
    mean: float = 0.0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError("sigma must be >= 0")

    def path(self, size: int) -> np.ndarray:
        if self.sigma == 0:
            return np.full(size, float(self.mean))
        return self.mean + self.sigma * unit_gaussian_path(self.seed, size)


def unit_gaussian_path(seed: int, size: int) -> np.ndarray:
    return np.random.Generator(np.random.PCG64(seed)).standard_normal(size)


def sample_noise(model, ts: float, m: int) -> SampledSignal:
    """Noise on ``t_j = j ts``, ``j = 0..m``; add it to the clean output."""
    if isinstance(model, GaussianNoise):
        return SampledSignal(ts, model.path(m + 1))
    t = np.arange(m + 1) * ts
    return SampledSignal(ts, model(t))


def sigma_from_snr(y, snr_db: float, reference_noise) -> float:
    """Scale for ``reference_noise`` giving ``10 log10(sum y^2 / sum (sigma n)^2) = snr_db``."""
    y = getattr(y, "values", y)
    ref = getattr(reference_noise, "values", reference_noise)
    signal_energy = float(np.sum(np.square(y)))
    noise_energy = float(np.sum(np.square(ref)))
    if signal_energy == 0:
        raise ValueError("signal has zero energy")
    if noise_energy == 0:
        raise ValueError("reference noise path has zero energy")
    if snr_db == math.inf:
        return 0.0
    return math.sqrt(signal_energy / (noise_energy * 10 ** (snr_db / 10)))


def sinusoid_error_bound(fn: ModulatingFunction, alpha: float, c: float, omega: float) -> float:
    """Upper bound on ``|int_0^T D^alpha g(t) c sin(omega (T-t) + phi) dt|`` over all phases."""
    sup_next = sup_frac_deriv(fn, alpha + 1)
    edge = abs(endpoint_frac_value(fn, alpha))
    return (c / omega) * (fn.T * sup_next + edge)


def sinusoid_error_components(fn: ModulatingFunction, alpha: float, omega: float) -> tuple[float, float]:
    """``(S, C)`` with ``int_0^T k(T-tau) sin|cos(omega tau) dtau`` and ``k = D^alpha g``.

    The continuous noise contribution for amplitude ``c`` and phase ``phi``
    is then ``c (cos(phi) S + sin(phi) C)``. Uses QUADPACK's QAWO routine for
    oscillatory weights.
    """
    def kernel(tau):
        return float(fn.deriv_values(alpha, fn.T - tau))

    # absolute floor: contributions for alpha = 0 sit at the roundoff level
    scale = fn.T * float(np.max(np.abs(fn.deriv_values(alpha, np.linspace(0.0, fn.T, 201)))))
    opts = dict(wvar=omega, limit=500, epsabs=1e-14 * scale, epsrel=1e-10)
    s, _ = sp_integrate.quad(kernel, 0.0, fn.T, weight="sin", **opts)
    c, _ = sp_integrate.quad(kernel, 0.0, fn.T, weight="cos", **opts)
    return s, c


def sinusoid_error(fn: ModulatingFunction, alpha: float, noise: SinusoidalNoise) -> float:
    """Continuous-time noise contribution of a sinusoid to ``Y(n, i)``."""
    s, c = sinusoid_error_components(fn, alpha, noise.omega)
    return noise.amplitude * (math.cos(noise.phase) * s + math.sin(noise.phase) * c)


def noise_error_contribution(kernel: SampledSignal, noise: SampledSignal,
                             rule: QuadratureRule | None = None) -> float:
    """Discrete noise term ``ts sum_j w_j kernel(t_j) noise(t_{m-j})``."""
    return modulated_integral(kernel, noise, rule)
