r"""Riemann-Liouville derivatives of power functions and sines.

The Riemann-Liouville derivative of order :math:`\alpha` with lower terminal
0 is

.. math::

    D^\alpha f(t) = \frac{1}{\Gamma(l - \alpha)} \frac{d^l}{dt^l}
        \int_0^t (t - \tau)^{l - \alpha - 1} f(\tau)\, d\tau,
    \qquad l - 1 \le \alpha < l.

Power functions map to power functions, so finite sums of real powers
(:class:`GeneralizedPolynomial`) are closed under differentiation. The
Grunwald-Letnikov sum :func:`gl_deriv` is a slow, first-order brute-force
check of everything here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import mpmath
import numpy as np

from .signals import SampledSignal


class PoleError(ValueError):
    """Gamma function evaluated at a non-positive integer."""


class ConvergenceError(ArithmeticError):
    """A series did not reach its stopping criterion."""


def _is_pole(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def check_order(alpha: float) -> float:
    alpha = float(alpha)
    if not (math.isfinite(alpha) and alpha >= 0):
        raise ValueError(f"fractional order must be finite and >= 0, got {alpha!r}")
    return alpha


def integer_order(alpha: float) -> int:
    """The integer ``l`` with ``l - 1 <= alpha < l``."""
    return math.floor(check_order(alpha)) + 1


def gamma(x: float) -> float:
    if _is_pole(x):
        raise PoleError(f"Gamma has a pole at {x!r}")
    return math.gamma(x)


def reciprocal_gamma(x: float) -> float:
    """``1/Gamma(x)``, exactly 0 at the poles ``0, -1, -2, ...``."""
    if _is_pole(x):
        return 0.0
    try:
        g = math.gamma(x)
    except OverflowError:
        return 0.0
    if g == 0.0:
        # |Gamma| underflowed for very negative x; 1/Gamma overflows in turn
        sign = -1.0 if math.floor(x) % 2 else 1.0
        return sign * math.inf
    return 1.0 / g


def pochhammer(x: float, k: int) -> float:
    """Rising factorial ``x (x+1) ... (x+k-1)``."""
    out = 1.0
    for i in range(k):
        out *= x + i
    return out


@dataclass(frozen=True)
class GeneralizedPolynomial:
    """Finite sum ``sum_k c_k t**p_k`` with real exponents.

    Build with :meth:`from_terms`, which merges equal exponents, drops zero
    coefficients and sorts by exponent.
    """

    coefficients: tuple[float, ...] = ()
    exponents: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.coefficients) != len(self.exponents):
            raise ValueError("coefficients and exponents must have equal length")
        if any(not math.isfinite(c) for c in self.coefficients):
            raise ValueError("coefficients must be finite")
        if any(b <= a for a, b in zip(self.exponents, self.exponents[1:])):
            raise ValueError("exponents must be strictly increasing")

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[float, float]]) -> "GeneralizedPolynomial":
        merged: dict[float, float] = {}
        for c, p in terms:
            p = float(p)
            merged[p] = merged.get(p, 0.0) + float(c)
        items = sorted((p, c) for p, c in merged.items() if c != 0.0)
        return cls(tuple(c for _, c in items), tuple(p for p, _ in items))

    @classmethod
    def monomial(cls, exponent: float, coefficient: float = 1.0) -> "GeneralizedPolynomial":
        return cls.from_terms([(coefficient, exponent)])

    @property
    def terms(self) -> list[tuple[float, float]]:
        return list(zip(self.coefficients, self.exponents))

    def is_zero(self) -> bool:
        return not self.coefficients

    def __len__(self) -> int:
        return len(self.coefficients)

    def __add__(self, other: "GeneralizedPolynomial") -> "GeneralizedPolynomial":
        return GeneralizedPolynomial.from_terms(self.terms + other.terms)

    def scaled(self, factor: float) -> "GeneralizedPolynomial":
        return GeneralizedPolynomial.from_terms((factor * c, p) for c, p in self.terms)

    def __call__(self, t):
        """Evaluate in double precision; negative exponents give ``inf`` at 0.

        Sums with large alternating coefficients lose digits here; see
        :meth:`evaluate_mp`.
        """
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            for c, p in self.terms:
                out = out + c * np.power(t, p)
        return out if out.ndim else float(out)

    def evaluate_mp(self, t: float, dps: int = 50) -> float:
        """Evaluate with ``dps`` decimal digits; coefficients are taken as exact."""
        with mpmath.workdps(dps):
            x = mpmath.mpf(t)
            total = mpmath.fsum(mpmath.mpf(c) * x ** mpmath.mpf(p) for c, p in self.terms)
            return float(total)


def rl_deriv_monomial(exponent: float, alpha: float) -> GeneralizedPolynomial:
    """``D^alpha t**p = Gamma(p+1)/Gamma(p+1-alpha) t**(p-alpha)``.

    When ``p + 1 - alpha`` is a pole of Gamma the image is the zero
    polynomial, which covers integer-order annihilation (``D^2 t = 0``).
    """
    alpha = check_order(alpha)
    if exponent < 0:
        raise ValueError(f"monomial exponent must be >= 0, got {exponent!r}")
    if alpha == 0:
        return GeneralizedPolynomial.monomial(exponent)
    coefficient = math.gamma(exponent + 1) * reciprocal_gamma(exponent + 1 - alpha)
    return GeneralizedPolynomial.from_terms([(coefficient, exponent - alpha)])


def rl_deriv_poly(poly: GeneralizedPolynomial, alpha: float) -> GeneralizedPolynomial:
    """Termwise :func:`rl_deriv_monomial`.

    Only defined for non-negative exponents: repeated differentiation has to
    start again from the original polynomial, since the RL derivative does
    not compose for terms that are singular at 0.
    """
    alpha = check_order(alpha)
    if any(p < 0 for p in poly.exponents):
        raise ValueError("rl_deriv_poly needs non-negative exponents")
    terms = []
    for c, p in poly.terms:
        terms.extend((c * dc, dp) for dc, dp in rl_deriv_monomial(p, alpha).terms)
    return GeneralizedPolynomial.from_terms(terms)


def _log10_max_term(a: float, c1: float, c2: float, z: float, max_terms: int) -> float:
    # walk log|term_k| in double to find the peak; sizes the working precision
    if z == 0:
        return 0.0
    log_term = 0.0
    peak = 0.0
    for k in range(max_terms):
        if a + k == 0:
            break
        log_term += (math.log(abs(a + k)) + math.log(abs(z))
                     - math.log(abs(c1 + k)) - math.log(abs(c2 + k)) - math.log(k + 1))
        peak = max(peak, log_term)
        if k > abs(z) ** (1 / 2) + abs(a) + 2 and log_term < peak - 50:
            break
    return peak / math.log(10)


def hyp1f2(a: float, c1: float, c2: float, z: float, *, max_terms: int = 10_000) -> float:
    r"""Generalized hypergeometric :math:`{}_1F_2(a; c_1, c_2; z)` by its power series.

    Terms follow the ratio recurrence
    ``term[k+1] = term[k] (a+k) z / ((c1+k)(c2+k)(k+1))``. For negative ``z``
    the terms alternate and peak far above the result (about ``1e10`` times
    larger at ``z = -144``), so the sum is carried in mpmath floats with the
    peak's digit count added as guard digits. Summation stops once
    ``|term| < 1e-16 |sum|`` for three consecutive terms.
    """
    if _is_pole(c1) or _is_pole(c2):
        raise ValueError("c1 and c2 must not be non-positive integers")
    if z == 0:
        return 1.0
    guard = max(0, math.ceil(_log10_max_term(a, c1, c2, z, max_terms)))
    with mpmath.workdps(20 + guard):
        A, C1, C2, Z = (mpmath.mpf(v) for v in (a, c1, c2, z))
        term = mpmath.mpf(1)
        total = mpmath.mpf(1)
        tol = mpmath.mpf("1e-16")
        small = 0
        for k in range(max_terms):
            term = term * (A + k) * Z / ((C1 + k) * (C2 + k) * (k + 1))
            total += term
            if term == 0:
                return float(total)
            if abs(term) < tol * abs(total):
                small += 1
                if small == 3:
                    return float(total)
            else:
                small = 0
    raise ConvergenceError(f"1F2({a}; {c1}, {c2}; {z}) not converged after {max_terms} terms")


def rl_deriv_sin(omega: float, alpha: float, t):
    r"""RL derivative of ``sin(omega t)``, lower terminal 0, for ``0 <= alpha < 2``.

    .. math::

        D^\alpha \sin(\omega t) = \frac{\omega t^{1-\alpha}}{\Gamma(2-\alpha)}
            {}_1F_2\left(1; \tfrac{2-\alpha}{2}, \tfrac{3-\alpha}{2};
            -\tfrac{\omega^2 t^2}{4}\right)
    """
    alpha = check_order(alpha)
    if not 0 <= alpha < 2:
        raise ValueError(f"rl_deriv_sin needs 0 <= alpha < 2, got {alpha}")
    if omega <= 0:
        raise ValueError("omega must be positive")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise ValueError("rl_deriv_sin is evaluated at t > 0 only")
    scale = omega / math.gamma(2 - alpha)
    c1, c2 = (2 - alpha) / 2, (3 - alpha) / 2
    out = np.array([
        scale * x ** (1 - alpha) * hyp1f2(1.0, c1, c2, -(omega * x) ** 2 / 4)
        for x in t_arr.ravel()
    ]).reshape(t_arr.shape)
    return out if out.ndim else float(out)


def gl_weights(alpha: float, n: int) -> np.ndarray:
    """Grunwald-Letnikov weights ``w_0..w_n``: ``w_k = w_{k-1} (k-1-alpha)/k``."""
    k = np.arange(1, n + 1)
    return np.concatenate(([1.0], np.cumprod((k - 1 - alpha) / k)))


def gl_deriv(f: SampledSignal, alpha: float, j: int) -> float:
    """Grunwald-Letnikov estimate of ``D^alpha f`` at ``t_j``; first order in ``ts``."""
    alpha = check_order(alpha)
    if not 1 <= j <= f.m:
        raise IndexError(f"sample index {j} outside 1..{f.m}")
    history = f.values[: j + 1]
    if not np.all(np.isfinite(history)):
        raise ValueError("gl_deriv needs finite samples on 0..j")
    return float(f.ts ** -alpha * np.dot(gl_weights(alpha, j), history[::-1]))
