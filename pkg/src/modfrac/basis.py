r"""Polynomial modulating functions :math:`g(t) = (T-t)^a t^b` on :math:`[0, T]`.

Two routes to :math:`D^\alpha g` are provided.

* :func:`frac_deriv` differentiates the binomial expansion in powers of
  ``t``. Its coefficients alternate in sign and reach ``C(a, k) T**(a-k)``,
  so double-precision evaluation near ``t = T`` cancels away 4-5 digits for
  the degree-26 functions used in practice.
* :meth:`ModulatingFunction.deriv_values` uses the factored form

  .. math::

      D^\alpha\left[(T-t)^a t^b\right] = \sum_{k=0}^{a} \binom{a}{k}
          (-\alpha)_k \frac{\Gamma(b+1)}{\Gamma(b+k+1-\alpha)}
          (T-t)^{a-k} t^{b+k-\alpha},

  obtained by expanding :math:`(T-\tau)^a` around :math:`T - t` inside the
  Riemann-Liouville integral. Terms carry at most a few sign changes and the
  sum is accurate to a few ulps of :math:`\max |D^\alpha g|`. The identifier
  samples kernels from this form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .fractional import (
    GeneralizedPolynomial,
    check_order,
    pochhammer,
    reciprocal_gamma,
    rl_deriv_poly,
)

#: Relative threshold for the endpoint-derivative (P2) check.
P2_TOLERANCE = 1e-9

#: Points in the uniform grid that approximates a supremum on (0, T].
SUP_GRID_POINTS = 10_000


@dataclass(frozen=True)
class ModulatingFunction:
    """``scale * (T - t)**left * t**right``."""

    left: int
    right: int
    T: float
    scale: float = 1.0

    def __post_init__(self):
        if self.left < 1 or self.right < 1:
            raise ValueError("both exponents must be >= 1")
        if not (math.isfinite(self.T) and self.T > 0):
            raise ValueError(f"horizon must be positive, got {self.T!r}")
        if not (math.isfinite(self.scale) and self.scale != 0):
            raise ValueError("scale must be finite and nonzero")

    @property
    def degree(self) -> int:
        return self.left + self.right

    @cached_property
    def peak(self) -> float:
        """``max |g|`` on ``[0, T]``, attained at ``t = T right / degree``."""
        a, b, T = self.left, self.right, self.T
        log_peak = a * math.log(a * T / (a + b)) + b * math.log(b * T / (a + b))
        return abs(self.scale) * math.exp(log_peak)

    @cached_property
    def expansion(self) -> GeneralizedPolynomial:
        a, b, T = self.left, self.right, self.T
        return GeneralizedPolynomial.from_terms(
            (self.scale * math.comb(a, k) * T ** (a - k) * (-1) ** k, k + b)
            for k in range(a + 1)
        )

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = self.scale * (self.T - t) ** self.left * t ** self.right
        return out if out.ndim else float(out)

    def deriv_terms(self, alpha: float) -> list[tuple[float, int, float]]:
        """``(c, p, q)`` triples with ``D^alpha g = sum c (T-t)**p t**q``."""
        alpha = check_order(alpha)
        a, b = self.left, self.right
        terms = []
        for k in range(a + 1):
            c = (self.scale * math.comb(a, k) * pochhammer(-alpha, k)
                 * math.gamma(b + 1) * reciprocal_gamma(b + k + 1 - alpha))
            if c != 0.0:
                terms.append((c, a - k, b + k - alpha))
        return terms

    def deriv_values(self, alpha: float, t) -> np.ndarray:
        """Samples of ``D^alpha g`` at ``t`` from the factored form."""
        t = np.asarray(t, dtype=float)
        lag = self.T - t
        out = np.zeros_like(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            for c, p, q in self.deriv_terms(alpha):
                out = out + c * lag ** p * t ** q
        return out


@dataclass(frozen=True)
class ModulatingBasis:
    """``g_n = (T-t)**(mu+n) t**(mu+N+1-n)`` for ``n = 1..N``."""

    functions: tuple[ModulatingFunction, ...]
    mu: int
    order: int
    T: float = field(init=False)

    def __post_init__(self):
        if not self.functions:
            raise ValueError("a basis needs at least one function")
        object.__setattr__(self, "functions", tuple(self.functions))
        T = self.functions[0].T
        if any(fn.T != T for fn in self.functions):
            raise ValueError("all functions in a basis share one horizon")
        object.__setattr__(self, "T", T)
        pairs = [(fn.left, fn.right) for fn in self.functions]
        if len(set(pairs)) != len(pairs):
            raise ValueError("exponent pairs must be pairwise distinct")

    @property
    def N(self) -> int:
        return len(self.functions)

    def __iter__(self):
        return iter(self.functions)

    def __getitem__(self, n: int) -> ModulatingFunction:
        return self.functions[n]

    def __len__(self) -> int:
        return len(self.functions)


def make_basis(N: int, mu: int, T: float, l: int, normalize: bool = True, *,
               check: bool = True) -> ModulatingBasis:
    """The ``N``-function basis with exponent offset ``mu`` on ``[0, T]``.

    With ``normalize`` each function is divided by its peak so all rows of the
    identification system have comparable magnitude. ``check=False`` allows
    ``mu < l`` so that :func:`check_properties` can report the failure.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if l < 1:
        raise ValueError("modulating order l must be >= 1")
    if mu < 0:
        raise ValueError("mu must be >= 0")
    if check and mu < l:
        raise ValueError(f"mu={mu} < l={l}: derivatives of order l-1 would not vanish")
    functions = []
    for n in range(1, N + 1):
        fn = ModulatingFunction(mu + n, mu + N + 1 - n, T)
        if normalize:
            fn = ModulatingFunction(fn.left, fn.right, T, scale=1.0 / fn.peak)
        functions.append(fn)
    return ModulatingBasis(tuple(functions), mu=mu, order=l)


def frac_deriv(fn: ModulatingFunction, alpha: float) -> GeneralizedPolynomial:
    """``D^alpha g`` as a generalized polynomial in ``t`` (expansion route)."""
    alpha = check_order(alpha)
    if alpha >= fn.degree + 1:
        raise ValueError(f"order {alpha} too high for a degree-{fn.degree} function")
    return rl_deriv_poly(fn.expansion, alpha)


def endpoint_frac_value(fn: ModulatingFunction, alpha: float) -> float:
    """``D^alpha g`` at ``t = T``; only the ``(T-t)**0`` term survives."""
    return float(fn.deriv_values(alpha, fn.T))


def sup_frac_deriv(fn: ModulatingFunction, alpha: float) -> float:
    """Grid approximation of ``sup |D^alpha g|`` over ``(0, T]``."""
    t = fn.T * np.arange(1, SUP_GRID_POINTS + 1) / SUP_GRID_POINTS
    return float(np.max(np.abs(fn.deriv_values(alpha, t))))


@dataclass(frozen=True)
class PropertyCheck:
    function: int
    prop: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class PropertyReport:
    checks: tuple[PropertyCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[PropertyCheck]:
        return [c for c in self.checks if not c.passed]

    def summary(self) -> str:
        lines = []
        for c in self.checks:
            mark = "ok  " if c.passed else "FAIL"
            lines.append(f"{mark} g{c.function} {c.prop}: {c.detail}")
        return "\n".join(lines)


def check_properties(basis: ModulatingBasis, orders: Iterable[float] = (0.0,)) -> PropertyReport:
    """Check P1, P2 and P4 for each function; never raises on failure.

    P2 evaluates ordinary derivatives ``0..l-1`` at both endpoints and
    compares against ``P2_TOLERANCE * max|g|``. P4 is structural: every
    exponent of ``D^beta g`` must be positive for each ``beta < l`` in
    ``orders``, so the derivative vanishes at ``t = 0``.
    """
    l = basis.order
    orders = sorted({check_order(b) for b in orders})
    checks: list[PropertyCheck] = []
    for n, fn in enumerate(basis, start=1):
        integral = all(float(p).is_integer() and p >= 0 for p in fn.expansion.exponents)
        checks.append(PropertyCheck(n, "P1", integral, "polynomial, C-infinity"))

        worst = 0.0
        failing = []
        for j in range(l):
            v0, vT = np.abs(fn.deriv_values(j, np.array([0.0, fn.T])))
            worst = max(worst, v0, vT)
            if max(v0, vT) > P2_TOLERANCE * fn.peak:
                failing.append(j)
        detail = (f"derivative orders {failing} nonzero at an endpoint" if failing
                  else f"max endpoint |g^(j)| = {worst:.3g} for j < {l}")
        checks.append(PropertyCheck(n, "P2", not failing, detail))

        bad = []
        for beta in orders:
            if beta >= l:
                continue
            exps = frac_deriv(fn, beta).exponents
            if exps and min(exps) <= 0:
                bad.append(beta)
        detail = (f"nonpositive exponent for orders {bad}" if bad
                  else f"all exponents > 0 for orders {[b for b in orders if b < l]}")
        checks.append(PropertyCheck(n, "P4", not bad, detail))
    return PropertyReport(tuple(checks))


def kernel_table(basis: ModulatingBasis, orders: Sequence[float], t: np.ndarray) -> np.ndarray:
    """Array ``K[n, i, j] = D^{orders[i]} g_n(t_j)``."""
    t = np.asarray(t, dtype=float)
    out = np.empty((basis.N, len(orders), t.size))
    for n, fn in enumerate(basis):
        for i, alpha in enumerate(orders):
            out[n, i] = fn.deriv_values(alpha, t)
    return out
