r"""Parameter identification with modulating functions.

The model is

.. math::

    \sum_{i=0}^{L} a_i D^{\alpha_i} y(t) = \sum_{j=0}^{M} b_j D^{\beta_j} u(t),
    \qquad b_0 = 1.

Multiplying by :math:`g_n(T - t)` and integrating over :math:`[0, T]` moves
every derivative onto :math:`g_n`, which is known exactly, and kills the
unknown initial conditions. Each modulating function contributes one row:

.. math::

    \sum_{j=1}^{M} b_j U(n, j) + \sum_{i=0}^{L} a_i Y(n, i) = I(n)

with :math:`U(n,j) = -\int_0^T D^{\beta_j} g_n(t) u(T-t) dt`,
:math:`Y(n,i) = \int_0^T D^{\alpha_i} g_n(t) y(T-t) dt` and
:math:`I(n) = \int_0^T D^{\beta_0} g_n(t) u(T-t) dt`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .basis import ModulatingBasis, kernel_table, make_basis
from .fractional import check_order
from .quadrature import QuadratureRule, modulated_integrals, trapezoid_rule
from .signals import SampledSignal, check_same_grid

#: Condition numbers above this flag the estimate as unreliable.
RANK_WARNING_CONDITION = 1e12

#: Fewest samples a horizon may use.
MIN_HORIZON_SAMPLES = 50


class RankDeficiencyWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class SystemStructure:
    """Derivative orders of the model; ``b_0`` is fixed to 1."""

    alpha_orders: tuple[float, ...]
    beta_orders: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        for name in ("alpha_orders", "beta_orders"):
            orders = tuple(check_order(a) for a in getattr(self, name))
            if not orders:
                raise ValueError(f"{name} must not be empty")
            if any(b <= a for a, b in zip(orders, orders[1:])):
                raise ValueError(f"{name} must be strictly increasing")
            object.__setattr__(self, name, orders)

    @property
    def L(self) -> int:
        return len(self.alpha_orders) - 1

    @property
    def M(self) -> int:
        return len(self.beta_orders) - 1

    @property
    def W(self) -> int:
        """Number of unknowns, ``a_0..a_L`` and ``b_1..b_M``."""
        return self.L + self.M + 1

    @property
    def l(self) -> int:
        """Minimum modulating order, ``ceil`` of the highest derivative order."""
        return max(1, math.ceil(max(self.alpha_orders[-1], self.beta_orders[-1])))

    @property
    def param_names(self) -> list[str]:
        """Unknowns in column order: ``b_1..b_M`` then ``a_0..a_L``."""
        return [f"b{j}" for j in range(1, self.M + 1)] + [f"a{i}" for i in range(self.L + 1)]


@dataclass(frozen=True, eq=False)
class LinearSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    horizon: float
    M: int
    dropped_endpoints: int = 0


@dataclass(frozen=True, eq=False)
class EstimateResult:
    a_hat: np.ndarray
    b_hat: np.ndarray
    residual_norm: float
    condition_number: float
    horizon: float
    rank_flag: bool = False
    #: Endpoint samples given zero weight because they were non-finite.
    dropped_endpoints: int = 0

    @property
    def params(self) -> np.ndarray:
        """Estimates in column order, ``b_hat`` then ``a_hat``."""
        return np.concatenate([self.b_hat, self.a_hat])


@dataclass(frozen=True)
class BasisConfig:
    N: int = 13
    mu: int = 6
    normalize: bool = True


def _check_basis(structure: SystemStructure, basis: ModulatingBasis, horizon: float) -> None:
    if not math.isclose(basis.T, horizon, rel_tol=1e-9):
        raise ValueError(f"basis horizon {basis.T} does not match data horizon {horizon}")
    if basis.order < structure.l:
        raise ValueError(f"basis order {basis.order} below the required {structure.l}")
    if basis.N < structure.W:
        raise ValueError(f"{basis.N} modulating functions for {structure.W} unknowns")


def _assemble(structure: SystemStructure, u_kernels: np.ndarray, y_kernels: np.ndarray,
              u: SampledSignal, y_obs: SampledSignal, rule: QuadratureRule | None) -> LinearSystem:
    N = u_kernels.shape[0]
    u_int, u_drop = modulated_integrals(u_kernels.reshape(-1, u.m + 1), u, rule)
    y_int, y_drop = modulated_integrals(y_kernels.reshape(-1, u.m + 1), y_obs, rule)
    u_int = u_int.reshape(N, structure.M + 1)
    y_int = y_int.reshape(N, structure.L + 1)
    matrix = np.hstack([-u_int[:, 1:], y_int])
    return LinearSystem(matrix, u_int[:, 0].copy(), u.horizon, structure.M,
                        int(u_drop.sum() + y_drop.sum()))


def assemble(structure: SystemStructure, basis: ModulatingBasis, u: SampledSignal,
             y_obs: SampledSignal, rule: QuadratureRule | None = None) -> LinearSystem:
    """Build the ``N x W`` system; kernels come from the analytic derivatives of ``g_n``."""
    check_same_grid(u, y_obs)
    _check_basis(structure, basis, u.horizon)
    t = u.t
    u_kernels = kernel_table(basis, structure.beta_orders, t)
    y_kernels = kernel_table(basis, structure.alpha_orders, t)
    return _assemble(structure, u_kernels, y_kernels, u, y_obs, rule)


def solve(system: LinearSystem) -> EstimateResult:
    """Minimum-norm least-squares solution of the assembled system."""
    A, rhs = system.matrix, system.rhs
    if A.shape[0] < A.shape[1]:
        raise ValueError(f"{A.shape[0]} equations for {A.shape[1]} unknowns")
    x, _, _, sv = np.linalg.lstsq(A, rhs, rcond=None)
    cond = math.inf if sv[-1] == 0 else float(sv[0] / sv[-1])
    flagged = not cond <= RANK_WARNING_CONDITION
    if flagged:
        warnings.warn(f"condition number {cond:.3g} at T={system.horizon:g}",
                      RankDeficiencyWarning, stacklevel=2)
    residual = float(np.linalg.norm(A @ x - rhs))
    return EstimateResult(a_hat=x[system.M:], b_hat=x[:system.M], residual_norm=residual,
                          condition_number=cond, horizon=system.horizon, rank_flag=flagged,
                          dropped_endpoints=system.dropped_endpoints)


def identify_online_batch(structure: SystemStructure, u: SampledSignal,
                          y_paths: Sequence[SampledSignal], horizons: Sequence[int],
                          basis_config: BasisConfig = BasisConfig(),
                          min_samples: int = MIN_HORIZON_SAMPLES) -> list[list[EstimateResult]]:
    """:func:`identify_online` for several output records sharing one input.

    Kernels depend only on the horizon, so they are built once per horizon
    and reused for every path. Returns ``results[path][horizon]``.
    """
    for y in y_paths:
        check_same_grid(u, y)
    horizons = list(horizons)
    for i in horizons:
        if i < min_samples:
            raise ValueError(f"horizon index {i} below the minimum of {min_samples} samples")
        if i > u.m:
            raise IndexError(f"horizon index {i} beyond the last sample {u.m}")
    results: list[list[EstimateResult]] = [[] for _ in y_paths]
    for i in horizons:
        u_i = u.prefix(i)
        basis = make_basis(basis_config.N, basis_config.mu, u_i.horizon, structure.l,
                           basis_config.normalize)
        _check_basis(structure, basis, u_i.horizon)
        t = u_i.t
        u_kernels = kernel_table(basis, structure.beta_orders, t)
        y_kernels = kernel_table(basis, structure.alpha_orders, t)
        rule = trapezoid_rule(i)
        for out, y in zip(results, y_paths):
            system = _assemble(structure, u_kernels, y_kernels, u_i, y.prefix(i), rule)
            out.append(solve(system))
    return results


def identify_online(structure: SystemStructure, u: SampledSignal, y_obs: SampledSignal,
                    horizons: Sequence[int], basis_config: BasisConfig = BasisConfig(),
                    min_samples: int = MIN_HORIZON_SAMPLES) -> list[EstimateResult]:
    """Estimate at each horizon ``t_i`` from samples ``0..i`` only.

    The basis is rebuilt with ``T = t_i`` for every horizon, so the estimate
    at ``t_i`` is what an on-line estimator would report at that time.
    """
    return identify_online_batch(structure, u, [y_obs], horizons, basis_config, min_samples)[0]


def relative_errors(est: EstimateResult, a_true: Sequence[float],
                    b_true: Sequence[float] = ()) -> np.ndarray:
    """``|x_hat - x| / |x|`` in column order (``b_1..b_M``, ``a_0..a_L``)."""
    truth = np.concatenate([np.asarray(b_true, dtype=float), np.asarray(a_true, dtype=float)])
    if truth.shape != est.params.shape:
        raise ValueError(f"{truth.size} true values for {est.params.size} estimates")
    if np.any(truth == 0):
        raise ValueError("relative error is undefined for a zero true parameter")
    return np.abs(est.params - truth) / np.abs(truth)
