"""The benchmark system, its signals, and the example runs behind the CLI.

The benchmark is ``3 y + 2 D^0.5 y + D^1.5 y = u`` on ``[0, 8]`` with
``y = sin(3t) + 1``; ``u`` is obtained analytically, so ``y(0) = 1`` is an
unknown nonzero initial condition the estimator never sees.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__
from .basis import make_basis
from .fractional import reciprocal_gamma, rl_deriv_sin
from .identification import (
    BasisConfig,
    EstimateResult,
    SystemStructure,
    identify_online_batch,
    relative_errors,
)
from .noise import (
    RNG_ALGORITHM,
    GaussianNoise,
    SinusoidalNoise,
    noise_error_contribution,
    sample_noise,
    sigma_from_snr,
    sinusoid_error_components,
    sinusoid_error_bound,
    unit_gaussian_path,
)
from .signals import SampledSignal

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMA_VERSION = 1

IDENTIFY_COLUMNS = ["schema_version", "horizon_s", "param_name", "estimate", "truth",
                    "rel_error", "cond_number", "residual", "seed", "ts_s", "noise_kind"]
BOUND_COLUMNS = ["schema_version", "horizon_s", "n", "order", "omega", "bound",
                 "max_continuous", "max_discrete", "within_bound"]
SWEEP_COLUMNS = ["schema_version", "ts_s", "seeds", "noise_mean", "noise_std", "noise_sem",
                 "noise_free_max_rel_error"]
NOISE_KINDS = ("sin", "gauss", "none")


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


def paper_system() -> tuple[SystemStructure, tuple[float, ...]]:
    """``(structure, (a0, a1, a2))`` of the benchmark; ``b0 = 1``, no other ``b``."""
    return SystemStructure((0.0, 0.5, 1.5), (0.0,)), (3.0, 2.0, 1.0)


def paper_output(t, omega: float = 3.0):
    return np.sin(omega * np.asarray(t, dtype=float)) + 1.0


def output_derivative(alpha: float, t, omega: float = 3.0):
    """``D^alpha [sin(omega t) + 1]`` for ``t > 0``."""
    t = np.asarray(t, dtype=float)
    if alpha == 0:
        return np.sin(omega * t) + 1.0
    if alpha == 1:
        return omega * np.cos(omega * t)
    return rl_deriv_sin(omega, alpha, t) + reciprocal_gamma(1 - alpha) * t ** -alpha


def synthetic_input(structure: SystemStructure, a_true: Sequence[float], t,
                    omega: float = 3.0) -> np.ndarray:
    """``u = sum_i a_i D^{alpha_i} y`` for ``y = sin(omega t) + 1``, ``t > 0``."""
    if structure.M != 0 or structure.beta_orders[0] != 0:
        raise ConfigError("synthetic data needs u on the right-hand side with order 0 only")
    if len(a_true) != structure.L + 1:
        raise ConfigError(f"{len(a_true)} values of a for {structure.L + 1} orders")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("the input is singular at t = 0; evaluate at t > 0")
    return sum(a * output_derivative(alpha, t, omega)
               for a, alpha in zip(a_true, structure.alpha_orders))


def paper_input(t):
    structure, a_true = paper_system()
    return synthetic_input(structure, a_true, t)


@dataclass(frozen=True)
class ExperimentConfig:
    alpha: tuple[float, ...] = (0.0, 0.5, 1.5)
    beta: tuple[float, ...] = (0.0,)
    a_true: tuple[float, ...] = (3.0, 2.0, 1.0)
    b_true: tuple[float, ...] = ()
    output_omega: float = 3.0
    t_end: float = 8.0
    ts: float = 0.01
    n_basis: int = 13
    mu: int = 6
    normalize: bool = True
    noise: str = "sin"
    amp: float = 0.5
    omega: float = 1e3
    phase: float = 0.0
    snr_db: float = 22.0
    seed: int = 0
    seeds: int = 50
    horizon_start: float = 1.8
    horizon_step: float = 0.1
    ts_list: tuple[float, ...] = (0.02, 0.01, 0.005, 0.0025)
    sweep_n: int = 1
    sweep_order: float = 0.5
    phases: int = 100
    data: str | None = None
    out: str | None = None

    def __post_init__(self):
        if self.ts <= 0 or self.t_end <= 0:
            raise ConfigError("ts and t_end must be positive")
        if abs(self.t_end / self.ts - round(self.t_end / self.ts)) > 1e-9 * self.t_end / self.ts:
            raise ConfigError(f"t_end={self.t_end} is not a whole number of ts={self.ts}")
        if self.noise not in NOISE_KINDS:
            raise ConfigError(f"noise must be one of {NOISE_KINDS}, got {self.noise!r}")
        if not 0 < self.horizon_start <= self.t_end + 1e-12 or self.horizon_step <= 0:
            raise ConfigError("horizons must satisfy 0 < start <= t_end and step > 0")
        if self.seeds < 1 or self.phases < 1:
            raise ConfigError("seeds and phases must be >= 1")
        try:
            self.structure
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.data is None and len(self.a_true) != len(self.alpha):
            raise ConfigError("a_true needs one value per alpha order")

    @property
    def m(self) -> int:
        return round(self.t_end / self.ts)

    @property
    def structure(self) -> SystemStructure:
        return SystemStructure(tuple(self.alpha), tuple(self.beta))

    @property
    def basis_config(self) -> BasisConfig:
        return BasisConfig(self.n_basis, self.mu, self.normalize)

    def horizon_indices(self, m: int | None = None) -> list[int]:
        """Sample indices of ``start, start + step, ...`` up to ``t_end``."""
        m = self.m if m is None else m
        out = []
        k = 0
        while True:
            i = round((self.horizon_start + k * self.horizon_step) / self.ts)
            if i > m:
                break
            out.append(i)
            k += 1
        return out


# TOML section -> {key: ExperimentConfig field}
_CONFIG_KEYS = {
    "system": {"alpha": "alpha", "beta": "beta", "a": "a_true", "b": "b_true",
               "output_omega": "output_omega"},
    "grid": {"t_end": "t_end", "ts": "ts"},
    "basis": {"n": "n_basis", "mu": "mu", "normalize": "normalize"},
    "noise": {"kind": "noise", "amp": "amp", "omega": "omega", "phase": "phase",
              "snr_db": "snr_db", "seed": "seed", "seeds": "seeds", "phases": "phases"},
    "horizons": {"start": "horizon_start", "step": "horizon_step"},
    "sweep": {"ts_list": "ts_list", "n": "sweep_n", "order": "sweep_order"},
    "data": {"path": "data"},
    "output": {"path": "out"},
}


def config_from_mapping(doc: dict[str, Any], base: ExperimentConfig | None = None) -> ExperimentConfig:
    values: dict[str, Any] = {}
    for section, body in doc.items():
        keys = _CONFIG_KEYS.get(section)
        if keys is None or not isinstance(body, dict):
            raise ConfigError(f"unknown config section [{section}]")
        for key, value in body.items():
            if key not in keys:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            values[keys[key]] = tuple(value) if isinstance(value, list) else value
    try:
        return dataclasses.replace(base or ExperimentConfig(), **values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_mapping(doc, base)


def load_data(path: str | Path) -> tuple[SampledSignal, SampledSignal]:
    """Read ``t,u,y`` columns from a CSV file with a header row.

    Times must be ``0, ts, 2 ts, ...``; a non-numeric or empty ``u`` at
    ``t = 0`` marks a singular input sample.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read data file {path}: {exc}") from exc
    if len(rows) < 3 or not {"t", "u", "y"} <= set(rows[0]):
        raise ConfigError("data file needs columns t,u,y and at least 3 rows")

    def num(text: str) -> float:
        try:
            return float(text)
        except ValueError:
            return math.inf

    try:
        t = np.array([float(r["t"]) for r in rows])
    except ValueError as exc:
        raise ConfigError(f"bad time column: {exc}") from exc
    ts = t[1] - t[0]
    if t[0] != 0 or not np.allclose(np.diff(t), ts, rtol=1e-6, atol=0):
        raise ConfigError("data times must start at 0 and be equally spaced")
    u = np.array([num(r["u"]) for r in rows])
    y = np.array([num(r["y"]) for r in rows])
    try:
        return SampledSignal(ts, u), SampledSignal(ts, y)
    except ValueError as exc:
        raise ConfigError(f"bad data file: {exc}") from exc


def clean_signals(config: ExperimentConfig, ts: float | None = None) -> tuple[SampledSignal, SampledSignal]:
    """Input and noise-free output of the synthetic system on the config grid."""
    ts = config.ts if ts is None else ts
    m = round(config.t_end / ts)
    structure = config.structure
    singular = structure.alpha_orders[-1] > 0

    def u_fn(t):
        return synthetic_input(structure, config.a_true, t, config.output_omega)

    u = SampledSignal.from_function(u_fn, ts, m, singular_start=singular)
    y = SampledSignal.from_function(lambda t: paper_output(t, config.output_omega), ts, m)
    return u, y


def noise_path(config: ExperimentConfig, y: SampledSignal, seed: int | None = None) -> SampledSignal:
    """Noise for one run: the configured sinusoid, or Gaussian scaled to ``snr_db``."""
    if config.noise == "none":
        return SampledSignal(y.ts, np.zeros(y.m + 1))
    if config.noise == "sin":
        return sample_noise(SinusoidalNoise(config.amp, config.omega, config.phase), y.ts, y.m)
    seed = config.seed if seed is None else seed
    sigma = sigma_from_snr(y, config.snr_db, unit_gaussian_path(seed, y.m + 1))
    return sample_noise(GaussianNoise(sigma, seed), y.ts, y.m)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(rows: Iterable[dict], columns: Sequence[str], dest=None) -> str:
    """Write rows with shortest round-trip float formatting; returns the text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    text = buf.getvalue()
    if dest is not None:
        Path(dest).write_text(text)
    return text


def write_metadata(dest, config: ExperimentConfig, command: str) -> None:
    meta = {
        "command": command,
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "rng": RNG_ALGORITHM,
        "config": dataclasses.asdict(config),
    }
    Path(str(dest) + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _horizon_s(est: EstimateResult) -> float:
    return round(est.horizon, 12)


def estimate_rows(structure: SystemStructure, estimates: Sequence[EstimateResult],
                  truth: Sequence[float] | None, *, seed, ts: float, noise_kind: str) -> list[dict]:
    """Long-format rows, one per (horizon, parameter). ``truth`` is in column order."""
    rows = []
    for est in estimates:
        errors = None
        if truth is not None:
            errors = np.abs(est.params - truth) / np.abs(truth)
        for k, name in enumerate(structure.param_names):
            rows.append({
                "schema_version": SCHEMA_VERSION,
                "horizon_s": _horizon_s(est),
                "param_name": name,
                "estimate": float(est.params[k]),
                "truth": None if truth is None else float(truth[k]),
                "rel_error": None if errors is None else float(errors[k]),
                "cond_number": est.condition_number,
                "residual": est.residual_norm,
                "seed": seed,
                "ts_s": ts,
                "noise_kind": noise_kind,
            })
    return rows


def _truth(config: ExperimentConfig) -> np.ndarray:
    return np.concatenate([np.asarray(config.b_true, float), np.asarray(config.a_true, float)])


@dataclass
class RunResult:
    rows: list[dict]
    estimates: list[list[EstimateResult]] = field(default_factory=list)
    extra: list[dict] = field(default_factory=list)

    def csv(self, columns: Sequence[str] = IDENTIFY_COLUMNS) -> str:
        return write_csv(self.rows, columns)


def run_identify(config: ExperimentConfig) -> RunResult:
    """One record: from ``config.data`` if given, else synthetic data plus the configured noise."""
    structure = config.structure
    if config.data is not None:
        u, y_obs = load_data(config.data)
        truth = _truth(config) if len(config.a_true) == structure.L + 1 and \
            len(config.b_true) == structure.M else None
        seed, kind = None, "data"
    else:
        u, y = clean_signals(config)
        y_obs = y + noise_path(config, y)
        truth = _truth(config)
        seed = config.seed if config.noise == "gauss" else None
        kind = config.noise
    horizons = config.horizon_indices(u.m)
    estimates = identify_online_batch(structure, u, [y_obs], horizons, config.basis_config)[0]
    rows = estimate_rows(structure, estimates, truth, seed=seed, ts=u.ts, noise_kind=kind)
    return RunResult(rows, [estimates])


def run_example1(config: ExperimentConfig | None = None) -> RunResult:
    """Sinusoidal measurement noise, on-line estimates over the horizon grid.

    ``extra`` holds, per horizon and per ``(n, alpha_i)``, the deterministic
    bound and the noise term actually present in the sampled integral.
    """
    config = config or ExperimentConfig(noise="sin")
    structure = config.structure
    u, y = clean_signals(config)
    noise = noise_path(config, y)
    horizons = config.horizon_indices()
    estimates = identify_online_batch(structure, u, [y + noise], horizons,
                                      config.basis_config)[0]
    rows = estimate_rows(structure, estimates, _truth(config), seed=None, ts=config.ts,
                         noise_kind=config.noise)
    bounds = []
    if config.noise == "sin":
        for i in horizons:
            basis = make_basis(config.n_basis, config.mu, i * config.ts, structure.l,
                               config.normalize)
            t = np.arange(i + 1) * config.ts
            seg = SampledSignal(config.ts, noise.values[: i + 1])
            for n, fn in enumerate(basis, start=1):
                for alpha in structure.alpha_orders:
                    kernel = SampledSignal(config.ts, fn.deriv_values(alpha, t))
                    e = noise_error_contribution(kernel, seg)
                    bounds.append({
                        "schema_version": SCHEMA_VERSION,
                        "horizon_s": round(i * config.ts, 12), "n": n, "order": alpha,
                        "omega": config.omega,
                        "bound": sinusoid_error_bound(fn, alpha, config.amp, config.omega),
                        "max_discrete": abs(e),
                    })
    return RunResult(rows, [estimates], bounds)


def run_example2(config: ExperimentConfig | None = None) -> RunResult:
    """Gaussian noise at ``snr_db`` for seeds ``seed .. seed + seeds - 1``.

    ``extra`` holds per-horizon, per-parameter mean and std of the relative
    error across seeds.
    """
    config = config or ExperimentConfig(noise="gauss")
    if config.noise != "gauss":
        config = dataclasses.replace(config, noise="gauss")
    structure = config.structure
    u, y = clean_signals(config)
    seeds = list(range(config.seed, config.seed + config.seeds))
    paths = [y + noise_path(config, y, s) for s in seeds]
    horizons = config.horizon_indices()
    per_seed = identify_online_batch(structure, u, paths, horizons, config.basis_config)
    truth = _truth(config)
    rows = []
    for h in range(len(horizons)):
        for s, estimates in zip(seeds, per_seed):
            rows.extend(estimate_rows(structure, [estimates[h]], truth, seed=s,
                                      ts=config.ts, noise_kind="gauss"))
    summary = []
    for h in range(len(horizons)):
        errs = np.array([relative_errors(est[h], config.a_true, config.b_true) for est in per_seed])
        for k, name in enumerate(structure.param_names):
            summary.append({
                "horizon_s": _horizon_s(per_seed[0][h]), "param_name": name,
                "mean_rel_error": float(errs[:, k].mean()),
                "std_rel_error": float(errs[:, k].std(ddof=1)) if len(seeds) > 1 else 0.0,
            })
    return RunResult(rows, per_seed, summary)


def run_ts_sweep(config: ExperimentConfig | None = None) -> RunResult:
    """Noise-term statistics and noise-free accuracy at ``T = t_end`` for each ``ts``.

    The noise term is that of kernel ``D^{sweep_order} g_{sweep_n}`` against
    Gaussian noise whose ``sigma`` is fixed by ``snr_db`` on the base grid
    (seed ``config.seed``), so only the sampling period changes.
    """
    config = config or ExperimentConfig(noise="gauss")
    structure = config.structure
    u0, y0 = clean_signals(config)
    sigma = sigma_from_snr(y0, config.snr_db, unit_gaussian_path(config.seed, y0.m + 1))
    seeds = range(config.seed, config.seed + config.seeds)
    rows = []
    for ts in config.ts_list:
        m = round(config.t_end / ts)
        if abs(config.t_end / ts - m) > 1e-9 * m:
            raise ConfigError(f"t_end={config.t_end} is not a whole number of ts={ts}")
        basis = make_basis(config.n_basis, config.mu, config.t_end, structure.l, config.normalize)
        fn = basis[config.sweep_n - 1]
        kernel = SampledSignal(ts, fn.deriv_values(config.sweep_order, np.arange(m + 1) * ts))
        e = np.array([
            noise_error_contribution(kernel, sample_noise(GaussianNoise(sigma, s), ts, m))
            for s in seeds
        ])
        u, y = clean_signals(config, ts)
        est = identify_online_batch(structure, u, [y], [m], config.basis_config)[0][0]
        err = relative_errors(est, config.a_true, config.b_true)
        rows.append({
            "schema_version": SCHEMA_VERSION, "ts_s": ts, "seeds": len(e),
            "noise_mean": float(e.mean()),
            "noise_std": float(e.std(ddof=1)) if len(e) > 1 else 0.0,
            "noise_sem": float(e.std(ddof=1) / math.sqrt(len(e))) if len(e) > 1 else 0.0,
            "noise_free_max_rel_error": float(err.max()),
        })
    return RunResult(rows)


def run_bound_check(config: ExperimentConfig | None = None) -> RunResult:
    """Sinusoid bound against measured noise terms at ``T = t_end`` over random phases.

    ``max_continuous`` is the exact integral (oscillatory quadrature);
    ``max_discrete`` is the trapezoid sum on the ``ts`` grid, where the
    sinusoid may be aliased.
    """
    config = config or ExperimentConfig()
    structure = config.structure
    rng = np.random.Generator(np.random.PCG64(config.seed))
    phases = rng.uniform(0.0, 2 * math.pi, config.phases)
    basis = make_basis(config.n_basis, config.mu, config.t_end, structure.l, config.normalize)
    t = np.arange(config.m + 1) * config.ts
    rows = []
    for n, fn in enumerate(basis, start=1):
        for alpha in structure.alpha_orders:
            bound = sinusoid_error_bound(fn, alpha, config.amp, config.omega)
            s, c = sinusoid_error_components(fn, alpha, config.omega)
            cont = float(np.max(np.abs(config.amp * (np.cos(phases) * s + np.sin(phases) * c))))
            kernel = SampledSignal(config.ts, fn.deriv_values(alpha, t))
            disc = max(abs(noise_error_contribution(
                kernel, sample_noise(SinusoidalNoise(config.amp, config.omega, p),
                                     config.ts, config.m)))
                for p in phases)
            rows.append({
                "schema_version": SCHEMA_VERSION, "horizon_s": config.t_end, "n": n,
                "order": alpha, "omega": config.omega, "bound": bound,
                "max_continuous": cont, "max_discrete": disc,
                "within_bound": cont <= bound,
            })
    return RunResult(rows)
