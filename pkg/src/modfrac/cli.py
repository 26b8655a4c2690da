"""Command-line front end; every subcommand writes CSV to ``--out`` or stdout.

Exit codes: 0 success, 2 configuration error, 3 numerical failure (series
non-convergence, a failing basis check, or a flagged condition number when
``--strict`` is given).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import warnings

import numpy as np

from .basis import ModulatingFunction, check_properties, make_basis
from .experiments import (
    BOUND_COLUMNS,
    IDENTIFY_COLUMNS,
    SWEEP_COLUMNS,
    ConfigError,
    ExperimentConfig,
    load_config,
    run_bound_check,
    run_example1,
    run_example2,
    run_identify,
    run_ts_sweep,
    write_csv,
    write_metadata,
)
from .fractional import ConvergenceError, gl_deriv, rl_deriv_monomial, rl_deriv_sin
from .identification import RankDeficiencyWarning
from .signals import SampledSignal

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

# CLI dest -> ExperimentConfig field
_OVERRIDES = {
    "ts": "ts", "t_end": "t_end", "n_basis": "n_basis", "mu": "mu", "normalize": "normalize",
    "snr_db": "snr_db", "noise": "noise", "omega": "omega", "amp": "amp", "phase": "phase",
    "seed": "seed", "seeds": "seeds", "horizon_start": "horizon_start",
    "horizon_step": "horizon_step", "out": "out", "ts_list": "ts_list", "data": "data",
    "phases": "phases",
}

# per-command defaults, applied under the config file and flags
_COMMAND_DEFAULTS = {
    "example1": {"noise": "sin"},
    "example2": {"noise": "gauss"},
    "sweep-ts": {"noise": "gauss"},
}


def _on_off(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return text == "on"


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("experiment options (override --config)")
    g.add_argument("--config", help="TOML experiment configuration")
    g.add_argument("--ts", type=float, help="sampling period [s]")
    g.add_argument("--t-end", type=float, help="end of the record [s]")
    g.add_argument("--n-basis", type=int, help="number of modulating functions")
    g.add_argument("--mu", type=int, help="exponent offset of the basis")
    g.add_argument("--normalize", type=_on_off, metavar="on|off",
                   help="scale each modulating function to unit peak")
    g.add_argument("--noise", choices=["sin", "gauss", "none"])
    g.add_argument("--snr-db", type=float)
    g.add_argument("--omega", type=float, help="sinusoidal noise angular frequency [rad/s]")
    g.add_argument("--amp", type=float, help="sinusoidal noise amplitude")
    g.add_argument("--phase", type=float, help="sinusoidal noise phase [rad]")
    g.add_argument("--seed", type=int)
    g.add_argument("--seeds", type=int, help="number of Monte Carlo seeds")
    g.add_argument("--horizon-start", type=float)
    g.add_argument("--horizon-step", type=float)
    g.add_argument("--out", help="output CSV path (default: stdout)")
    g.add_argument("--strict", action="store_true",
                   help="exit 3 when any estimate is flagged ill-conditioned")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modfrac", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("deriv", help="evaluate a fractional derivative on a grid")
    p.add_argument("--kind", choices=["monomial", "sin", "basis"], default="monomial")
    p.add_argument("--order", type=float, required=True)
    p.add_argument("--power", type=float, default=2.0, help="monomial exponent")
    p.add_argument("--omega", type=float, default=3.0, help="sine angular frequency")
    p.add_argument("--index", type=int, default=1, help="basis function number n")
    p.add_argument("--n-basis", type=int, default=13)
    p.add_argument("--mu", type=int, default=6)
    p.add_argument("--ts", type=float, default=0.01)
    p.add_argument("--t-end", type=float, default=8.0)
    p.add_argument("--gl", action="store_true", help="add a Grunwald-Letnikov oracle column")
    p.add_argument("--out")

    p = sub.add_parser("basis-check", help="report modulating-function properties P1-P4")
    p.add_argument("--n-basis", type=int, default=13)
    p.add_argument("--mu", type=int, default=6)
    p.add_argument("--t-end", type=float, default=8.0)
    p.add_argument("--l", type=int, default=2, dest="order_l", help="modulating order")
    p.add_argument("--orders", type=_float_list, default=(0.0, 0.5, 1.5),
                   help="derivative orders checked for P4")

    for name, text in [("identify", "on-line identification from a config or data file"),
                       ("example1", "sinusoidal-noise benchmark"),
                       ("example2", "Gaussian-noise Monte Carlo benchmark"),
                       ("sweep-ts", "noise term versus sampling period"),
                       ("bound-check", "sinusoid bound versus measured noise terms")]:
        p = sub.add_parser(name, help=text)
        _common(p)
        if name == "identify":
            p.add_argument("--data", help="CSV with columns t,u,y")
        if name == "example1":
            p.add_argument("--bounds-out", help="CSV for per-horizon bounds")
        if name == "sweep-ts":
            p.add_argument("--ts-list", type=_float_list)
        if name == "bound-check":
            p.add_argument("--phases", type=int)
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    base = ExperimentConfig(**_COMMAND_DEFAULTS.get(args.command, {}))
    if args.config:
        base = load_config(args.config, base)
    overrides = {field: getattr(args, dest) for dest, field in _OVERRIDES.items()
                 if getattr(args, dest, None) is not None}
    try:
        return dataclasses.replace(base, **overrides)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _emit(text: str, dest) -> None:
    if dest:
        with open(dest, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_deriv(args) -> int:
    m = round(args.t_end / args.ts)
    t = np.arange(1, m + 1) * args.ts
    rows = []
    if args.kind == "monomial":
        values = rl_deriv_monomial(args.power, args.order)(t)
        sampled = SampledSignal.from_function(lambda x: x ** args.power, args.ts, m)
    elif args.kind == "sin":
        values = rl_deriv_sin(args.omega, args.order, t)
        sampled = SampledSignal.from_function(lambda x: np.sin(args.omega * x), args.ts, m)
    else:
        basis = make_basis(args.n_basis, args.mu, args.t_end, 1, normalize=False)
        fn: ModulatingFunction = basis[args.index - 1]
        values = fn.deriv_values(args.order, t)
        sampled = SampledSignal.from_function(fn, args.ts, m)
    for j, (x, v) in enumerate(zip(t, values), start=1):
        row = {"t": float(x), "value": float(v)}
        if args.gl:
            row["gl_oracle"] = gl_deriv(sampled, args.order, j)
        rows.append(row)
    columns = ["t", "value"] + (["gl_oracle"] if args.gl else [])
    _emit(write_csv(rows, columns), args.out)
    return EXIT_OK


def _cmd_basis_check(args) -> int:
    basis = make_basis(args.n_basis, args.mu, args.t_end, args.order_l, normalize=False,
                       check=False)
    report = check_properties(basis, args.orders)
    print(report.summary())
    print("all properties hold" if report.passed else f"{len(report.failures)} checks failed")
    return EXIT_OK if report.passed else EXIT_NUMERIC


def _flagged(result) -> bool:
    return any(est.rank_flag for path in result.estimates for est in path)


def _run(args, config: ExperimentConfig) -> int:
    if args.command == "identify":
        result, columns = run_identify(config), IDENTIFY_COLUMNS
    elif args.command == "example1":
        result, columns = run_example1(config), IDENTIFY_COLUMNS
        if args.bounds_out:
            write_csv(result.extra, [c for c in BOUND_COLUMNS if c != "max_continuous"],
                      args.bounds_out)
    elif args.command == "example2":
        result, columns = run_example2(config), IDENTIFY_COLUMNS
        last = result.extra[-len(config.structure.param_names):]
        for row in last:
            print(f"T={row['horizon_s']:g} {row['param_name']}: mean rel error "
                  f"{row['mean_rel_error']:.3g} (std {row['std_rel_error']:.3g})", file=sys.stderr)
    elif args.command == "sweep-ts":
        result, columns = run_ts_sweep(config), SWEEP_COLUMNS
    else:
        result, columns = run_bound_check(config), BOUND_COLUMNS
        bad = [r for r in result.rows if not r["within_bound"]]
        if bad:
            print(f"{len(bad)} rows exceed the bound", file=sys.stderr)
            return EXIT_NUMERIC
    _emit(write_csv(result.rows, columns), config.out)
    if config.out:
        write_metadata(config.out, config, args.command)
    if args.strict and _flagged(result):
        print("ill-conditioned system flagged (--strict)", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankDeficiencyWarning)
            if args.command == "deriv":
                return _cmd_deriv(args)
            if args.command == "basis-check":
                return _cmd_basis_check(args)
            return _run(args, resolve_config(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, IndexError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
