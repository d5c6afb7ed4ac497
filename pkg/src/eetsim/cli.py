"""Command-line front end: run engines on a scenario, compare outputs, check RCA.

Exit codes: 0 success, 1 numerical failure (naming the engine), 2
configuration error.  Every error path prints a single machine-parsable line
to standard error.  The default output directory is taken from the
``EETSIM_OUTDIR`` environment variable when set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bessel import chain_bessel_populations
from .classical import initial_rst_mixed, initial_rst_pure, propagate_classical_rst
from .errors import EetsimError, ValidationError
from .integrate import TimeGrid
from .model import convert_energy, build_aggregate, rca_check
from .quantum import propagate_lindblad
from .scenarios import load_model, make_chain
from .stochastic import NoiseSpec, run_kubo_ensemble, run_sse_ensemble
from .timeseries import (
    TimeSeries,
    compare_series,
    read_timeseries,
    series_from_classical,
    series_from_ensemble,
    series_from_quantum,
    write_timeseries,
)

ENGINES = ("lindblad", "classical", "sse", "kubo", "bessel")
DEFAULT_SEED = 1234
DEFAULT_NTRAJ = 10_000


class _Parser(argparse.ArgumentParser):
    # Single-line errors, no usage dump, stable exit code 2.
    def error(self, message):
        raise _ConfigError(message)


class _ConfigError(Exception):
    pass


def _fail_config(msg: str) -> int:
    print(f"eetsim: error: {msg}", file=sys.stderr)
    return 2


def _fail_numeric(engine: str, exc: Exception) -> int:
    print(f"eetsim: error: engine={engine} {type(exc).__name__}: {exc}", file=sys.stderr)
    return 1


def _parse_chain(text: str):
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise _ConfigError("empty --chain specification")
    try:
        n_sites = int(parts[0])
    except ValueError:
        raise _ConfigError(f"--chain: first field must be the site count, got {parts[0]!r}")
    params = {"v": 1.0, "eps": 0.0, "gamma": 0.0, "start": 0}
    keys = {"v": "v", "eps": "eps", "epsilon": "eps", "gamma": "gamma", "start": "start"}
    for item in parts[1:]:
        if "=" not in item:
            raise _ConfigError(f"--chain: expected key=value, got {item!r}")
        key, _, value = item.partition("=")
        key = keys.get(key.strip().lower())
        if key is None:
            raise _ConfigError(f"--chain: unknown key {item.split('=')[0]!r}")
        try:
            params[key] = int(value) if key == "start" else float(value)
        except ValueError:
            raise _ConfigError(f"--chain: bad value in {item!r}")
    return n_sites, params


def _parse_grid(text: str, dt: float | None) -> TimeGrid:
    fields = text.split(":")
    if len(fields) != 3:
        raise _ConfigError(f"--grid: expected t_start:t_end:n_samples, got {text!r}")
    try:
        t0, t1, n = float(fields[0]), float(fields[1]), int(fields[2])
    except ValueError:
        raise _ConfigError(f"--grid: bad field in {text!r}")
    try:
        return TimeGrid(t0, t1, n, dt_integrate=dt)
    except ValidationError as exc:
        raise _ConfigError(f"--grid: {exc}")


def _build_scenario(args):
    """Returns (model, initial, chain_params or None)."""
    if bool(args.chain) == bool(args.model):
        raise _ConfigError("exactly one of --chain or --model is required")
    if args.chain:
        if args.shift:
            raise _ConfigError("--shift applies to model files only")
        n_sites, p = _parse_chain(args.chain)
        model, initial = make_chain(n_sites, p["v"], p["eps"], p["gamma"], p["start"])
        chain = {"v": p["v"], "start": p["start"], "n_sites": n_sites, "gamma": p["gamma"]}
    else:
        path = Path(args.model)
        with open(path) as fh:
            doc = json.load(fh)
        if args.shift:
            doc["shift"] = float(doc.get("shift", 0.0)) + args.shift
        model, initial = load_model(doc)
        chain = None
    if args.gamma is not None:
        if args.gamma < 0:
            raise _ConfigError("--gamma must be non-negative")
        value = convert_energy(args.gamma) if model.units == "wavenumber" else args.gamma
        model = build_aggregate(
            model.epsilon, model.coupling, np.full(model.n_sites, value), units=model.units
        )
        if chain is not None:
            chain["gamma"] = args.gamma
    return model, initial, chain


def _bessel_series(model, chain, grid) -> TimeSeries:
    if chain is None:
        raise _ConfigError("engine 'bessel' requires a --chain scenario")
    if chain["gamma"] != 0.0 or float(model.gamma.max()) != 0.0:
        raise _ConfigError("engine 'bessel' requires gamma=0")
    times = grid.times
    channels = {}
    for site in range(chain["n_sites"]):
        offset = site - chain["start"]
        channels[f"population:{site}"] = np.array(
            [chain_bessel_populations(chain["v"], offset, t) for t in times]
        )
    units = "ps" if model.units == "wavenumber" else "hbar/V"
    return TimeSeries(times=times.copy(), channels=channels, engine="bessel", units=units)


def _run_one_engine(engine, model, initial, grid, chain, args) -> TimeSeries:
    units = "ps" if model.units == "wavenumber" else "hbar/V"
    if engine == "lindblad":
        traj = propagate_lindblad(model, initial.rho, grid)
        return series_from_quantum(traj, units=units)
    if engine == "classical":
        rst0 = initial_rst_pure(initial.amplitudes) if initial.is_pure else initial_rst_mixed(initial.rho)
        traj = propagate_classical_rst(model, rst0, grid)
        return series_from_classical(traj, units=units)
    if engine in ("sse", "kubo"):
        if not initial.is_pure:
            raise _ConfigError(f"engine {engine!r} needs a pure initial state")
        noise = NoiseSpec(gamma=model.gamma, seed=args.seed)
        if engine == "sse":
            ens = run_sse_ensemble(model, initial.amplitudes, grid, noise, n_traj=args.ntraj)
            return series_from_ensemble(ens, "sse-ensemble", units=units)
        ens = run_kubo_ensemble(model, initial.amplitudes, grid, noise, n_traj=args.ntraj)
        return series_from_ensemble(ens, "kubo-ensemble", units=units, normalize=True)
    if engine == "bessel":
        return _bessel_series(model, chain, grid)
    raise _ConfigError(f"unknown engine {engine!r}; expected one of {', '.join(ENGINES)}")


def cmd_run(args) -> int:
    try:
        model, initial, chain = _build_scenario(args)
        grid = _parse_grid(args.grid, args.dt)
        engines = [e.strip() for e in args.engines.split(",") if e.strip()]
        if not engines:
            raise _ConfigError("--engines: need at least one engine")
        for engine in engines:
            if engine not in ENGINES:
                raise _ConfigError(f"unknown engine {engine!r}; expected one of {', '.join(ENGINES)}")
        if args.format not in ("csv", "json"):
            raise _ConfigError("--format must be csv or json")
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
    except _ConfigError as exc:
        return _fail_config(str(exc))
    except (json.JSONDecodeError, OSError, ValidationError, EetsimError) as exc:
        return _fail_config(str(exc))

    for engine in engines:
        try:
            series = _run_one_engine(engine, model, initial, grid, chain, args)
        except _ConfigError as exc:
            return _fail_config(str(exc))
        except EetsimError as exc:
            return _fail_numeric(engine, exc)
        destination = out_dir / f"{engine}.{args.format}"
        write_timeseries(series, args.format, destination)
        print(f"wrote {destination}")
    return 0


def cmd_compare(args) -> int:
    try:
        series_a = read_timeseries(args.file_a)
        series_b = read_timeseries(args.file_b)
    except (EetsimError, OSError) as exc:
        return _fail_config(str(exc))
    common = [name for name in series_a.channels if name in series_b.channels]
    ignored = sorted(set(series_a.channels).symmetric_difference(series_b.channels))
    series_a = TimeSeries(series_a.times, {k: series_a.channels[k] for k in common},
                          series_a.engine, series_a.units)
    series_b = TimeSeries(series_b.times, {k: series_b.channels[k] for k in common},
                          series_b.engine, series_b.units)
    try:
        report = compare_series(series_a, series_b)
    except EetsimError as exc:
        return _fail_config(str(exc))
    doc = report.to_dict()
    if ignored:
        doc["ignored_channels"] = ignored
    with open(args.report, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    print(f"overall max difference: {report.overall_max:.6e} (report: {args.report})")
    return 0


def cmd_rca(args) -> int:
    try:
        model, _, _ = _build_scenario(args)
    except _ConfigError as exc:
        return _fail_config(str(exc))
    except (json.JSONDecodeError, OSError, EetsimError) as exc:
        return _fail_config(str(exc))
    report = rca_check(model, threshold=args.threshold)
    print(report.summary())
    return 0 if report.verdict == "pass" else 1


def _add_scenario_arguments(parser):
    parser.add_argument("--chain", help="chain scenario: N,V=..,eps=..,gamma=..,start=..")
    parser.add_argument("--model", help="path of a JSON model file")
    parser.add_argument("--shift", type=float, default=0.0,
                        help="add to all site energies of a model file (file units)")
    parser.add_argument("--gamma", type=float, default=None,
                        help="override the dephasing rate (file units for model files)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eetsim", description=__doc__)
    parser.add_argument("--version", action="version", version=f"eetsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one or more engines on a scenario")
    _add_scenario_arguments(run)
    run.add_argument("--engines", required=True, help=f"comma-separated: {', '.join(ENGINES)}")
    run.add_argument("--grid", default="0:10:201", help="t_start:t_end:n_samples")
    run.add_argument("--dt", type=float, default=None, help="internal integration step")
    run.add_argument("--ntraj", type=int, default=DEFAULT_NTRAJ, help="ensemble size")
    run.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed for ensembles")
    run.add_argument("--format", default="csv", help="csv or json")
    run.add_argument("--out", default=os.environ.get("EETSIM_OUTDIR", "."),
                     help="output directory (default: $EETSIM_OUTDIR or .)")
    run.set_defaults(func=cmd_run)

    comp = sub.add_parser("compare", help="difference report for two series files")
    comp.add_argument("file_a")
    comp.add_argument("file_b")
    comp.add_argument("--report", default="diff_report.json", help="report destination (JSON)")
    comp.set_defaults(func=cmd_compare)

    rca = sub.add_parser("rca", help="weak-coupling diagnostic for a scenario")
    _add_scenario_arguments(rca)
    rca.add_argument("--threshold", type=float, default=0.1, help="pass threshold for the ratios")
    rca.set_defaults(func=cmd_rca)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _ConfigError as exc:
        return _fail_config(str(exc))
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
