"""Command-line front end.

    qfpkit metrics  --config run.json
    qfpkit sweep    --config run.json --format csv --out sweep.csv
    qfpkit optimize --config run.json
    qfpkit probe    --config run.json --seed 7

Exit codes: 0 success, 2 configuration error, 3 numeric or degenerate error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config, parse_config
from .core import ModulatorSpec, ShaperSpec, SpecificationError, build_transfer
from .design import BracketError, grid, optimize_hadamard, sweep_alpha, sweep_channels, sweep_theta
from .metrics import HADAMARD, MetricError, fidelity, gate_metrics, gauge_fix, splitter_ratios
from .probe import ProbeConfig, ReconstructionError, default_phase_grid, reconstruct, simulate
from .specfun import BesselDomainError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

RATIO_COLUMNS = ("R_01", "R_10", "T_00", "T_11")
METRIC_COLUMNS = ("F", "P", "P_tilde", "eta")


def quantize(x: float, digits: int) -> float:
    """Truncate toward zero at ``digits`` decimals, snapping values within
    1e-6 of a unit in the last place (floating-point noise) to that grid point.

    Truncation keeps a fidelity of 0.99999990 from printing as 1.000000.
    """
    y = x * 10.0 ** digits
    r = round(y)
    q = r if abs(y - r) < 1e-6 else math.trunc(y)
    return q / 10.0 ** digits + 0.0


def _round(obj, digits):
    if isinstance(obj, (float, np.floating)):
        return quantize(float(obj), digits)
    if isinstance(obj, dict):
        return {k: _round(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v, digits) for v in obj]
    return obj


def _complex_pairs(M):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M)]


def _target(cfg: RunConfig):
    return HADAMARD if cfg.task.target == "hadamard" else np.eye(cfg.task.n_inputs)


def device_specs(cfg: RunConfig):
    d = cfg.device
    if d.phases is not None:
        shaper = ShaperSpec(d.B, tuple(d.phases), tuple(d.amplitudes) if d.amplitudes else None,
                            d.bin_spacing_ghz)
    else:
        step = ShaperSpec.step(d.B, d.alpha, d.bin_spacing_ghz)
        shaper = ShaperSpec(d.B, step.phases, tuple(d.amplitudes) if d.amplitudes else None,
                            d.bin_spacing_ghz)
    return ModulatorSpec(d.theta1, d.sign1), shaper, ModulatorSpec(d.theta2, d.sign2)


def device_transfer(cfg: RunConfig):
    return build_transfer(*device_specs(cfg), cfg.task.n_inputs, cfg.numerics.tail_tol)


def _require_canonical(cfg: RunConfig, command: str) -> None:
    d = cfg.device
    if d.phases is not None or d.amplitudes is not None or d.theta1 != d.theta2 \
            or (d.sign1, d.sign2) != (-1, 1):
        raise ConfigError("device", f"{command} works on the canonical family "
                                    "(step phases, unit amplitudes, theta1 = theta2, signs -1/+1)")


def cmd_metrics(cfg: RunConfig) -> dict:
    v = device_transfer(cfg)
    m = gate_metrics(v, _target(cfg))
    report = {
        "command": "metrics",
        "config": cfg.to_dict(),
        "window": [v.m_min, v.m_max],
        "metrics": m.as_dict(),
        "W": _complex_pairs(m.W),
    }
    if cfg.task.n_inputs == 2:
        report["ratios"] = splitter_ratios(m.W).as_dict()
    return report


def sweep_values(cfg: RunConfig) -> list:
    s = cfg.task.sweep
    if s.values is not None:
        values = list(s.values)
    elif None not in (s.start, s.stop, s.step):
        values = grid(s.start, s.stop, s.step)
        if s.axis == "B":
            values = [int(round(v)) for v in values]
    else:
        raise ConfigError("task.sweep", "give either values or start/stop/step")
    if not values:
        raise ConfigError("task.sweep.values", "sweep axis is empty")
    return values


def cmd_sweep(cfg: RunConfig, workers: int = 1) -> dict:
    _require_canonical(cfg, "sweep")
    d, s = cfg.device, cfg.task.sweep
    values = sweep_values(cfg)
    n, tol = cfg.task.n_inputs, cfg.numerics.tail_tol
    try:
        if s.axis == "B":
            res = sweep_channels(d.alpha, d.theta1, values, n, tol, workers)
        elif s.axis == "alpha":
            res = sweep_alpha(d.B, d.theta1, values, n, tol, workers)
        else:
            res = sweep_theta(d.B, d.alpha, values, n, tol, workers)
    except (ValueError, SpecificationError) as exc:
        raise ConfigError(f"task.sweep.{'values' if s.values is not None else 'start'}",
                          str(exc)) from exc
    return {"command": "sweep", "config": cfg.to_dict(), "axis": s.axis,
            "fixed": res.fixed_params, "rows": res.rows()}


def sweep_csv(report: dict, digits: int) -> str:
    buf = io.StringIO()
    axis = report["axis"]
    fixed = " ".join(f"{k}={_fmt(v, digits)}" for k, v in report["fixed"].items())
    buf.write(f"# axis={axis} {fixed}\n")
    cols = [axis, *METRIC_COLUMNS, *(c for c in RATIO_COLUMNS if report["rows"] and c in report["rows"][0])]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in report["rows"]:
        w.writerow([_fmt(row[c], digits) for c in cols])
    return buf.getvalue()


def metrics_csv(report: dict, digits: int) -> str:
    buf = io.StringIO()
    cols = list(METRIC_COLUMNS) + [c for c in RATIO_COLUMNS if "ratios" in report]
    vals = {**report["metrics"], **report.get("ratios", {})}
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    w.writerow([_fmt(vals[c], digits) for c in cols])
    return buf.getvalue()


def _fmt(v, digits):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{quantize(float(v), digits):.{digits}f}"


def cmd_optimize(cfg: RunConfig) -> dict:
    d, o = cfg.device, cfg.task.optimize
    if cfg.task.n_inputs != 2:
        raise ConfigError("task.n_inputs", "optimize works on 2x2 gates")
    rep = optimize_hadamard(d.B, d.alpha, tuple(o.bracket), o.objective, _target(cfg),
                            tail_tol=cfg.numerics.tail_tol)
    return {"command": "optimize", "config": cfg.to_dict(), **rep.as_dict()}


def probe_config(cfg: RunConfig) -> ProbeConfig:
    p = cfg.probe
    return ProbeConfig(replicates=p.replicates, loss=p.loss, sigma=p.sigma,
                       sigma_common=p.sigma_common, phase_grid=default_phase_grid(p.phase_points),
                       phi_i=p.phi_i, rng_seed=p.seed)


def cmd_probe(cfg: RunConfig) -> dict:
    if cfg.task.n_inputs != 2:
        raise ConfigError("task.n_inputs", "probing needs n_inputs = 2")
    v = device_transfer(cfg)
    ds = simulate(v, probe_config(cfg))
    rec = reconstruct(ds, _target(cfg))
    m = gate_metrics(v, _target(cfg))
    direct = {"F": fidelity(gauge_fix(m.W), _target(cfg)), "P_tilde": m.modified_success}
    return {"command": "probe", "config": cfg.to_dict(), "reconstruction": rec.as_dict(),
            "direct": direct, "dataset": ds.to_dict()}


COMMANDS = {"metrics": cmd_metrics, "sweep": cmd_sweep, "optimize": cmd_optimize,
            "probe": cmd_probe}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qfpkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run configuration (defaults used when omitted)")
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--format", choices=("json", "csv"))
        sp.add_argument("--seed", type=int, help="override probe.seed")
        sp.add_argument("--threads", type=int, default=1, help="sweep worker threads")
    return parser


def _render(report: dict, fmt: str, digits: int) -> str:
    if fmt == "csv":
        if report["command"] == "sweep":
            return sweep_csv(report, digits)
        if report["command"] == "metrics":
            return metrics_csv(report, digits)
        raise ConfigError("output.format", f"csv is not available for {report['command']}")
    # config echo and raw measurements stay at full precision
    exact = {k: report[k] for k in ("config", "dataset") if k in report}
    payload = _round({k: v for k, v in report.items() if k not in exact}, digits)
    payload.update(exact)
    return json.dumps(payload, indent=2) + "\n"


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else parse_config({})
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed", "must be >= 0")
            cfg.probe.seed = args.seed
        if args.format:
            cfg.output.format = args.format
        if args.out:
            cfg.output.path = args.out
        if args.threads < 1:
            raise ConfigError("--threads", "must be >= 1")
        if args.command == "sweep":
            report = cmd_sweep(cfg, args.threads)
        else:
            report = COMMANDS[args.command](cfg)
        text = _render(report, cfg.output.format, cfg.output.precision)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BracketError, ReconstructionError, MetricError, BesselDomainError,
            SpecificationError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if cfg.output.path:
        with open(cfg.output.path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main() -> None:
    sys.exit(run())
