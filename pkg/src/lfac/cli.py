"""Command-line interface: ``lfac <subcommand> ...``.

Exit codes: 0 success, 1 computation error, 2 usage error, 3 input parse or
validation error, 4 problem infeasible, 5 iteration limit reached.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .cable_params import builtin_design, load_design
from .errors import CaseError, GeometryError, LfacError
from .network_model import load_case
from .opf_solver import (
    OpfProblem,
    SolverOptions,
    frequency_sweep,
    max_transfer_sweep,
    regime_breakpoints,
    solve_opf,
    sweep_csv,
    transfer_csv,
    variable_frequency_solve,
)
from .poly_fit import N_SAMPLES, OMEGA_MAX, OMEGA_MIN, fit_design, fit_report
from .sequence_reduction import cable_pi

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_ITERATION = 0, 1, 2, 3, 4, 5
OUT_ENV = "LFAC_OUT_DIR"
STATUS_EXIT = {"optimal": EXIT_OK, "infeasible": EXIT_INFEASIBLE, "iteration-limit": EXIT_ITERATION}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    out_dir: Path | None
    fmt: str
    workers: int
    options: SolverOptions


def parse_grid(text):
    """``start:stop:step`` in Hz (inclusive of stop) -> list of Hz values."""
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"grid must be start:stop:step, got {text!r}") from None
    if not step > 0:
        raise UsageError("grid step must be positive")
    if stop < start:
        raise UsageError("grid stop must not be below start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 9) for k in range(n)]


def _design(name_or_path, args):
    try:
        design = load_design(name_or_path) if Path(name_or_path).is_file() else builtin_design(name_or_path)
    except OSError as exc:
        raise CaseError(str(exc), name_or_path) from None
    if getattr(args, "length_km", None):
        design = design.with_length(args.length_km * 1000.0)
    if getattr(args, "temperature", None) is not None:
        design = design.with_temperature(args.temperature)
    return design


def _emit(cfg, name, text, stdout=True):
    if cfg.out_dir is not None:
        (cfg.out_dir / name).write_text(text)
    elif stdout:
        sys.stdout.write(text)


def _table(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_cable_params(args, cfg):
    design = _design(args.design, args)
    km = design.length / 1000.0
    rows, records = [], []
    for hz in args.freq_hz:
        pi = cable_pi(design, 2 * math.pi * hz)
        z, y = pi.z_series, pi.y_shunt
        rec = {
            "frequency_hz": hz,
            "r_ohm": z.real, "x_ohm": z.imag, "g_sh_s": y.real, "b_sh_s": y.imag,
            "r_ohm_per_km": z.real / km, "x_ohm_per_km": z.imag / km,
            "g_sh_s_per_km": y.real / km, "b_sh_s_per_km": y.imag / km,
        }
        records.append(rec)
        rows.append([f"{v:.10g}" for v in rec.values()])
    header = ["frequency_hz", "r_ohm", "x_ohm", "g_sh_s", "b_sh_s", "r_ohm_per_km", "x_ohm_per_km", "g_sh_s_per_km", "b_sh_s_per_km"]
    if cfg.fmt == "json":
        _emit(cfg, "cable_params.json", json.dumps(records, indent=2) + "\n")
    else:
        _emit(cfg, "cable_params.csv", _table(header, rows))
    return EXIT_OK


def cmd_fit(args, cfg):
    design = _design(args.design, args)
    model, samples = fit_design(design, args.omega_min, args.omega_max, args.n_samples, workers=cfg.workers)
    report = fit_report(model, samples)
    model_json = json.dumps(model.to_dict(), indent=2) + "\n"
    if cfg.out_dir is not None:
        (cfg.out_dir / "fit_model.json").write_text(model_json)
        (cfg.out_dir / "fit_report.csv").write_text(report.to_csv())
    elif cfg.fmt == "json":
        doc = {"model": model.to_dict(), "report": [r.__dict__ for r in report.rows]}
        sys.stdout.write(json.dumps(doc, indent=2) + "\n")
    else:
        sys.stdout.write(report.to_csv())
    return EXIT_OK


def _problem(args, cfg):
    net = load_case(args.case)
    if getattr(args, "freq_hz", None):
        net = net.with_frequency(2 * math.pi * args.freq_hz[0])
    return OpfProblem(net, cfg.options)


def cmd_solve(args, cfg):
    problem = _problem(args, cfg)
    if any(s.is_variable for s in problem.network.subnetworks):
        sol = variable_frequency_solve(problem)
    else:
        sol = solve_opf(problem)
    if cfg.out_dir is not None:
        (cfg.out_dir / "solution.json").write_text(sol.to_json())
        for name, text in sol.csv_tables().items():
            (cfg.out_dir / f"{name}.csv").write_text(text)
        (cfg.out_dir / "binding.txt").write_text(sol.binding_report())
    elif cfg.fmt == "json":
        sys.stdout.write(sol.to_json())
    else:
        hz = ";".join(f"{k}={v / (2 * math.pi):.6g}" for k, v in sol.subnetwork_omega.items())
        sys.stdout.write(_table(["status", "objective", "total_loss_pu", "frequencies_hz"], [[sol.status, f"{sol.objective:.10g}", f"{sol.total_loss:.10g}", hz]]))
    if not sol.ok:
        print(f"lfac: {sol.status}: {sol.message}", file=sys.stderr)
    return STATUS_EXIT.get(sol.status, EXIT_ERROR)


def cmd_sweep(args, cfg):
    problem = OpfProblem(load_case(args.case), cfg.options)
    hz = parse_grid(args.grid)
    rows = frequency_sweep(problem, [2 * math.pi * f for f in hz], workers=cfg.workers)
    _emit(cfg, "sweep.csv", sweep_csv(rows))
    return EXIT_OK


def cmd_max_transfer(args, cfg):
    design = _design(args.design, args)
    hz = args.freq_hz if args.freq_hz else parse_grid(args.grid)
    results = max_transfer_sweep(
        design,
        [2 * math.pi * f for f in hz],
        workers=cfg.workers,
        base_kv=args.base_kv,
        base_mva=args.base_mva,
        thermal_limit_mva=args.thermal_mva,
        options=cfg.options,
    )
    _emit(cfg, "max_transfer.csv", transfer_csv(results))
    bps = regime_breakpoints(results)
    _emit(cfg, "breakpoints.csv", _table(["frequency_hz", "regime_below", "regime_above"], [[f"{f:.4f}", a, b] for f, a, b in bps]), stdout=False)
    failed = [r for r in results if r.status != "optimal"]
    if failed and len(failed) == len(results):
        return STATUS_EXIT.get(failed[0].status, EXIT_ERROR)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="lfac", description="Frequency-dependent cable models and variable-frequency OPF.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help=f"output directory (default: ${OUT_ENV}, else stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--workers", type=int, default=1)
    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--tol", type=float, default=SolverOptions.tol, help="interior-point convergence tolerance")
    solver.add_argument("--max-iter", type=int, default=SolverOptions.max_iter)
    solver.add_argument("--starts", type=int, default=SolverOptions.starts, help="frequency starts for variable-frequency solves")
    design = argparse.ArgumentParser(add_help=False)
    design.add_argument("--design", required=True, help="design JSON file or built-in name (cable_230kv, cable_138kv)")
    design.add_argument("--length-km", type=float)
    design.add_argument("--temperature", type=float, help="operating temperature override (C)")

    sub = p.add_subparsers(dest="subcommand", required=True)
    s = sub.add_parser("cable-params", parents=[common, design], help="exact positive-sequence Pi parameters")
    s.add_argument("--freq-hz", type=float, nargs="*", default=[])
    s.set_defaults(func=cmd_cable_params)

    s = sub.add_parser("fit", parents=[common, design], help="fit polynomial frequency models")
    s.add_argument("--n-samples", type=int, default=N_SAMPLES)
    s.add_argument("--omega-min", type=float, default=OMEGA_MIN)
    s.add_argument("--omega-max", type=float, default=OMEGA_MAX)
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("solve", parents=[common, solver], help="solve the OPF of a case")
    s.add_argument("--case", required=True)
    s.add_argument("--freq-hz", type=float, nargs=1, help="pin variable-frequency subnetworks to this frequency")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("sweep", parents=[common, solver], help="fixed-frequency OPF sweep")
    s.add_argument("--case", required=True)
    s.add_argument("--grid", default="0.1:60:0.1", help="start:stop:step in Hz")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("max-transfer", parents=[common, solver, design], help="single-cable maximum transfer")
    s.add_argument("--grid", default="0:60:0.5", help="start:stop:step in Hz")
    s.add_argument("--freq-hz", type=float, nargs="*", default=[])
    s.add_argument("--base-kv", type=float, default=230.0)
    s.add_argument("--base-mva", type=float, default=100.0)
    s.add_argument("--thermal-mva", type=float)
    s.set_defaults(func=cmd_max_transfer)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        out = args.out or os.environ.get(OUT_ENV)
        out_dir = None
        if out:
            out_dir = Path(out)
            out_dir.mkdir(parents=True, exist_ok=True)
            if not os.access(out_dir, os.W_OK):
                raise UsageError(f"output directory {out_dir} is not writable")
        if args.workers < 1:
            raise UsageError("--workers must be at least 1")
        options = SolverOptions(
            tol=getattr(args, "tol", SolverOptions.tol),
            max_iter=getattr(args, "max_iter", SolverOptions.max_iter),
            starts=getattr(args, "starts", SolverOptions.starts),
        )
        cfg = RunConfig(args.subcommand, out_dir, args.format, args.workers, options)
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"lfac: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CaseError, GeometryError, json.JSONDecodeError, OSError) as exc:
        print(f"lfac: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (LfacError, ArithmeticError, ValueError) as exc:
        print(f"lfac: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
