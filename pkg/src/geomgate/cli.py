"""Command line entry point: ``geomgate <command> [options]``.

Commands
--------
couplings        effective couplings, mode drives, mode detunings, regime ratios
gate             diagonal gate, entangling measure, residual displacements, photon numbers
closure          earliest time at which every mode returns to vacuum
validate         full-Hamiltonian integration compared against the effective gate
sweep            grid over config keys (``--axis key=start:stop:count``, repeatable)
reproduce-paper  published example parameters versus the published gate

Exit codes: 0 success, 1 config/validation error, 2 numeric failure,
3 reproduce-paper criterion failure.  ``GEOMGATE_THREADS`` caps the worker
pool used for sweep points and validation basis states.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import fullsim
from .config import ConfigError, RunConfig, SweepAxis, SweepSpec, encode_number, load_config
from .errors import (
    ClosureSearchError,
    ConvergenceError,
    GeomGateError,
    ParameterError,
    SingularityError,
)
from .gatephase import (
    PAPER_MAX_PHOTONS,
    build_gate,
    closure_residual,
    find_closure,
    phases_at,
    photon_occupation,
    wrap_phase,
)
from .model import BASES, chi_table, derive_couplings, eta_values, regime_report

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2
EXIT_CRITERIA = 3

PAPER_TIME_US = 0.3448
PAPER_PHASES = {"00": 0.1248, "01": 1.056, "10": 1.056, "11": math.pi}
PAPER_PHASE_TOL = 0.01

SWEEP_COLUMNS = ["phase_00_rad", "phase_01_rad", "phase_10_rad", "phase_11_rad",
                 "entangling_measure_rad", "max_residual", "max_photons", "error"]


def worker_count():
    raw = os.environ.get("GEOMGATE_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"GEOMGATE_THREADS must be an integer, got {raw!r}") from None


def _clean(obj):
    """Replace non-finite floats by null and numpy scalars by Python ones."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return _clean(encode_number(obj))
    return obj


# -- documents ---------------------------------------------------------------

def couplings_document(cfg: RunConfig):
    params = cfg.params()
    lam = derive_couplings(params)
    chi = chi_table(lam)
    eta = eta_values(params)
    return _clean({
        "command": "couplings",
        "config": cfg.resolved(),
        "lambda_mhz": {k: encode_number(v) for k, v in lam.as_dict().items()},
        "chi_mhz": {b.label: [encode_number(c) for c in chi[b]] for b in BASES},
        "eta_mhz": list(eta),
        "regime": regime_report(params).as_dict(),
    })


def gate_document(cfg: RunConfig):
    params = cfg.params()
    gate = build_gate(params, cfg.time_us, cfg.entangle_tol)
    phases = phases_at(params, cfg.time_us)
    t_span = cfg.time_us if cfg.time_us > 0 else cfg.t_max_us
    return _clean({
        "command": "gate",
        "config": cfg.resolved(),
        "gate": gate.as_dict(),
        "phase_decomposition": phases.as_dict(),
        "photon_occupation": photon_occupation(params, t_span).as_dict(),
    })


def closure_document(cfg: RunConfig):
    params = cfg.params()
    eta = eta_values(params)
    sol = find_closure(eta, cfg.t_max_us, cfg.closure_tol, params)
    gate = build_gate(params, sol.T, cfg.entangle_tol)
    return _clean({
        "command": "closure",
        "config": cfg.resolved(),
        "eta_mhz": list(eta),
        "closure": sol.as_dict(),
        "gate_at_closure": gate.as_dict(),
        "phase_decomposition": phases_at(params, sol.T).as_dict(),
    })


def validate_document(cfg: RunConfig, scan_delta=False, workers=1):
    params = cfg.params()
    config = fullsim.FockConfig(cfg.fock_cutoff)
    report = fullsim.validate_against_effective(params, cfg.time_us, config, cfg.integrator_accuracy,
                                                workers=workers)
    doc = {"command": "validate", "config": cfg.resolved(), "validation": report.as_dict()}
    errors = list(report.errors)
    if scan_delta:
        scan = []
        for s, rep in fullsim.delta_scaling_scan(params, cfg.time_us, (1, 2, 4), config,
                                                 cfg.integrator_accuracy, workers):
            scan.append({"scale": s, "max_phase_error_rad": rep.max_phase_error,
                         "max_relative_phase_error": rep.max_relative_phase_error,
                         "max_leakage": rep.max_leakage, "errors": rep.errors})
            errors += rep.errors
        errs = [row["max_phase_error_rad"] for row in scan]
        doc["delta_scan"] = scan
        doc["delta_scan_monotone"] = all(b < a for a, b in zip(errs, errs[1:]))
    return _clean(doc), bool(errors)


def _sweep_point(cfg, spec, point):
    row = dict(zip(spec.names, point))
    try:
        c = cfg
        for name, value in row.items():
            c = c.with_value(name, value)
        params = c.params()
        gate = build_gate(params, c.time_us, c.entangle_tol)
        chi, eta = chi_table(derive_couplings(params)), eta_values(params)
        span = c.time_us if c.time_us > 0 else c.t_max_us
        row.update({
            **{f"phase_{b.label}_rad": float(p) for b, p in zip(BASES, gate.phases)},
            "entangling_measure_rad": gate.gamma,
            "max_residual": closure_residual(chi, eta, c.time_us),
            "max_photons": photon_occupation(params, span).overall_max,
            "error": "",
        })
    except (GeomGateError, ValueError) as exc:
        row.update({k: math.nan for k in SWEEP_COLUMNS[:-1]})
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def sweep_document(cfg: RunConfig, spec: SweepSpec, workers=1):
    points = list(spec.points())
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda p: _sweep_point(cfg, spec, p), points))
    else:
        rows = [_sweep_point(cfg, spec, p) for p in points]
    return _clean({
        "command": "sweep",
        "config": cfg.resolved(),
        "axes": [{"name": a.name, "start": a.start, "stop": a.stop, "count": a.count}
                 for a in spec.axes],
        "columns": spec.names + SWEEP_COLUMNS,
        "rows": rows,
    })


def reproduce_document():
    cfg = RunConfig()
    params = cfg.params()
    gate = build_gate(params, PAPER_TIME_US)
    occ = photon_occupation(params, PAPER_TIME_US)
    criteria = []
    for b, p in zip(BASES, gate.phases):
        published = PAPER_PHASES[b.label]
        dist = abs(float(wrap_phase(p - published)))
        criteria.append({"name": f"phase_{b.label}_rad", "computed": float(p), "published": published,
                         "tolerance": PAPER_PHASE_TOL, "passed": dist <= PAPER_PHASE_TOL})
    published_gamma = PAPER_PHASES["00"] + PAPER_PHASES["11"] - PAPER_PHASES["01"] - PAPER_PHASES["10"]
    gamma_tol = 4 * PAPER_PHASE_TOL
    criteria.append({
        "name": "entangling_measure_rad", "computed": gate.gamma, "published": published_gamma,
        "tolerance": gamma_tol,
        "passed": bool(gate.entangling) and abs(gate.gamma - published_gamma) <= gamma_tol,
    })
    criteria.append({
        "name": "max_photons (informational)", "computed": occ.overall_max,
        "published": PAPER_MAX_PHOTONS, "tolerance": None, "passed": None,
    })
    passed = all(c["passed"] for c in criteria if c["passed"] is not None)
    chi, eta = chi_table(derive_couplings(params)), eta_values(params)
    return _clean({
        "command": "reproduce-paper",
        "parameters": cfg.resolved(),
        "time_us": PAPER_TIME_US,
        "criteria": criteria,
        "passed": passed,
        "gate": gate.as_dict(),
        "closure_residual": closure_residual(chi, eta, PAPER_TIME_US),
        "photon_occupation": occ.as_dict(),
    })


# -- output ------------------------------------------------------------------

def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if value is None:
        return ""
    return str(value)


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def to_csv(doc):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if doc.get("command") == "sweep":
        writer.writerow(doc["columns"])
        for row in doc["rows"]:
            writer.writerow([_fmt(row.get(c)) for c in doc["columns"]])
    else:
        writer.writerow(["key", "value"])
        for key, value in _flatten(doc):
            writer.writerow([key, _fmt(value)])
    return buf.getvalue()


def to_json(doc):
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def reproduce_table(doc):
    lines = [f"published example, t = {doc['time_us']} us", ""]
    lines.append(f"{'quantity':<30}{'computed':>14}{'published':>14}{'tol':>8}  result")
    for c in doc["criteria"]:
        tol = "" if c["tolerance"] is None else f"{c['tolerance']:g}"
        result = {True: "PASS", False: "FAIL", None: "info"}[c["passed"]]
        lines.append(f"{c['name']:<30}{c['computed']:>14.6f}{c['published']:>14.6f}{tol:>8}  {result}")
    lines += ["", f"closure residual at t: {doc['closure_residual']:.4g}",
              "overall: " + ("PASS" if doc["passed"] else "FAIL")]
    return "\n".join(lines) + "\n"


# -- entry point ---------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key/value config file (JSON or key = value lines)")
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="format", action="store_const", const="json")
    fmt.add_argument("--csv", dest="format", action="store_const", const="csv")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--quiet", action="store_true", help="no stdout; exit code only")

    parser = argparse.ArgumentParser(prog="geomgate", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("couplings", parents=[common], help="effective couplings and regime report")
    sub.add_parser("gate", parents=[common], help="diagonal gate at time_us")
    sub.add_parser("closure", parents=[common], help="loop-closure search up to t_max_us")
    val = sub.add_parser("validate", parents=[common], help="full-Hamiltonian comparison")
    val.add_argument("--scan-delta", action="store_true", help="repeat with Delta0, Delta1 x 1, 2, 4")
    sw = sub.add_parser("sweep", parents=[common], help="parameter grid")
    sw.add_argument("--axis", action="append", required=True, metavar="KEY=START:STOP:COUNT")
    sub.add_parser("reproduce-paper", parents=[common], help="published example vs computed")
    return parser


def _emit(text, args, cfg):
    path = args.out or (cfg.output_path if cfg is not None else None)
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    if not args.quiet and not path:
        sys.stdout.write(text)


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    cfg = None
    if args.command != "reproduce-paper":
        cfg = load_config(args.config) if args.config else RunConfig()
    status = EXIT_OK

    if args.command == "couplings":
        doc = couplings_document(cfg)
    elif args.command == "gate":
        doc = gate_document(cfg)
    elif args.command == "closure":
        doc = closure_document(cfg)
    elif args.command == "validate":
        doc, failed = validate_document(cfg, args.scan_delta, worker_count())
        if failed:
            status = EXIT_NUMERIC
    elif args.command == "sweep":
        spec = SweepSpec(tuple(SweepAxis.parse(a) for a in args.axis))
        doc = sweep_document(cfg, spec, worker_count())
    else:
        doc = reproduce_document()
        if not doc["passed"]:
            status = EXIT_CRITERIA
        if args.format is None:
            _emit(reproduce_table(doc), args, None)
            return status

    fmt = args.format or (cfg.output_format if cfg is not None else "json")
    _emit(to_csv(doc) if fmt == "csv" else to_json(doc), args, cfg)
    return status


def main(argv=None):
    try:
        return run(argv)
    except (SingularityError, ConvergenceError) as exc:
        print(f"geomgate: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ParameterError, ClosureSearchError) as exc:
        print(f"geomgate: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
