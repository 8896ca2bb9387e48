"""Command-line front end.

    zrpfluid validate MODEL
    zrpfluid trace MODEL SITES
    zrpfluid absorb MODEL SITES
    zrpfluid fluid MODEL [--u U] [--grid N] [--regulator] [--out DIR]
    zrpfluid simulate EXPERIMENT [--seed S] [--workers K] [--out DIR]

Exit codes: 0 success, 2 bad input, 3 internal consistency failure,
4 convergence threshold missed in ``simulate``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .absorbing import bottleneck_set, is_r_absorbing, minimal_absorbing
from .errors import ConsistencyFailure, ModelError, NonZeroDiagonal, SingularSolve, UnknownSite
from .fluid import fluid_trajectory, regulator_path, simplex_point, verify_orp
from .markov import TOL, RateMatrix, net_flow, trace_rates, trace_rates_recursive
from .zrp import JumpRateFunction, convergence_experiment

EXIT_OK, EXIT_INPUT, EXIT_CONSISTENCY, EXIT_THRESHOLD = 0, 2, 3, 4


class CommandError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def fmt(x: float) -> str:
    return f"{x:.12g}"


def _round(obj):
    """Round every float to 12 significant digits for byte-stable JSON."""
    if isinstance(obj, float):
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.generic):
        return _round(obj.item())
    return obj


def dump(obj) -> str:
    return json.dumps(_round(obj), indent=2, sort_keys=False)


def _sorted_labels(r: RateMatrix, labels):
    return [s for s in r.sites if s in labels]


def load_document(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CommandError(f"{path}: {exc.strerror}", EXIT_INPUT) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CommandError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}", EXIT_INPUT) from None
    if not isinstance(doc, dict):
        raise CommandError(f"{path}: top level must be an object", EXIT_INPUT)
    return doc


def parse_model(doc: dict, where: str = "") -> RateMatrix:
    """Rate matrix from ``{"sites": [...], "rates": [[...]]}`` with located errors."""
    if "model" in doc and "rates" not in doc:
        return parse_model(doc["model"], where + "model.")
    try:
        return RateMatrix.from_dict(doc)
    except NonZeroDiagonal as exc:
        raise CommandError(f"NonZeroDiagonal at {where}sites[{exc.index}] ({exc.label!r})", EXIT_INPUT) from None
    except ModelError as exc:
        raise CommandError(f"{where}rates: {exc}", EXIT_INPUT) from None


def parse_sites(r: RateMatrix, text: str, what: str) -> list:
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise CommandError(f"{what}: empty site list", EXIT_INPUT)
    for k, s in enumerate(items):
        if s not in r.sites:
            raise CommandError(f"UnknownSite {s!r} at {what}[{k}]", EXIT_INPUT)
    return items


def parse_point(r: RateMatrix, value, tol: float, where: str) -> np.ndarray:
    if isinstance(value, str):
        try:
            value = [float(x) for x in value.split(",")]
        except ValueError:
            raise CommandError(f"{where}: expected comma-separated numbers", EXIT_INPUT) from None
    if isinstance(value, dict):
        u = np.zeros(r.n)
        for label, mass in value.items():
            try:
                u[r.index(label)] = mass
            except UnknownSite:
                raise CommandError(f"UnknownSite {label!r} at {where}", EXIT_INPUT) from None
        value = u
    try:
        return simplex_point(value, r.n, tol)
    except ModelError as exc:
        raise CommandError(f"{where}: {exc}", EXIT_INPUT) from None


def resolve_tol(args, doc: dict) -> float:
    if args.tol is not None:
        return args.tol
    return float(doc.get("tol", TOL))


def _save(args, name, text):
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / name).write_text(text)


def cmd_validate(args, out):
    doc = load_document(args.model)
    r = parse_model(doc)
    out.write(f"valid, {r.n} sites, irreducible\n")
    return EXIT_OK


def cmd_trace(args, out):
    doc = load_document(args.model)
    r = parse_model(doc)
    tol = resolve_tol(args, doc)
    sites = parse_sites(r, args.sites, "subset")
    direct = trace_rates(r, sites)
    recursive = trace_rates_recursive(r, sites)
    gap = float(np.abs(direct.rates - recursive.rates).max())
    flow = net_flow(r, sites)
    report = {
        "tol": tol,
        "subset": list(direct.sites),
        "trace": direct.to_dict(),
        "flow": flow.as_dict(),
        "implementation_gap": gap,
    }
    _save(args, "trace.json", dump(report) + "\n")
    out.write(dump(report) + "\n")
    if gap > tol * r.scale:
        raise CommandError(f"ConsistencyFailure: trace implementations differ by {gap:.3e}", EXIT_CONSISTENCY)
    return EXIT_OK


def cmd_absorb(args, out):
    doc = load_document(args.model)
    r = parse_model(doc)
    tol = resolve_tol(args, doc)
    sites = parse_sites(r, args.sites, "support")
    trace = minimal_absorbing(r, sites, tol)
    report = {
        "tol": tol,
        "input": _sorted_labels(r, trace.input),
        "iterations": [
            {"set": _sorted_labels(r, a), "removed": _sorted_labels(r, o)} for a, o in trace.iterations
        ],
        "result": _sorted_labels(r, trace.result),
        "input_report": _absorbing_dict(r, is_r_absorbing(r, sites, tol)),
        "bottlenecks": _sorted_labels(r, bottleneck_set(r, tol)),
    }
    _save(args, "absorb.json", dump(report) + "\n")
    out.write(dump(report) + "\n")
    return EXIT_OK


def _absorbing_dict(r, rep):
    return {"subset": _sorted_labels(r, rep.subset), "absorbing": rep.absorbing, "witnesses": rep.witnesses}


def _trajectory_csv(r, path, regulator, grid, tol) -> str:
    horizon = 2 * path.final_time if path.final_time > 0 else 1.0
    ts = np.linspace(0.0, horizon, grid + 1)
    buf = io.StringIO()
    buf.write(f"# zrpfluid fluid tol={tol!r}\n")
    w = csv.writer(buf, lineterminator="\n")
    header = ["t"] + list(r.sites)
    if regulator is not None:
        header += [f"rho_{s}" for s in r.sites]
    w.writerow(header)
    for t in ts:
        row = [fmt(t)] + [fmt(x) for x in path(t)]
        if regulator is not None:
            row += [fmt(x) for x in regulator(t)]
        w.writerow(row)
    return buf.getvalue()


def cmd_fluid(args, out):
    doc = load_document(args.model)
    r = parse_model(doc)
    tol = resolve_tol(args, doc)
    if args.u is not None:
        u = parse_point(r, args.u, tol, "--u")
    elif "u" in doc:
        u = parse_point(r, doc["u"], tol, "u")
    else:
        raise CommandError("no initial point: pass --u or add 'u' to the model", EXIT_INPUT)
    path = fluid_trajectory(r, u, tol)
    reg = regulator_path(r, path, tol)
    orp = verify_orp(path, reg, r, u, tol)
    report = {
        "tol": tol,
        "sites": list(r.sites),
        "segments": path.terminal + 1,
        "breakpoints": path.breakpoints(),
        "orp": orp.as_dict(),
    }
    if args.regulator:
        report["regulator_slopes"] = [dict(zip(r.sites, s.tolist())) for s in reg.slopes]
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "trajectory.csv").write_text(
            _trajectory_csv(r, path, reg if args.regulator else None, args.grid, tol)
        )
        (outdir / "breakpoints.json").write_text(dump(report) + "\n")
    out.write(dump(report) + "\n")
    if not orp.passed:
        raise CommandError("ConsistencyFailure: " + "; ".join(orp.violations), EXIT_CONSISTENCY)
    return EXIT_OK


def cmd_simulate(args, out):
    doc = load_document(args.experiment)
    r = parse_model(doc)
    tol = resolve_tol(args, doc)
    try:
        g = JumpRateFunction.from_dict(doc.get("g"))
    except ModelError as exc:
        raise CommandError(f"g: {exc}", EXIT_INPUT) from None
    if "u" not in doc:
        raise CommandError("experiment: missing key 'u'", EXIT_INPUT)
    u = parse_point(r, doc["u"], tol, "u")
    try:
        n_list = [int(n) for n in doc.get("N", [100, 1000, 10000])]
        horizon = float(doc.get("T", 2.0))
        trials = int(doc.get("trials", 50))
    except (TypeError, ValueError) as exc:
        raise CommandError(f"experiment: {exc}", EXIT_INPUT) from None
    if any(n < 1 for n in n_list) or horizon <= 0 or trials < 1:
        raise CommandError("experiment: N entries, T and trials must be positive", EXIT_INPUT)
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    threshold = doc.get("threshold")
    result = convergence_experiment(r, g, u, n_list, horizon, trials, seed, workers=args.workers)
    summary = {
        "tol": tol,
        "seed": seed,
        "g": g.to_dict(),
        "T": horizon,
        "summary": result.summary(),
        "strictly_decreasing": result.strictly_decreasing(),
        "threshold": threshold,
    }
    final_ok = threshold is None or result.summary()[-1]["median"] <= float(threshold)
    summary["passed"] = bool(result.strictly_decreasing() and final_ok)
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        buf = io.StringIO()
        buf.write(f"# zrpfluid simulate tol={tol!r} seed={seed}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "trial", "sup_distance"])
        for n, k, d in result.rows:
            w.writerow([n, k, fmt(d)])
        (outdir / "results.csv").write_text(buf.getvalue())
        (outdir / "summary.json").write_text(dump(summary) + "\n")
    out.write(dump(summary) + "\n")
    if not summary["passed"]:
        raise CommandError("convergence threshold missed", EXIT_THRESHOLD)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help=f"classification tolerance (default {TOL})")
    common.add_argument("--out", default=None, help="directory for CSV/JSON output files")

    parser = argparse.ArgumentParser(prog="zrpfluid", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check a rate-matrix document")
    p.add_argument("model")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("trace", parents=[common], help="trace rates and net flow on a subset")
    p.add_argument("model")
    p.add_argument("sites", help="comma-separated site labels")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("absorb", parents=[common], help="minimal absorbing closure and bottlenecks")
    p.add_argument("model")
    p.add_argument("sites", help="comma-separated site labels")
    p.set_defaults(func=cmd_absorb)

    p = sub.add_parser("fluid", parents=[common], help="fluid trajectory, regulator and reflection check")
    p.add_argument("model")
    p.add_argument("--u", default=None, help="initial point, comma-separated in site order")
    p.add_argument("--grid", type=int, default=200, help="CSV sampling intervals")
    p.add_argument("--regulator", action="store_true", help="include cumulative regulator columns")
    p.set_defaults(func=cmd_fluid)

    p = sub.add_parser("simulate", parents=[common], help="simulation vs fluid-limit convergence run")
    p.add_argument("experiment")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except CommandError as exc:
        err.write(f"error: {exc}\n")
        return exc.code
    except ModelError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INPUT
    except (ConsistencyFailure, SingularSolve) as exc:
        err.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_CONSISTENCY


if __name__ == "__main__":
    sys.exit(main())
