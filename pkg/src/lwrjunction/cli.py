"""Command-line front end.

    lwrjunction theta    FILE            critical demand level and its breakdown
    lwrjunction flux     FILE            boundary fluxes
    lwrjunction riemann  FILE            full Riemann solution
    lwrjunction simulate FILE            CTM run: CSV trajectory (+ summary JSON)
    lwrjunction validate [FILE] --seed   oracle self-check, or validate a file

Exit codes: 0 success, 1 invalid input, 2 internal invariant violated.
"""
from __future__ import annotations

import argparse
import json
import sys
from io import StringIO
from pathlib import Path
from typing import Sequence

from . import io
from .ctm import RunResult, run
from .errors import InvariantError, ValidationError
from .junction_flux import JunctionSpec, critical_demand_level, flux
from .riemann import RiemannInput, solve
from .validation import run_suite

EXIT_OK, EXIT_INVALID, EXIT_INVARIANT = 0, 1, 2


def _junction_inputs(sc: io.ScenarioFile):
    """Junction, demands and supplies from any scenario with a single junction."""
    if sc.kind == "junction":
        case = sc.payload
        return case.junction, list(case.demands), list(case.supplies)
    if sc.kind == "riemann":
        inp: RiemannInput = sc.payload
        m = inp.m
        d = [float(fd.demand(k)) for fd, k in zip(inp.fds[:m], inp.k0[:m])]
        s = [float(fd.supply(k)) for fd, k in zip(inp.fds[m:], inp.k0[m:])]
        return inp.junction, d, s
    net = sc.payload
    if len(net.junctions) != 1:
        raise ValidationError(f"network has {len(net.junctions)} junctions; flux and theta need exactly one")
    # boundary cells of the initial state
    links = {link.id: link for link in net.links}
    jn = net.junctions[0]
    ups = [links[i] for i in jn.upstream]
    downs = [links[i] for i in jn.downstream]
    j = JunctionSpec([l.fd.capacity for l in ups], [l.fd.capacity for l in downs], jn.xi)
    return (j, [float(l.fd.demand(l.initial[-1])) for l in ups], [float(l.fd.supply(l.initial[0])) for l in downs])


def _need(sc: io.ScenarioFile, *kinds: str) -> None:
    if sc.kind not in kinds:
        raise ValidationError(f"expected a {' or '.join(kinds)} file, got kind {sc.kind!r}")


def cmd_theta(sc: io.ScenarioFile, args) -> str:
    j, d, s = _junction_inputs(sc)
    mu = [v / c for v, c in zip(d, j.up_capacity)]
    nu = [v / c for v, c in zip(s, j.down_capacity)]
    return io.dumps(critical_demand_level(j, mu, nu))


def cmd_flux(sc: io.ScenarioFile, args) -> str:
    j, d, s = _junction_inputs(sc)
    return io.dumps(flux(j, d, s))


def cmd_riemann(sc: io.ScenarioFile, args) -> str:
    _need(sc, "riemann")
    return io.dumps(solve(sc.payload))


def _simulate_outputs(result: RunResult, fmt: str) -> tuple[str, str]:
    summary = io.dumps(result.summary())
    if fmt == "json":
        return summary, ""
    buf = StringIO()
    io.write_csv(result.csv_rows(), buf)
    return buf.getvalue(), summary


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lwrjunction", description="Junction fluxes, Riemann solutions and CTM runs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, file_required=True):
        if file_required:
            p.add_argument("file", help="scenario JSON file")
        p.add_argument("--output", "-o", help="write the result here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default=None)
        return p

    common(sub.add_parser("theta", help="critical demand level of a junction"))
    common(sub.add_parser("flux", help="boundary fluxes of a junction"))
    common(sub.add_parser("riemann", help="solve the junction Riemann problem"))
    sim = common(sub.add_parser("simulate", help="run the cell transmission model"))
    sim.add_argument("--summary", help="summary JSON path for CSV runs (default: OUTPUT.summary.json or stderr)")
    val = common(sub.add_parser("validate", help="run the oracle suite, or check a scenario file"), file_required=False)
    val.add_argument("file", nargs="?", help="scenario file to validate instead of running the suite")
    val.add_argument("--seed", type=int, default=0, help="seed for the random instances")
    val.add_argument("--instances", type=int, default=100, help="random instances per check")
    val.add_argument("--grid", type=int, default=200, help="grid points per link for the stationary search")
    return parser


def _run(args) -> int:
    fmt = args.format
    if args.command == "validate":
        if args.file:
            sc = io.load_scenario(args.file)
            _emit(io.dumps({"valid": True, "kind": sc.kind, "errors": []}), args.output)
            return EXIT_OK
        report = run_suite(args.seed, args.instances, args.grid)
        _emit(io.dumps(report), args.output)
        return EXIT_OK if report["passed"] else EXIT_INVARIANT

    sc = io.load_scenario(args.file)
    if args.command == "simulate":
        _need(sc, "network")
        fmt = fmt or "csv"
        main_text, summary = _simulate_outputs(run(sc.payload), fmt)
        _emit(main_text, args.output)
        if summary:
            if args.summary:
                Path(args.summary).write_text(summary, encoding="utf-8")
            elif args.output:
                Path(args.output).with_suffix(".summary.json").write_text(summary, encoding="utf-8")
            else:
                sys.stderr.write(summary)
        return EXIT_OK
    if fmt == "csv":
        raise ValidationError(f"'{args.command}' only writes JSON")
    handler = {"theta": cmd_theta, "flux": cmd_flux, "riemann": cmd_riemann}[args.command]
    _emit(handler(sc, args), args.output)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except ValidationError as exc:
        if args.command == "validate" and getattr(args, "file", None):
            _emit(io.dumps({"valid": False, "errors": exc.errors}), args.output)
        sys.stderr.write(json.dumps({"error": "invalid input", "details": exc.errors}, indent=2) + "\n")
        return EXIT_INVALID
    except InvariantError as exc:
        sys.stderr.write(json.dumps({"error": "invariant violated", "details": [str(exc)]}, indent=2) + "\n")
        return EXIT_INVARIANT
    except OSError as exc:
        sys.stderr.write(json.dumps({"error": "io", "details": [str(exc)]}, indent=2) + "\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
