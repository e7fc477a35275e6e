"""Command-line front end: ``crnli <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import catalog as cat
from .core import CRNetwork, ModelError, ModelParameters, SystemState, residual
from .dynamics import IntegratorOptions, StepSizeUnderflow, default_initial_state, integrate
from .fixed_points import SupportPattern, enumerate_fixed_points, try_support
from .robustness import SweepSpec, sweep
from .stability import (branch_cycle_fixed_point, check_branch_cycle_polynomial,
                        check_five_node_polynomial, five_node_fixed_point, jacobian_at,
                        spectrum, verdict)

OUTPUT_ENV = "CRNLI_OUTPUT_DIR"

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_MODEL = 4
EXIT_NUMERIC = 5

EPILOG = f"""\
exit codes:
  {EXIT_OK}  success
  {EXIT_INTERNAL}  unexpected internal error
  {EXIT_USAGE}  bad command-line usage
  {EXIT_INPUT}  input file missing or unparsable
  {EXIT_MODEL}  invalid network, parameters, state or support
  {EXIT_NUMERIC}  computation failed (no fixed point, undefined Jacobian, integrator failure)

Errors are written to stderr as one JSON object {{"error", "message", "exit_code"}}.
Without --output, results go to ${OUTPUT_ENV}/<default name> when that variable
is set and to stdout otherwise. Node labels are 1-based.
"""


class CLIError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CLIError(EXIT_USAGE, "usage", f"{self.prog}: {message}")


# --------------------------------------------------------------------------
# input helpers

def _read_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise CLIError(EXIT_INPUT, "input", f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise CLIError(EXIT_INPUT, "input", f"{path} is not valid JSON: {exc}") from exc


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise CLIError(EXIT_USAGE, "usage", f"expected a comma list of numbers, got {text!r}") from exc


def _labels(text: str) -> list:
    text = text.strip()
    if not text:
        return []
    try:
        return [int(v) for v in text.split(",")]
    except ValueError as exc:
        raise CLIError(EXIT_USAGE, "usage", f"expected a comma list of node labels, got {text!r}") from exc


def load_network(args) -> CRNetwork:
    if args.network and args.network_file:
        raise CLIError(EXIT_USAGE, "usage", "give exactly one of --network and --network-file")
    if args.network:
        try:
            return cat.get_network(args.network)
        except KeyError as exc:
            raise CLIError(EXIT_MODEL, "model", str(exc.args[0])) from exc
    if args.network_file:
        return CRNetwork.from_dict(_read_json(args.network_file))
    raise CLIError(EXIT_USAGE, "usage", "a network is required (--network or --network-file)")


def load_params(args) -> ModelParameters:
    d = _read_json(args.params) if args.params else {}
    if args.f is not None:
        d["f"] = list(_floats(args.f))
    for key in ("p", "c", "b", "alpha", "beta"):
        v = getattr(args, key)
        if v is not None:
            d[key] = v
    if "f" not in d:
        raise CLIError(EXIT_USAGE, "usage", "replication rates are required (--params or --f)")
    d.setdefault("alpha", 2.0 / 3.0)
    d.setdefault("beta", 4.0 / 9.0)
    return ModelParameters.from_dict(d)


def parse_support(tokens) -> SupportPattern:
    """``["I=1,3", "J=2,3"]`` to a support pattern."""
    parts = {}
    for tok in tokens:
        key, sep, val = tok.partition("=")
        if not sep or key.strip().upper() not in ("I", "J"):
            raise CLIError(EXIT_USAGE, "usage", f"support token must look like I=1,3 or J=2, got {tok!r}")
        parts[key.strip().upper()] = _labels(val)
    if set(parts) != {"I", "J"}:
        raise CLIError(EXIT_USAGE, "usage", "support needs both I=... and J=...")
    return SupportPattern.from_labels(parts["I"], parts["J"])


# --------------------------------------------------------------------------
# output helpers

def atomic_write(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(args, text: str, default_name: str):
    out = args.output
    if out is None and os.environ.get(OUTPUT_ENV):
        out = Path(os.environ[OUTPUT_ENV]) / default_name
    if out is None or str(out) == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        atomic_write(Path(out), text if text.endswith("\n") else text + "\n")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False)


# --------------------------------------------------------------------------
# subcommands

def cmd_simulate(args):
    net = load_network(args)
    prm = load_params(args)
    if args.initial:
        init = SystemState.from_dict(_read_json(args.initial))
    else:
        init = default_initial_state(net)
    opts = IntegratorOptions(rtol=args.rtol, atol=args.atol)
    try:
        traj = integrate(init, net, prm, t_end=args.t_end, options=opts)
    except StepSizeUnderflow as exc:
        raise CLIError(EXIT_NUMERIC, "numeric", str(exc)) from exc
    emit(args, traj.to_csv(stride=args.stride), "trajectory.csv")
    if traj.terminal_reason not in ("t_end", "converged"):
        print(json.dumps({"warning": "trajectory stopped early", "reason": traj.terminal_reason,
                          "t": float(traj.times[-1])}), file=sys.stderr)


def _stability_entry(state, net, prm) -> dict:
    try:
        rep = verdict(spectrum(jacobian_at(state, net, prm)))
    except ModelError as exc:
        return {"verdict": "undefined", "message": str(exc)}
    return {"verdict": rep.verdict, "max_real": rep.max_real}


def cmd_fixed_points(args):
    net = load_network(args)
    prm = load_params(args)
    try:
        sols = enumerate_fixed_points(net, prm, max_n=args.max_n)
    except ValueError as exc:
        raise CLIError(EXIT_MODEL, "model", str(exc)) from exc
    rows = []
    for s in sols:
        d = s.to_dict()
        d["has_li"] = s.has_li
        d["stability"] = _stability_entry(s.state, net, prm)
        rows.append(d)
    emit(args, _dump({"network": net.to_dict(), "params": prm.to_dict(), "count": len(rows),
                      "solutions": rows}), "fixed_points.json")


def _factor_checks(net: CRNetwork, prm: ModelParameters, state: SystemState) -> list:
    """Closed-form polynomial checks for the two networks that have them."""
    if net == cat.get_network("branch_cycle3"):
        kind, chk, point = "branch_cycle_quartic", check_branch_cycle_polynomial(prm), branch_cycle_fixed_point(prm)
    elif net == cat.get_network("composed5"):
        kind, chk, point = "five_node_sextic", check_five_node_polynomial(prm), five_node_fixed_point(prm)
    else:
        return []
    rec = {"check": kind, "valid": chk.valid}
    if not chk.valid:
        rec["reason"] = chk.reason
        return [rec]
    rec.update(ok=chk.ok, rel_error=chk.rel_error, coefficients_positive=chk.coefficients_positive,
               closed_form=[float(v) for v in chk.predicted],
               measured=None if chk.measured is None else [float(v) for v in chk.measured],
               known_roots=[[float(np.real(z)), float(np.imag(z))] for z in chk.known_roots],
               # the closed form describes one specific point; flag whether it is this one
               applies_to_state=bool(np.allclose(point.as_vector(), state.as_vector(), rtol=1e-9, atol=1e-12)))
    return [rec]


def cmd_stability(args):
    net = load_network(args)
    prm = load_params(args)
    if bool(args.support) == bool(args.state):
        raise CLIError(EXIT_USAGE, "usage", "give exactly one of --support and --state")
    if args.support:
        sup = parse_support(args.support)
        try:
            sol, why = try_support(net, prm, sup)
        except ModelError as exc:
            raise CLIError(EXIT_MODEL, "model", str(exc)) from exc
        if sol is None:
            raise CLIError(EXIT_NUMERIC, "no_fixed_point", f"no fixed point with support {sup}: {why}")
        state = sol.state
        extra = {"fixed_point": sol.to_dict()}
    else:
        state = SystemState.from_dict(_read_json(args.state))
        extra = {"state": state.to_dict(), "residual": residual(state, net, prm)}
    try:
        J = jacobian_at(state, net, prm)
    except ModelError as exc:
        raise CLIError(EXIT_NUMERIC, "jacobian_undefined", str(exc)) from exc
    rep = verdict(spectrum(J))
    out = {"network": net.to_dict(), "params": prm.to_dict(), **extra, **rep.to_dict(),
           "jacobian": J.matrix.tolist(), "factor_checks": _factor_checks(net, prm, state)}
    emit(args, _dump(out), "stability.json")


def cmd_sweep(args):
    net = load_network(args)
    prm = load_params(args)
    sup = parse_support(args.support)
    try:
        spec = SweepSpec(prm, args.radius, args.samples, args.seed, sup)
    except ValueError as exc:
        raise CLIError(EXIT_USAGE, "usage", str(exc)) from exc
    try:
        res = sweep(spec, net)
    except ModelError as exc:
        raise CLIError(EXIT_MODEL, "model", str(exc)) from exc
    except ValueError as exc:
        raise CLIError(EXIT_NUMERIC, "sweep", str(exc)) from exc
    if args.csv:
        atomic_write(Path(args.csv), res.to_csv())
    emit(args, res.to_json(with_records=not args.summary), "sweep.json")


def cmd_catalog(args):
    if args.action == "list":
        rows = [{"name": n, "n": cat.get_network(n).n, "edges": cat.get_network(n).to_dict()["edges"],
                 "entries": len(cat.entries(n))} for n in cat.network_names()]
        if args.format == "json":
            emit(args, _dump(rows), "catalog.json")
        else:
            lines = [f"{r['name']:<14} n={r['n']}  edges={r['edges']}  entries={r['entries']}" for r in rows]
            emit(args, "\n".join(lines), "catalog.txt")
        return
    if not args.name:
        raise CLIError(EXIT_USAGE, "usage", "catalog show needs a network name")
    try:
        net = cat.get_network(args.name)
    except KeyError as exc:
        raise CLIError(EXIT_MODEL, "model", str(exc.args[0])) from exc
    entries = cat.entries(args.name)
    if args.format == "json":
        emit(args, _dump({"name": args.name, "network": net.to_dict(),
                          "entries": [e.to_dict() for e in entries]}), f"{args.name}.json")
    else:
        head = f"{args.name}: n={net.n} edges={net.to_dict()['edges']}"
        emit(args, "\n".join([head] + [e.describe() for e in entries]), f"{args.name}.txt")


# --------------------------------------------------------------------------

def _add_model_args(p):
    g = p.add_argument_group("model")
    g.add_argument("--network", help=f"named network: {', '.join(cat.network_names())}")
    g.add_argument("--network-file", help='JSON {"n": N, "edges": [[i, j], ...]}')
    g.add_argument("--params", help='JSON {"f": [...], "p", "c", "b", "alpha", "beta"}')
    g.add_argument("--f", help="replication rates as a comma list (overrides --params)")
    for key in ("p", "c", "b", "alpha", "beta"):
        g.add_argument(f"--{key}", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="crnli", description="Cross-immunoreactivity network toolkit.",
                 epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("-o", "--output", help="output file ('-' for stdout)")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="integrate the dynamics, write a CSV trajectory")
    _add_model_args(p)
    p.add_argument("--initial", help='JSON {"x": [...], "r": [...]}; default 0.1 everywhere')
    p.add_argument("--t-end", type=float, help="end time (default 1000/b)")
    p.add_argument("--rtol", type=float, default=1e-8)
    p.add_argument("--atol", type=float, default=1e-10)
    p.add_argument("--stride", type=int, default=1, help="write every k-th accepted step")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fixed-points", help="enumerate nonnegative fixed points")
    _add_model_args(p)
    p.add_argument("--max-n", type=int, default=12)
    p.set_defaults(func=cmd_fixed_points)

    p = sub.add_parser("stability", help="Jacobian spectrum and verdict")
    _add_model_args(p)
    p.add_argument("--support", nargs=2, metavar=("I=..", "J=.."))
    p.add_argument("--state", help="state JSON file")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("sweep", help="seeded parameter sweep around a support")
    _add_model_args(p)
    p.add_argument("--support", nargs=2, required=True, metavar=("I=..", "J=.."))
    p.add_argument("--radius", type=float, default=0.01)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", help="also write per-sample rows to this CSV file")
    p.add_argument("--summary", action="store_true", help="omit per-sample records from the JSON")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("catalog", help="named networks and closed-form fixed points")
    p.add_argument("action", choices=["list", "show"])
    p.add_argument("name", nargs="?")
    p.add_argument("--format", choices=["text", "json"], default="json")
    p.set_defaults(func=cmd_catalog)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
        return EXIT_OK
    except CLIError as exc:
        code, kind, msg = exc.code, exc.kind, str(exc)
    except ModelError as exc:
        code, kind, msg = EXIT_MODEL, "model", str(exc)
    except (ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        code, kind, msg = EXIT_NUMERIC, "numeric", str(exc)
    except SystemExit as exc:  # --help and friends
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001
        code, kind, msg = EXIT_INTERNAL, type(exc).__name__, str(exc)
    print(json.dumps({"error": kind, "message": msg, "exit_code": code}), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
