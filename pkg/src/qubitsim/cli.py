"""Command-line entry point.

Exit codes: 0 when every comparison passes, 1 on an acceptance failure,
2 on a usage error.  Angles are radians and may be written as simple
expressions of ``pi`` such as ``pi/3`` or ``-3*pi/4``.
"""

from __future__ import annotations

import argparse
import ast
import csv
import io
import json
import logging
import math
import operator
import sys

import numpy as np

from qubitsim import __version__
from qubitsim.analytic import pe
from qubitsim.bell import run_protocol
from qubitsim.geometry import X_AXIS, Z_AXIS, SeededRng, UnitVec3, rabi_rotation
from qubitsim.inequalities import OPTIMAL_CHSH_ANGLES, lg_k3, lg_k3_oracle, protocol_chsh
from qubitsim.models import TransitionConfig, simulate_transition, trace_trajectory
from qubitsim.netharness import (
    PartialSessionError,
    SessionError,
    alice_service,
    bob_service,
    parse_endpoint,
    referee_session,
)
from qubitsim.noise import trace_to_csv
from qubitsim.stats import DEFAULT_SIGMA, sigma_distance

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def parse_angle(text: str) -> float:
    """Evaluate a radian expression built from numbers, ``pi`` and + - * /."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise ValueError

    try:
        value = ev(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not an angle expression: {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"angle must be finite: {text!r}")
    return value


def parse_direction(text: str) -> UnitVec3:
    """``"theta,phi"`` spherical angles to a unit vector."""
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"direction must be 'theta,phi', got {text!r}")
    return UnitVec3.from_spherical(parse_angle(parts[0]), parse_angle(parts[1]))


def parse_angle_list(text: str) -> list[float]:
    return [parse_angle(t) for t in text.split(",") if t.strip()]


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _non_negative(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be a non-negative integer")
    return v


def _endpoint(text: str):
    try:
        return parse_endpoint(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _vec(v: UnitVec3):
    return [v.x, v.y, v.z]


def _resolved(args) -> dict:
    out = {}
    for k, v in vars(args).items():
        if k in ("func", "out"):
            continue
        if isinstance(v, UnitVec3):
            v = _vec(v)
        out[k] = v
    return out


def _emit(args, text: str):
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)


def _emit_table(args, payload: dict, columns, rows):
    if getattr(args, "format", "json") == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])
        _emit(args, buf.getvalue())
    else:
        _emit(args, json.dumps(payload, indent=2, allow_nan=True) + "\n")


# -- commands ---------------------------------------------------------------


def cmd_transition(args) -> int:
    model = f"model{args.model}"
    rot = rabi_rotation(args.theta)
    records = []
    for stream, s0 in enumerate((1, -1)):
        cfg = TransitionConfig(Z_AXIS, rot, s0, args.samples, args.seed)
        rec = simulate_transition(model, cfg, stream=stream, workers=args.workers).record()
        rec["stream"] = stream
        rec["passed"] = rec["sigma_distance"] <= DEFAULT_SIGMA
        records.append(rec)
    passed = all(r["passed"] for r in records)
    columns = ("model", "theta", "s0", "s1", "empirical_p", "oracle_p", "stderr", "sigma_distance", "samples", "seed", "passed")
    rows = [
        (model, args.theta, r["config"]["s0"], r["s1"], r["empirical_p"], r["oracle_p"], r["stderr"],
         r["sigma_distance"], r["samples"], r["seed"], r["passed"])
        for r in records
    ]
    _emit_table(args, {"command": "transition", "params": _resolved(args), "records": records, "passed": passed}, columns, rows)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_trajectory(args) -> int:
    if args.grid_points < 2:
        raise argparse.ArgumentTypeError("--grid-points must be at least 2")
    cfg = TransitionConfig(Z_AXIS, rabi_rotation(args.theta), args.s0, 1, args.seed)
    grid = np.linspace(0.0, 1.0, args.grid_points)
    points = trace_trajectory(cfg, grid, SeededRng(args.seed, 0))
    _emit(args, trace_to_csv(p.row() for p in points))
    return EXIT_OK


def cmd_leggett_garg(args) -> int:
    thetas = args.thetas if args.thetas is not None else list(np.linspace(0.0, math.pi, args.points))
    rows, records, passed = [], [], True
    for theta in thetas:
        theta = float(theta)
        k1 = lg_k3("model1", Z_AXIS, theta, args.samples, args.seed, workers=args.workers)
        k2 = lg_k3("model2", Z_AXIS, theta, args.samples, args.seed, workers=args.workers)
        kq = lg_k3_oracle("quantum", theta)
        o1 = lg_k3_oracle("model1", theta)
        ok = (
            k1.value <= 1.0 + DEFAULT_SIGMA * k1.stderr + 1e-12
            and sigma_distance(k1.estimate, o1) <= DEFAULT_SIGMA
            and sigma_distance(k2.estimate, kq) <= DEFAULT_SIGMA
        )
        passed &= ok
        rows.append((theta, k1.value, k2.value, kq, k1.stderr, k2.stderr))
        records.append({
            "theta": theta, "K3_model1": k1.value, "K3_model2": k2.value, "K3_quantum": kq,
            "K3_model1_oracle": o1, "stderr_model1": k1.stderr, "stderr_model2": k2.stderr, "passed": ok,
        })
    columns = ("theta", "K3_model1", "K3_model2", "K3_quantum", "stderr_model1", "stderr_model2")
    _emit_table(args, {"command": "leggett-garg", "params": _resolved(args), "records": records, "passed": passed}, columns, rows)
    return EXIT_OK if passed else EXIT_FAIL


def _cell_reports(counts, rounds, v0, v1):
    cells, passed = [], True
    for i, a in enumerate((1, -1)):
        for j, b in enumerate((1, -1)):
            c = int(counts[i][j])
            p = pe(a, b, v0, v1)
            if p < 1e-12:
                ok, dist, mean, err = c == 0, (0.0 if c == 0 else math.inf), c / rounds, 0.0
            else:
                mean = c / rounds
                err = math.sqrt(p * (1.0 - p) / rounds)
                dist = abs(mean - p) / err
                ok = dist <= DEFAULT_SIGMA
            passed &= ok
            cells.append({"s0": a, "s1": b, "count": c, "empirical_p": mean, "oracle_p": p,
                          "stderr": err, "sigma_distance": dist, "passed": ok})
    return cells, passed


def cmd_bell(args) -> int:
    res = run_protocol(args.variant, args.v0, args.v1, args.rounds, args.seed)
    cells, passed = _cell_reports(res.counts, args.rounds, args.v0, args.v1)
    if args.log:
        with open(args.log, "w") as fh:
            for line in res.round_log_lines():
                fh.write(line + "\n")
    columns = ("s0", "s1", "count", "empirical_p", "oracle_p", "stderr", "sigma_distance", "passed")
    rows = [tuple(c[k] for k in columns) for c in cells]
    payload = {"command": "bell", "params": _resolved(args), "rounds": args.rounds, "cells": cells,
               "correlator": res.correlator().as_dict(), "passed": passed}
    _emit_table(args, payload, columns, rows)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_chsh(args) -> int:
    angles = {"a": args.a, "a_prime": args.a_prime, "b": args.b, "b_prime": args.b_prime}
    res = protocol_chsh(args.variant, args.rounds, args.seed, angles)
    dist = sigma_distance(res.s, res.oracle)
    passed = dist <= DEFAULT_SIGMA
    payload = {"command": "chsh", "params": _resolved(args), "S": res.s.mean, "stderr": res.s.stderr,
               "oracle_S": res.oracle, "sigma_distance": dist, "correlators": res.correlators, "passed": passed}
    _emit_table(args, payload, ("S", "stderr", "oracle_S", "sigma_distance", "passed"),
                [(res.s.mean, res.s.stderr, res.oracle, dist, passed)])
    return EXIT_OK if passed else EXIT_FAIL


def _serve(args, factory) -> int:
    server = factory(args.listen)
    host, port = server.server_address[:2]
    print(f"listening on {host}:{port}", file=sys.stderr, flush=True)
    try:
        if args.max_sessions is None:
            server.serve_forever()
        else:
            for _ in range(args.max_sessions):
                server.handle_request()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def cmd_serve_bob(args) -> int:
    return _serve(args, bob_service)


def cmd_serve_alice(args) -> int:
    return _serve(args, alice_service)


def cmd_referee(args) -> int:
    bob_addr, alice_addr = args.connect
    try:
        res = referee_session(args.v0, args.v1, args.rounds, args.seed, bob_addr, alice_addr, timeout=args.timeout)
    except PartialSessionError as exc:
        _emit(args, json.dumps({"command": "referee", "error": str(exc), "partial_rounds": len(exc.triples),
                                "partial_counts": exc.counts.tolist(), "passed": False}, indent=2) + "\n")
        return EXIT_FAIL
    except SessionError as exc:
        _emit(args, json.dumps({"command": "referee", "error": str(exc), "passed": False}, indent=2) + "\n")
        return EXIT_FAIL
    ref = run_protocol("reduced", args.v0, args.v1, args.rounds, args.seed)
    identical = res.triples == ref.triples()
    bytes_ok = res.bob_to_alice_payload_bytes == args.rounds
    summary = res.summary()
    summary.update({"command": "referee", "params": _resolved(args), "matches_in_process": identical,
                    "payload_bytes_per_round_ok": bytes_ok})
    passed = identical and bytes_ok
    if args.rounds:
        cells, cells_ok = _cell_reports(res.counts, args.rounds, args.v0, args.v1)
        summary["cells"] = cells
        passed &= cells_ok
    summary["passed"] = passed
    _emit(args, json.dumps(summary, indent=2) + "\n")
    return EXIT_OK if passed else EXIT_FAIL


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qubitsim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt=True):
        sp.add_argument("--seed", type=_seed, default=0)
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        if fmt:
            sp.add_argument("--format", choices=("json", "csv"), default="json")

    sp = sub.add_parser("transition", help="two-measurement transition vs its oracle")
    sp.add_argument("--model", type=int, choices=(1, 2), required=True)
    sp.add_argument("--theta", type=parse_angle, required=True)
    sp.add_argument("--samples", type=_positive, default=1_000_000)
    sp.add_argument("--workers", type=_positive, default=1)
    common(sp)
    sp.set_defaults(func=cmd_transition)

    sp = sub.add_parser("trajectory", help="CSV trace of one four-state trajectory")
    sp.add_argument("--theta", type=parse_angle, required=True, help="total rotation over the trace")
    sp.add_argument("--grid-points", type=int, default=201)
    sp.add_argument("--s0", type=int, choices=(1, -1), default=1)
    common(sp, fmt=False)
    sp.set_defaults(func=cmd_trajectory)

    sp = sub.add_parser("leggett-garg", help="K3 curves for both models and quantum mechanics")
    sp.add_argument("--thetas", type=parse_angle_list, default=None, help="comma-separated angles")
    sp.add_argument("--points", type=_positive, default=20, help="grid size over [0, pi] when --thetas is absent")
    sp.add_argument("--samples", type=_positive, default=1_000_000)
    sp.add_argument("--workers", type=_positive, default=1)
    common(sp)
    sp.set_defaults(func=cmd_leggett_garg)

    sp = sub.add_parser("bell", help="joint outcome distribution of the one-bit protocol")
    sp.add_argument("--v0", type=parse_direction, required=True, help="Bob's axis as 'theta,phi'")
    sp.add_argument("--v1", type=parse_direction, required=True, help="Alice's axis as 'theta,phi'")
    sp.add_argument("--rounds", type=_positive, default=1_000_000)
    sp.add_argument("--variant", choices=("reduced", "full"), default="reduced")
    sp.add_argument("--log", default=None, help="write per-round JSON lines here")
    common(sp)
    sp.set_defaults(func=cmd_bell)

    sp = sub.add_parser("chsh", help="CHSH value of the protocol at planar angles")
    sp.add_argument("--rounds", type=_positive, default=1_000_000)
    sp.add_argument("--variant", choices=("reduced", "full"), default="reduced")
    for name in ("a", "a_prime", "b", "b_prime"):
        sp.add_argument("--" + name.replace("_", "-"), dest=name, type=parse_angle, default=OPTIMAL_CHSH_ANGLES[name])
    common(sp)
    sp.set_defaults(func=cmd_chsh)

    for name, fn in (("serve-bob", cmd_serve_bob), ("serve-alice", cmd_serve_alice)):
        sp = sub.add_parser(name, help=f"run the {name[6:].title()} party service")
        sp.add_argument("--listen", type=_endpoint, default=("127.0.0.1", 0))
        sp.add_argument("--max-sessions", type=_positive, default=None)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("referee", help="drive a networked session and check it against the in-process run")
    sp.add_argument("--connect", type=_endpoint, nargs=2, required=True, metavar=("BOB", "ALICE"))
    sp.add_argument("--v0", type=parse_direction, required=True)
    sp.add_argument("--v1", type=parse_direction, required=True)
    sp.add_argument("--rounds", type=_non_negative, default=10_000)
    sp.add_argument("--timeout", type=float, default=30.0)
    common(sp, fmt=False)
    sp.set_defaults(func=cmd_referee)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as exc:
        parser.error(str(exc))
    except ValueError as exc:
        print(f"qubitsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
