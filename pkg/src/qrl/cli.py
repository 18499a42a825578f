"""Command-line entry point: ``qrl {run,verify,exec,list}``.

Exit codes: 0 success, 1 a claim or check failed, 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

import numpy as np

from . import claims
from .analysis import DEFAULT_SHOTS, build_report, exec_records
from .circuit import CircuitError, ParseError, parse, run
from .protocols import SCENARIOS, build, parse_rho
from .state import DegenerateInputError, LayoutError, NumericError, grouped_state

log = logging.getLogger("qrl")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
U64_MAX = 2**64 - 1


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- serialization


def _encode(obj) -> str:
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "null"
        text = format(x, ".17g")
        return text if any(c in text for c in ".en") else text + ".0"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON with every float written to 17 significant digits."""
    return _encode(obj)


def _reports_json(reports: list[dict]) -> str:
    return "[\n" + ",\n".join(dumps(r) for r in reports) + "\n]\n"


def _reports_csv(reports: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scenario", "seed", "outcome", "probability", "fidelity", "agreement", "gate_count", "pass"])
    for r in reports:
        for b in r["branches"]:
            w.writerow([
                r["scenario"], r["seed"], "".join(map(str, b["outcome"])),
                format(b["probability"], ".17g"), format(b["fidelity"], ".17g"), format(b["agreement"], ".17g"),
                r["gate_count"], str(r["pass"]).lower(),
            ])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- run


def _scenario_from(args):
    rho = None
    if args.scenario == "mixed":
        if args.rho is None:
            raise UsageError("the mixed scenario needs --rho r00,re01,im01")
        try:
            rho = parse_rho(args.rho)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    elif args.rho is not None:
        raise UsageError("--rho only applies to the mixed scenario")
    return build(args.scenario, n=args.n, dim=args.dim, rho=rho)


def _one_trial(args, seed: int) -> dict:
    scenario = _scenario_from(args)
    report = build_report(scenario, scenario.random_inputs(seed), mode=args.mode, seed=seed, shots=args.shots or DEFAULT_SHOTS)
    return report.to_dict()


def _check_run_args(args) -> None:
    if args.dim < 2:
        raise UsageError("dim must be ≥ 2")
    if args.n < 1:
        raise UsageError("n must be ≥ 1")
    if args.trials < 1:
        raise UsageError("trials must be ≥ 1")
    if not 0 <= args.seed <= U64_MAX - args.trials:
        raise UsageError("seed must fit in an unsigned 64-bit integer")
    if args.mode == "sample" and args.shots is None:
        raise UsageError("--mode sample requires --shots")
    if args.mode == "exhaustive" and args.shots is not None:
        raise UsageError("--shots only applies to --mode sample")
    if args.shots is not None and args.shots < 1:
        raise UsageError("shots must be ≥ 1")
    if args.jobs < 1:
        raise UsageError("jobs must be ≥ 1")


def cmd_run(args) -> int:
    _check_run_args(args)
    _scenario_from(args)  # surface configuration errors before dispatching trials
    seeds = [args.seed + t for t in range(args.trials)]
    if args.jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(_one_trial, [args] * len(seeds), seeds))
    else:
        reports = [_one_trial(args, s) for s in seeds]
    _emit(_reports_json(reports) if args.format == "json" else _reports_csv(reports), args.out)

    failed = [r for r in reports if not r["pass"]]
    for r in failed:
        bad = [k for k, ok in r["checks"].items() if not ok]
        print(f"FAIL {r['scenario']} seed={r['seed']}: checks {', '.join(bad)}", file=sys.stderr)
        for b in r["branches"]:
            if b["fidelity"] < 1 - claims.FID_TOL or b["agreement"] < 1 - claims.FID_TOL:
                print(
                    f"  branch {''.join(map(str, b['outcome']))}: fidelity={b['fidelity']:.17g} agreement={b['agreement']:.17g}",
                    file=sys.stderr,
                )
    log.info("%d/%d trials passed", len(reports) - len(failed), len(reports))
    return EXIT_FAIL if failed else EXIT_OK


# ---------------------------------------------------------------- verify


def _fmt_measured(r: claims.ClaimResult) -> str:
    return "nan" if math.isnan(r.measured) else f"{r.measured:.3e}"


def _fmt_tol(r: claims.ClaimResult) -> str:
    return {"max": f"<= {r.tolerance:.1e}", "min": f">= 1 - {r.tolerance:.0e}", "eq": "exact"}[r.kind]


def cmd_verify(args) -> int:
    try:
        results = claims.run_claims(args.only)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = [("claim", "anchor", "measured", "tolerance", "result")]
    rows += [(r.claim, r.anchor, _fmt_measured(r), _fmt_tol(r), "pass" if r.passed else "FAIL") for r in results]
    widths = [max(len(row[i]) for row in rows) for i in range(5)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows]
    n_ok = sum(r.passed for r in results)
    lines.append(f"{n_ok}/{len(results)} claims hold")
    print("\n".join(lines))
    if args.out:
        data = [
            {"claim": r.claim, "anchor": r.anchor, "measured": r.measured, "tolerance": r.tolerance, "pass": r.passed}
            for r in results
        ]
        _emit(_reports_json(data), args.out)
    return EXIT_OK if n_ok == len(results) else EXIT_FAIL


# ---------------------------------------------------------------- exec


def _amplitudes(raw) -> np.ndarray:
    vals = []
    for x in raw:
        if isinstance(x, (int, float)) and not isinstance(x, bool):
            vals.append(complex(x))
        elif isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
            vals.append(complex(x[0], x[1]))
        else:
            raise UsageError(f"amplitude must be a number or [re, im], got {x!r}")
    return np.array(vals, dtype=np.complex128)


def load_state(layout, path: str):
    """Initial state from a JSON mapping of ``"label"`` or ``"L1,L2"`` to amplitude lists."""
    try:
        with open(path, encoding="utf-8") as fh:
            spec = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read state file {path}: {exc}") from None
    if not isinstance(spec, dict):
        raise UsageError("state file must hold a JSON object")
    groups = []
    for key, raw in spec.items():
        if not isinstance(raw, list):
            raise UsageError(f"amplitudes for {key!r} must be a list")
        groups.append(([k.strip() for k in key.split(",")], _amplitudes(raw)))
    try:
        return grouped_state(layout, groups)
    except (LayoutError, NumericError, DegenerateInputError, ValueError) as exc:
        raise UsageError(f"bad state file: {exc}") from None


def cmd_exec(args) -> int:
    try:
        with open(args.path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {args.path}: {exc.strerror}") from None
    try:
        circuit = parse(text)
    except ParseError as exc:
        raise UsageError(f"{args.path}:{exc}") from None
    except (CircuitError, LayoutError) as exc:
        raise UsageError(f"{args.path}: {exc}") from None
    if args.seed < 0 or args.seed > U64_MAX:
        raise UsageError("seed must fit in an unsigned 64-bit integer")
    if args.state:
        initial = load_state(circuit.layout, args.state)
    else:
        initial = grouped_state(circuit.layout, [])
    trace = run(circuit, initial, rng_seed=args.seed, mode=args.mode)
    _emit("".join(dumps(rec) + "\n" for rec in exec_records(trace)), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- list


def cmd_list(args) -> int:
    print("scenarios: " + " ".join(SCENARIOS))
    print("claim groups: " + " ".join(claims.GROUPS))
    for c in claims.CLAIMS:
        print(f"  {c.group:<11} {c.name}")
    return EXIT_OK


# ---------------------------------------------------------------- entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qrl", description="Simulate and verify quantum reinforcement learning circuits.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a scenario on seeded random inputs")
    r.add_argument("--scenario", required=True, choices=SCENARIOS)
    r.add_argument("--dim", type=int, default=3, help="qudit dimension D (default 3)")
    r.add_argument("--n", type=int, default=2, help="number of agent/environment pairs (default 2)")
    r.add_argument("--seed", type=int, default=0, help="seed of trial 0; trial t uses seed + t")
    r.add_argument("--trials", type=int, default=1)
    r.add_argument("--mode", choices=("exhaustive", "sample"), default="exhaustive")
    r.add_argument("--shots", type=int, default=None, help="shots for sampled coherence recovery")
    r.add_argument("--rho", default=None, help='mixed environment as "r00,re01,im01"')
    r.add_argument("--out", default=None)
    r.add_argument("--format", choices=("json", "csv"), default="json")
    r.add_argument("--jobs", type=int, default=1, help="worker processes for trials")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="check every claim and print a table")
    v.add_argument("--only", default=None, help="claim group or name")
    v.add_argument("--out", default=None, help="also write results as JSON")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("exec", help="run a circuit file")
    e.add_argument("path")
    e.add_argument("--state", default=None, help="JSON file of initial amplitudes per label")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--mode", choices=("exhaustive", "sample"), default="exhaustive")
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_exec)

    ls = sub.add_parser("list", help="list scenarios and claim groups")
    ls.set_defaults(func=cmd_list)
    return p


def _configure_logging() -> None:
    level = os.environ.get("QRL_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")


def main(argv: Sequence[str] | None = None) -> int:
    _configure_logging()
    try:
        args = make_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"qrl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
