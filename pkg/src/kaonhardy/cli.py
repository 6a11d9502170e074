"""Command-line front end: ``kaonhardy {predict,solve,simulate,lhv-check}``.

Exit codes: 0 success (whatever the verdict), 2 invalid input, 1 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path
from typing import Any, Sequence

from . import config as cfg
from .hardy import HARDY_FRACTION, HardyRegimeWarning, contradiction_verdict, lhv_feasibility, lhv_range, solve_hardy_time
from .kaon import compute_R, compute_Rprime
from .measurement import fold_detector, hardy_observables, joint_probabilities
from .montecarlo import run_experiment
from .report import (
    certificate_payload,
    counts_payload,
    document,
    dumps_csv,
    dumps_json,
    feasibility_payload,
    observables_payload,
    stats_payload,
    table_payload,
    verdict_payload,
)

EXIT_OK, EXIT_INTERNAL, EXIT_INVALID = 0, 1, 2


class UsageError(ValueError):
    pass


def _parse_set(items: Sequence[str] | None) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for item in items or ():
        key, sep, raw = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            out[key.strip()] = json.loads(raw)
        except json.JSONDecodeError:
            out[key.strip()] = raw
    return out


def _overrides(args) -> dict[str, Any]:
    over = _parse_set(args.set)
    if args.r_abs is not None:
        over["regen.r_abs"] = args.r_abs
    if args.seed is not None:
        over["mc.seed"] = args.seed
    if args.events is not None:
        over["mc.events_per_setting"] = args.events
    if args.setting:
        over["mc.settings"] = args.setting
    if args.workers is not None:
        over["mc.workers"] = args.workers
    if args.format is not None:
        over["output.format"] = args.format
    if args.out is not None:
        over["output.path"] = args.out
    return over


def _load(args) -> cfg.RunConfig:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HardyRegimeWarning)
        return cfg.load(args.config, _overrides(args))


def cmd_predict(args) -> tuple[dict[str, Any], str, str | None]:
    run = _load(args)
    exp = run.experiment()
    evolved = exp.prepare()
    state = evolved.state
    r = run.regen.r
    R = compute_R(r, run.T, run.physics) if r != 0 else None
    tables = [joint_probabilities(state, s) for s in run.settings]
    payload: dict[str, Any] = {
        "state": {
            "basis": "lifetime",
            "amplitudes": {f"{a}{b}": amp for (a, b), amp in zip(state.labels(), state.amplitudes)},
            "survival_probability": evolved.survival_probability,
            "R": R,
            "Rprime": 0.0 if run.neglect_rprime else (compute_Rprime(r, R) if R is not None else None),
        },
        "tables": [table_payload(fold_detector(t, run.detector)) for t in tables],
        "hardy_observables": observables_payload(hardy_observables(state, run.detector)),
    }
    if not run.detector.is_ideal:
        payload["ideal_tables"] = [table_payload(t) for t in tables]
    return document("predict", run.echo(), payload), run.output_format, run.output_path


def cmd_solve(args) -> tuple[dict[str, Any], str, str | None]:
    run = _load(args)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HardyRegimeWarning)
        cert = solve_hardy_time(run.regen.r_abs, run.physics)
    if cert.regime_warning:
        print(
            f"warning: T_star = {cert.T_star:.6g} tau_S < 10 tau_S, outside the space-like separation regime",
            file=sys.stderr,
        )
    echo = run.echo()
    echo["regen"]["r_arg"] = cert.required_arg_r
    echo["state"]["T"] = cert.T_star
    return document("solve", echo, {"certificate": certificate_payload(cert)}), run.output_format, run.output_path


def cmd_simulate(args) -> tuple[dict[str, Any], str, str | None]:
    run = _load(args)
    counts, stats = run_experiment(run.experiment(), workers=run.workers)
    payload = {
        "counts": counts_payload(counts),
        "statistics": stats_payload(stats),
        "verdict": verdict_payload(stats.verdict),
    }
    return document("simulate", run.echo(), payload), run.output_format, run.output_path


def _observables_from_file(path: str) -> tuple[list[float], list[float] | None, float | None]:
    """Read P1..P4 (and optional tolerances) from a plain file or a predict/simulate report."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"--observables: cannot read {path}: {exc}") from exc
    tols = expected = None
    if isinstance(data, dict) and data.get("command") == "predict":
        obs = data["payload"]["hardy_observables"]
        expected = obs["P1"]
    elif isinstance(data, dict) and data.get("command") == "simulate":
        rows = data["payload"]["statistics"]["observables"]
        if not all(r["measured"] for r in rows):
            raise UsageError("--observables: simulate report lacks some of the four settings")
        obs = {r["observable"]: r["estimate"] for r in rows}
        tols = [r["tolerance"] for r in rows]
        expected = rows[0]["qm_prediction"]
    elif isinstance(data, dict):
        obs = data
        tols = data.get("tolerances")
    elif isinstance(data, list):
        obs = {f"P{i}": v for i, v in enumerate(data, start=1)}
    else:
        raise UsageError("--observables: expected a JSON object or list")
    try:
        values = [obs[f"P{i}"] for i in range(1, 5)]
    except (KeyError, TypeError) as exc:
        raise UsageError("--observables: need P1, P2, P3 and P4") from exc
    return values, tols, expected


def cmd_lhv_check(args) -> tuple[dict[str, Any], str, str | None]:
    run = _load(args) if args.config else None
    flags = [args.p1, args.p2, args.p3, args.p4]
    tols = expected = None
    if args.observables:
        values, tols, expected = _observables_from_file(args.observables)
        values = [f if f is not None else v for f, v in zip(flags, values)]
    else:
        if any(v is None for v in flags):
            raise UsageError("lhv-check needs --p1 --p2 --p3 --p4 or --observables FILE")
        values = flags
    for i, v in enumerate(values, start=1):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v >= 0.0:
            raise UsageError(f"P{i} must be a nonnegative number, got {v!r}")
    if args.tol is not None:
        tols = args.tol if len(args.tol) == 4 else args.tol * 4
        if len(tols) != 4:
            raise UsageError("--tol takes one value or four")
    if tols is None:
        tols = [1e-9] * 4
    if args.expected_fraction is not None:
        expected = args.expected_fraction
    elif expected is None:
        det = run.detector if run else None
        expected = float(HARDY_FRACTION) * (det.eta * det.etabar if det else 1.0)
    feas = lhv_feasibility({i: v for i, v in enumerate(values, start=1)})
    bounds = lhv_range({1: values[0], 2: values[1], 3: values[2]}, 4)
    verdict = contradiction_verdict(values, tols, expected_fraction=expected)
    payload = {
        "observables": observables_payload(values),
        "tolerances": observables_payload(tols),
        "expected_fraction": expected,
        "feasibility": feasibility_payload(feas),
        "lhv_min_P4": bounds[0] if bounds else None,
        "verdict": verdict_payload(verdict),
    }
    fmt = args.format or (run.output_format if run else "json")
    out = args.out or (run.output_path if run else None)
    return document("lhv-check", run.echo() if run else None, payload), fmt, out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML or JSON run configuration")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key, e.g. detector.eta=0.5")
    common.add_argument("--r-abs", type=float, dest="r_abs", help="override regen.r_abs")
    common.add_argument("--setting", type=int, action="append", choices=[1, 2, 3, 4], help="restrict to setting(s)")
    common.add_argument("--seed", type=int)
    common.add_argument("--events", type=int, help="events per setting")
    common.add_argument("--workers", type=int)
    common.add_argument("--format", choices=["json", "csv"])
    common.add_argument("--out", metavar="PATH")

    parser = argparse.ArgumentParser(prog="kaonhardy", description="Hardy tests with entangled neutral kaons")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("predict", parents=[common], help="exact joint probabilities").set_defaults(func=cmd_predict)
    sub.add_parser("solve", parents=[common], help="solve for R = -1").set_defaults(func=cmd_solve)
    sub.add_parser("simulate", parents=[common], help="Monte Carlo experiment").set_defaults(func=cmd_simulate)
    lhv = sub.add_parser("lhv-check", parents=[common], help="local hidden-variable feasibility and verdict")
    for i in range(1, 5):
        lhv.add_argument(f"--p{i}", type=float)
    lhv.add_argument("--observables", metavar="FILE", help="JSON with P1..P4, or a predict/simulate report")
    lhv.add_argument("--tol", type=float, nargs="+", help="zero tolerance(s): one value or four")
    lhv.add_argument("--expected-fraction", type=float, dest="expected_fraction")
    lhv.set_defaults(func=cmd_lhv_check)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        doc, fmt, out = args.func(args)
        text = dumps_csv(doc) if fmt == "csv" else dumps_json(doc)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
