"""Command-line interface.

    relaxedbell analyze model.json
    relaxedbell box --kind nosignal --I 0.25 -o box.json
    relaxedbell oracle --I 0.25 --S 0 --step 0.05
    relaxedbell oracle --I 0,0.1,0.2 --S 0,0.5,1 --csv sweep.csv
    relaxedbell singlet --w 0.5 --samples 1000000 --seed 0
    relaxedbell singlet --scan --perturbed 1000
    relaxedbell info --V 0.8284 --I 0.2 --S 0.3
    relaxedbell thresholds --V 0.8284

JSON goes to stdout, a short human-readable summary to stderr.
Exit codes: 0 success, 1 I/O error, 2 invalid input, 3 internal invariant breach.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .boxes import BoxSpec, make_box
from .chsh import (
    MeasurementDependenceError,
    bound_B,
    check_model_consistency,
    chsh,
    thresholds_for_violation,
)
from .info import binary_entropy, channel_capacity, info_thresholds
from .measures import measure_all
from .model import PAIRS, InvariantBreach, ModelError, behavior_of, dump_model, load_model
from .oracle import DEFAULT_STEP, brute_force_max, verify_tightness
from .singlet import (
    SpinSetting,
    chsh_settings,
    conjecture_scan,
    default_threads,
    estimate_correlator,
    mixture_measures,
    qm_chsh,
)

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_BREACH = 0, 1, 2, 3
DEFAULT_SEED = 12345


def _round(obj: Any) -> Any:
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return obj
        return float(f"{obj:.12g}") + 0.0
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(_round(payload), indent=2) + "\n")


def note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def parse_settings(text: str) -> tuple[list[SpinSetting], list[SpinSetting]]:
    """``"0,90:225,135"`` (planar angles in degrees) or a JSON file path.

    The file holds ``{"first": [...], "second": [...]}`` with either angles or 3-vectors.
    """
    if ":" in text and not Path(text).exists():
        left, right = text.split(":", 1)
        first = [SpinSetting.from_angle(a) for a in _floats(left)]
        second = [SpinSetting.from_angle(b) for b in _floats(right)]
    else:
        raw = json.loads(Path(text).read_text())

        def conv(items):
            return [
                SpinSetting.from_angle(v) if isinstance(v, (int, float)) else SpinSetting.normalized(v)
                for v in items
            ]

        first, second = conv(raw["first"]), conv(raw["second"])
    if not first or not second:
        raise ValueError("settings need at least one direction per observer")
    return first, second


# --- commands --------------------------------------------------------------------


def cmd_analyze(args) -> int:
    model = load_model(args.model)
    report = measure_all(model)
    behavior = behavior_of(model)
    value = chsh(behavior)
    I, S = min(report.I, 0.5), min(report.S, 1.0)
    out: dict[str, Any] = {
        "file": str(args.model),
        "lambdas": len(model),
        "measures": report.to_dict(),
        "behavior": {pair.key: list(behavior[pair].probs) for pair in PAIRS},
        "chsh": value.to_dict(),
        "B": float(bound_B(I, S)),
        "info": {"H_of_I": binary_entropy(I), "C_of_S": channel_capacity(S)},
    }
    status = EXIT_OK
    try:
        verdict = check_model_consistency(model)
    except MeasurementDependenceError as exc:
        out["verdict"] = None
        out["warning"] = str(exc) + "; B(I, S) verdict skipped"
        note(f"warning: {out['warning']}")
    else:
        out["verdict"] = verdict.to_dict()
        if not verdict.passed:
            status = EXIT_BREACH
    emit(out)
    note(
        f"I={report.I:.6g} S={report.S:.6g} M={report.M:.6g} "
        f"CHSH={value.value:.6g} B={out['B']:.6g} "
        f"verdict={'skipped' if out['verdict'] is None else ('pass' if out['verdict']['pass'] else 'FAIL')}"
    )
    return status


def cmd_box(args) -> int:
    outcomes = tuple(int(v) for v in _floats(args.outcomes)) if args.outcomes else (1, 1, 1, 1)
    spec = BoxSpec(kind=args.kind, I=args.I, flip=args.flip, outcomes=outcomes)
    model = make_box(spec)
    text = dump_model(model, args.output)
    if args.output is None:
        sys.stdout.write(text)
    else:
        emit({"written": str(args.output), "kind": args.kind, "I": args.I, "flip": args.flip})
    value = chsh(behavior_of(model)).value
    note(f"{args.kind} box: CHSH={value:.6g}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    I_grid, S_grid = args.I, args.S
    if len(I_grid) == 1 and len(S_grid) == 1:
        report = brute_force_max(I_grid[0], S_grid[0], args.step, args.endpoints, method=args.method)
        if report.gap < -1e-9:
            raise InvariantBreach(f"oracle max {report.max_E} exceeds B = {report.analytic_B}")
        reports = [report]
        emit(report.to_dict())
    else:
        reports = verify_tightness(I_grid, S_grid, args.step, args.endpoints, threads=args.threads)
        emit({
            "grid_step": args.step,
            "endpoints": args.endpoints,
            "cells": [r.to_dict() for r in reports],
            "max_gap": max(r.gap for r in reports),
        })
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["I", "S", "max_E", "analytic_B", "gap"])
            for r in reports:
                writer.writerow([f"{v:.12g}" for v in (r.I, r.S, r.max_E, r.analytic_B, r.gap)])
    note(f"oracle: {len(reports)} cell(s), max gap {max(r.gap for r in reports):.3g}")
    return EXIT_OK


def cmd_singlet(args) -> int:
    first, second = parse_settings(args.settings) if args.settings else chsh_settings()
    if args.scan:
        w_grid = args.w_grid if args.w_grid else None
        report = conjecture_scan(
            w_grid=w_grid,
            perturbed=args.perturbed,
            settings=(first, second) if args.settings else None,
            seed=args.seed,
        ).to_dict()
        emit(report)
        note(
            f"scan: min S+2I = {report['min_S_plus_2I']:.12g} over "
            f"{len(report['mixture_family'])} mixtures and {report['perturbed']['admissible']} "
            f"perturbed models; counterexample: {report['counterexample_found']} (evidence only)"
        )
        return EXIT_OK

    w = args.w
    I, S = mixture_measures(w, seed=args.seed)
    rows = []
    for i, x in enumerate(first):
        for j, y in enumerate(second):
            E, err = estimate_correlator(w, x, y, args.samples, args.seed, threads=args.threads)
            rows.append({
                "first": i,
                "second": j,
                "analytic": -float(sum(a * b for a, b in zip(x.direction, y.direction))),
                "estimate": E,
                "stderr": err,
            })
    out: dict[str, Any] = {
        "w": w,
        "seed": args.seed,
        "samples": args.samples,
        "I": I,
        "S": S,
        "S_plus_2I": S + 2 * I,
        "H_plus_C": binary_entropy(I) + channel_capacity(S),
        "correlators": rows,
    }
    if len(first) == 2 and len(second) == 2:
        e = {(r["first"], r["second"]): r for r in rows}
        out["chsh_analytic"] = qm_chsh(first, second)
        out["chsh_estimate"] = e[0, 0]["estimate"] + e[1, 0]["estimate"] + e[0, 1]["estimate"] - e[1, 1]["estimate"]
        out["chsh_stderr"] = math.sqrt(sum(r["stderr"] ** 2 for r in rows))
    emit(out)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["first", "second", "analytic", "estimate", "stderr"])
            for r in rows:
                writer.writerow([r["first"], r["second"]] + [f"{r[k]:.12g}" for k in ("analytic", "estimate", "stderr")])
    note(f"singlet mixture w={w}: I={I:.6g} S={S:.6g} (seed {args.seed})")
    return EXIT_OK


def cmd_info(args) -> int:
    report = info_thresholds(args.V, args.I, args.S)
    emit(report.to_dict())
    note(f"H_V={report.H_V:.6g} C_V={report.C_V:.6g}")
    return EXIT_OK


def cmd_thresholds(args) -> int:
    t = thresholds_for_violation(args.V)
    info = info_thresholds(args.V)
    out = t.to_dict()
    out.update({"H_V": info.H_V, "C_V": info.C_V})
    emit(out)
    note(f"V={args.V:.6g}: need I >= {t.I_V:.6g} or S >= {t.S_V:.6g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relaxedbell", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--threads",
        type=int,
        default=default_threads(),
        help="worker cap (default from RELAXEDBELL_THREADS, else 1); never changes results",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="measure a model file and check it against B(I, S)")
    p.add_argument("model", type=Path)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("box", help="write an extremal box as a model file")
    p.add_argument("--kind", choices=["pr", "nosignal", "signalling", "deterministic"], required=True)
    p.add_argument("--I", type=float, default=0.5)
    p.add_argument("--flip", action="store_true", help="mirror variant with marginals at 1 - I")
    p.add_argument("--outcomes", help="a(X),a(X'),b(Y),b(Y') for --kind deterministic, e.g. 1,1,1,-1")
    p.add_argument("-o", "--output", type=Path)
    p.set_defaults(func=cmd_box)

    p = sub.add_parser("oracle", help="brute-force maximum of the CHSH value under (I, S)")
    p.add_argument("--I", type=_floats, required=True, help="value or comma list for a sweep")
    p.add_argument("--S", type=_floats, required=True, help="value or comma list for a sweep")
    p.add_argument("--step", type=float, default=DEFAULT_STEP)
    p.add_argument("--endpoints", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--method", choices=["pruned", "exhaustive"], default="pruned")
    p.add_argument("--csv", type=Path)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("singlet", help="Toner-Bacon/quantum mixture simulation and conjecture scan")
    p.add_argument("--w", type=float, default=1.0, help="weight on the Toner-Bacon component")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"RNG seed (default {DEFAULT_SEED})")
    p.add_argument("--settings", help="'a1,a2:b1,b2' planar angles in degrees, or a JSON file")
    p.add_argument("--scan", action="store_true", help="run the S + 2I >= 1 scanner")
    p.add_argument("--w-grid", type=_floats, help="mixture weights to scan (default 0, 0.1, ..., 1)")
    p.add_argument("--perturbed", type=int, default=1000, help="admissible perturbed models to collect")
    p.add_argument("--csv", type=Path)
    p.set_defaults(func=cmd_singlet)

    p = sub.add_parser("info", help="entropy / capacity thresholds")
    p.add_argument("--V", type=float, required=True)
    p.add_argument("--I", type=float)
    p.add_argument("--S", type=float)
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("thresholds", help="I_V and S_V for a violation V")
    p.add_argument("--V", type=float, required=True)
    p.set_defaults(func=cmd_thresholds)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvariantBreach as exc:
        note(f"internal invariant breach: {exc}")
        return EXIT_BREACH
    except ModelError as exc:
        note(f"invalid model: {exc}")
        return EXIT_INVALID
    except OSError as exc:
        note(f"I/O error: {exc}")
        return EXIT_IO
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        note(f"invalid input: {exc}")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
