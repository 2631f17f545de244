"""Command-line experiments: MDS checks, repair runs and bandwidth bounds.

Every command prints one JSON report on stdout. Exit status is 0 on success,
1 when a verification fails and 2 for unusable configuration or input.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Iterable

import numpy as np

from . import mdscode
from .failures import (FailurePattern, enumerate_patterns, make_pattern, pattern_space_size,
                       random_pattern)
from .ff import FieldError
from .params import (CONSTRUCTIONS, ParameterError, SystemParams, from_mapping, lower_bound,
                     predicted_bandwidth, with_construction)
from .repair_grouped import repair_g
from .repair_stacked import repair

RNG_ID = "numpy.PCG64"
ENUMERATE_CAP = 10_000
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

FORMULAS = {
    "bound": "h*(dbar+hbar-delta)*l / (dbar-kbar+hbar-delta+1)",
    "download": "dbar*h*l/(sbar+hbar-delta) [+ hbar*(b-u+v)*l/(sbar+hbar-delta) when b > u-v]",
    "cooperative": "h*(hbar-delta)*l/(sbar+hbar-delta)",
}


class ConfigError(Exception):
    """Unreadable config, pattern or input file."""


def frac(x: Fraction | int) -> dict:
    x = Fraction(x)
    return {"numerator": x.numerator, "denominator": x.denominator, "text": str(x)}


def load_config(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string("[params]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    return dict(parser["params"])


def load_params(path: str | Path, scheme: str | None = None) -> SystemParams:
    cfg = load_config(path)
    if scheme is not None:
        cfg["construction"] = scheme
    return from_mapping(cfg)


def load_pattern(path: str | Path, params: SystemParams) -> FailurePattern:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read pattern {path}: {exc}") from None
    if not isinstance(raw, dict) or "hosts" not in raw or "failed" not in raw:
        raise ConfigError('pattern file must be a JSON object with "hosts" and "failed"')
    return make_pattern(params, raw["hosts"], raw["failed"], raw.get("helpers"), raw.get("extra"))


def _base_report(command: str, params: SystemParams, seed: int | None) -> dict[str, Any]:
    return {"command": command, "params": params.as_dict(), "rng": RNG_ID, "seed": seed}


def _verdict(passed: int, failed: int) -> str:
    if passed + failed == 0:
        return "no trials"
    return "pass" if failed == 0 else "fail"


def verify_mds(params: SystemParams, trials: int, seed: int) -> dict:
    rng = np.random.Generator(np.random.PCG64(seed))
    table = mdscode.PointTable(params)
    start = time.perf_counter()
    passed = failed = 0
    for _ in range(trials):
        cw = mdscode.encode(mdscode.random_message(params, rng), params)
        erased = set(int(x) for x in rng.choice(params.n, params.r, replace=False))
        got = mdscode.reconstruct(cw, [i for i in range(params.n) if i not in erased], table)
        if got == cw:
            passed += 1
        else:
            failed += 1
    report = _base_report("verify-mds", params, seed)
    report.update({
        "scheme": params.construction, "trials": trials,
        "failures": f"{params.r} random node erasures per trial",
        "passed": passed, "failed": failed, "verdict": _verdict(passed, failed),
        "wall_time_s": time.perf_counter() - start,
    })
    return report


def _classify(ratio: Fraction, params: SystemParams) -> str:
    if ratio == 1:
        return "optimal"
    if ratio < 1 + Fraction(1, params.dbar + params.hbar - params.delta):
        return "asymptotically optimal"
    return "above bound"


def run_repairs(
    params: SystemParams,
    patterns: Iterable[FailurePattern],
    seed: int,
    on_trial: Callable[[dict], None] | None = None,
    trace: list | None = None,
) -> dict:
    """Encode a fresh random codeword per pattern, repair it and check the ledger."""
    rng = np.random.Generator(np.random.PCG64(seed))
    fix = repair if params.construction == "stacked" else repair_g
    predicted = predicted_bandwidth(params)
    bound = lower_bound(params)
    start = time.perf_counter()
    passed = failed = mismatched = 0
    totals: set[int] = set()
    last = None
    for trial, pattern in enumerate(patterns):
        cw = mdscode.encode(mdscode.random_message(params, rng), params)
        res = fix(cw, pattern, trace=trace is not None)
        exact = res.codeword == cw
        ledger = res.ledger
        on_budget = ledger.total == predicted.total
        passed += exact and on_budget
        failed += not (exact and on_budget)
        mismatched += not on_budget
        totals.add(ledger.total)
        last = ledger
        row = {"trial": trial, **pattern.as_dict(), "download": ledger.download_total,
               "cooperative": ledger.cooperative_total, "total": ledger.total, "exact": exact}
        if on_trial is not None:
            on_trial(row)
        if trace is not None:
            trace.extend({"trial": trial, **rec} for rec in ledger.trace)
    report = _base_report("repair", params, seed)
    report.update({
        "scheme": params.construction,
        "trials": passed + failed,
        "passed": passed, "failed": failed, "ledger_mismatches": mismatched,
        "verdict": _verdict(passed, failed),
        "predicted": {k: frac(v) for k, v in predicted._asdict().items()},
        "bound": frac(bound),
        "formulas": FORMULAS,
    })
    if last is not None:
        achieved = max(totals)
        ratio = Fraction(achieved, 1) / bound
        report.update({
            "achieved": achieved,
            "achieved_distinct": sorted(totals),
            "ledger": last.as_dict(),
            "ratio": frac(ratio),
            "optimality": _classify(ratio, params),
        })
    report["wall_time_s"] = time.perf_counter() - start
    return report


def bound_report(params: SystemParams) -> dict:
    report = _base_report("bound", params, None)
    b = lower_bound(params)
    report.update({
        "bound": frac(b),
        "bound_over_l": frac(b / params.l),
        "bound_text": f"{b / params.l}l",
        "formulas": FORMULAS,
        "schemes": {},
    })
    for scheme in CONSTRUCTIONS:
        try:
            p = with_construction(params, scheme)
        except (ParameterError, FieldError) as exc:
            report["schemes"][scheme] = {"error": str(exc)}
            continue
        pred = predicted_bandwidth(p)
        report["schemes"][scheme] = {
            "l": p.l, "q": p.q,
            "bound": frac(lower_bound(p)),
            "predicted": {k: frac(v) for k, v in pred._asdict().items()},
            "predicted_over_l": {k: frac(v / p.l) for k, v in pred._asdict().items()},
        }
    return report


def _resolve_seed(args) -> int:
    """``--seed`` wins over a ``seed`` key in the config; the fallback is 0."""
    if args.seed is not None:
        return args.seed
    try:
        return int(load_config(args.config).get("seed", 0))
    except ValueError:
        raise ConfigError("config seed must be an integer") from None


def _cmd_verify(args) -> tuple[dict, int]:
    params = load_params(args.config, args.scheme)
    if args.trials < 0:
        raise ConfigError("--trials must be >= 0")
    report = verify_mds(params, args.trials, _resolve_seed(args))
    return report, EXIT_FAIL if report["verdict"] == "fail" else EXIT_OK


def _cmd_repair(args) -> tuple[dict, int]:
    params = load_params(args.config, args.scheme)
    if args.trials < 0:
        raise ConfigError("--trials must be >= 0")
    seed = _resolve_seed(args)
    truncated = False
    if args.pattern:
        patterns: Iterable[FailurePattern] = [load_pattern(args.pattern, params)]
        description = f"pattern from {args.pattern}"
    elif args.enumerate:
        space = pattern_space_size(params)
        truncated = space > ENUMERATE_CAP
        gen = enumerate_patterns(params)
        patterns = [next(gen) for _ in range(min(space, ENUMERATE_CAP))]
        description = f"enumerated {len(patterns)} of {space} patterns"
    else:
        rng = np.random.Generator(np.random.PCG64(seed + 1))
        patterns = [random_pattern(params, rng) for _ in range(args.trials)]
        description = f"{args.trials} random patterns"
    rows: list[dict] = []
    trace: list | None = [] if args.trace else None
    report = run_repairs(params, patterns, seed, rows.append, trace)
    report["failures"] = f"{description}; {params.b} failed nodes in each of {params.hbar} host racks"
    if args.enumerate:
        report["enumeration"] = {"space": pattern_space_size(params), "cap": ENUMERATE_CAP,
                                 "truncated": truncated}
    if args.trace:
        with open(args.trace, "w") as fh:
            for rec in trace:
                fh.write(json.dumps(rec) + "\n")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            fields = ["trial", "hosts", "failed", "helpers", "extra", "download", "cooperative", "total", "exact"]
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            for row in rows:
                writer.writerow({k: json.dumps(v) if isinstance(v, list) else v for k, v in row.items()})
    return report, EXIT_FAIL if report["verdict"] == "fail" else EXIT_OK


def _cmd_bound(args) -> tuple[dict, int]:
    return bound_report(load_params(args.config, args.scheme)), EXIT_OK


def _cmd_encode(args) -> tuple[dict, int]:
    params = load_params(args.config, args.scheme)
    try:
        raw = Path(args.input).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read message {args.input}: {exc.strerror}") from None
    msg = mdscode.read_message(raw, params)
    if msg.size and msg.max() >= params.q:
        raise ConfigError(f"message symbols must lie in [0, {params.q})")
    cw = mdscode.encode(msg, params)
    Path(args.output).write_bytes(mdscode.to_bytes(cw))
    report = _base_report("encode", params, None)
    report.update({"symbols_in": int(msg.size), "symbols_out": params.n * params.l,
                   "output": str(args.output), "parity_ok": mdscode.parity_check(cw)})
    return report, EXIT_OK if report["parity_ok"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mspcr", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="flat key=value parameter file")
        p.add_argument("--scheme", choices=CONSTRUCTIONS, help="override the config's construction")

    p = sub.add_parser("verify-mds", help="erase r random nodes and reconstruct")
    common(p)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, help="defaults to the config's seed, else 0")
    p.set_defaults(run=_cmd_verify)

    p = sub.add_parser("repair", help="run the repair protocol and meter bandwidth")
    common(p)
    how = p.add_mutually_exclusive_group()
    how.add_argument("--pattern", help="JSON file with hosts, failed and optional helpers/extra")
    how.add_argument("--enumerate", action="store_true", help=f"all patterns, capped at {ENUMERATE_CAP}")
    how.add_argument("--random", action="store_true", help="random patterns (default)")
    p.add_argument("--trials", type=int, default=1, help="number of random patterns")
    p.add_argument("--seed", type=int, help="defaults to the config's seed, else 0")
    p.add_argument("--trace", help="write one JSON line per inter-rack transfer")
    p.add_argument("--csv", help="write one summary row per trial")
    p.set_defaults(run=_cmd_repair)

    p = sub.add_parser("bound", help="bandwidth lower bound and predicted phase totals")
    common(p)
    p.set_defaults(run=_cmd_bound)

    p = sub.add_parser("encode", help="encode a raw little-endian message file")
    common(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.set_defaults(run=_cmd_encode)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report, code = args.run(args)
    except (ConfigError, ParameterError, FieldError, mdscode.CodeError) as exc:
        print(json.dumps({"command": args.command, "error": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(report, indent=2))
    return code


if __name__ == "__main__":
    sys.exit(main())
