"""Command-line entry point: ``clockauction {generate,run,sweep,verify}``.

Machine-readable output (instance files, traces, results, CSV) goes to files
or stdout; human-readable progress goes to stderr.  Exit codes: 0 success,
2 bad input, 3 truncated run, 4 audit violation.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .formats import dumps_instance, dumps_result, dumps_trace, loads_instance, rat
from .generators import FAMILIES, gen_random
from .harness import CSV_COLUMNS, RANDOM_FAMILIES, audit_trace, expand_grid, records_to_csv, sweep
from .mechanism import AuctionConfig, AuctionTruncated, IncrementPolicy, run_cca
from .model import InputError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_TRUNCATED = 3
EXIT_AUDIT = 4

log = logging.getLogger("clockauction")

# CLI flag -> generator keyword, per family
FAMILY_PARAMS = {
    "thm41": {"k": "k", "l": "l"},
    "thm42": {"k": "k", "l": "l", "C": "cap"},
    "fixed_unit": {"n": "n", "V": "V"},
    "fixed_pairs": {"n": "n", "V": "V"},
    "smra_stop": {"c": "c", "V": "V"},
}


class UsageError(Exception):
    pass


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _fraction(s: str) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not an exact rational: {s!r}") from exc


def _config_overrides(cfg: AuctionConfig, args: argparse.Namespace) -> AuctionConfig:
    policy = IncrementPolicy(
        args.policy if args.policy is not None else cfg.policy.kind,
        args.epsilon if args.epsilon is not None else cfg.policy.epsilon,
    )
    return replace(
        cfg,
        policy=policy,
        stop=args.stop if args.stop is not None else cfg.stop,
        max_rounds=args.max_rounds if args.max_rounds is not None else cfg.max_rounds,
    )


def cmd_generate(args: argparse.Namespace) -> int:
    fam = args.family
    if fam in FAMILY_PARAMS:
        kwargs = {}
        for flag, name in FAMILY_PARAMS[fam].items():
            value = getattr(args, flag)
            if value is None:
                raise UsageError(f"family {fam} needs --{flag}")
            kwargs[name] = value
        sc = FAMILIES[fam](**kwargs)
        inst, cfg, expected = sc.instance, sc.config, sc.expected_welfare
    elif fam in RANDOM_FAMILIES:
        kind = fam.split("_", 1)[1]
        n, m = args.n or 3, args.m or 4
        cap = args.C or (1 if kind == "unit" else 2)
        inst = gen_random(kind, n, m, cap, seed=args.seed)
        cfg, expected = AuctionConfig(), None
    else:
        raise UsageError(f"unknown family {fam!r}; choose from {sorted([*FAMILIES, *RANDOM_FAMILIES])}")
    cfg = _config_overrides(cfg, args)
    _emit(dumps_instance(inst, cfg), args.out)
    info = f"n={inst.n} m={inst.m}"
    if expected is not None:
        info += f" expected_welfare={rat(expected)}"
    print(info, file=sys.stdout if args.out not in (None, "-") else sys.stderr)
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    try:
        text = Path(args.instance).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {args.instance}: {exc}") from exc
    inst, cfg = loads_instance(text)
    cfg = _config_overrides(cfg or AuctionConfig(), args)
    try:
        res = run_cca(inst, cfg)
    except AuctionTruncated as exc:
        if args.trace:
            Path(args.trace).write_text(dumps_trace(exc.trace))
        log.error("truncated after %d rounds", len(exc.trace.rounds))
        return EXIT_TRUNCATED
    if args.trace:
        Path(args.trace).write_text(dumps_trace(res.trace, res))
    _emit(dumps_result(inst, res), args.out)
    report = audit_trace(inst, res.trace, res, cfg)
    log.info("rounds=%d welfare=%s revenue=%s", res.rounds, res.welfare(inst), res.revenue)
    if not report.ok:
        for c in report.violations():
            log.error("audit %s failed: %s", c.name, c.witness)
        return EXIT_AUDIT
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    if args.family not in FAMILIES and args.family not in RANDOM_FAMILIES:
        raise UsageError(f"unknown family {args.family!r}")
    spec = args.grid
    if spec is None:
        grid: list[dict] | dict = []
    else:
        path = Path(spec)
        raw = path.read_text() if path.is_file() else spec
        try:
            grid = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise UsageError(f"grid is neither a JSON file nor JSON text: {exc}") from exc
        if not isinstance(grid, (list, dict)):
            raise UsageError("grid must be a JSON list of objects or an object of lists")
    cells = expand_grid(grid)
    records = sweep(args.family, cells, seed=args.seed, workers=args.workers)
    _emit(records_to_csv(records), args.out)
    code = EXIT_OK
    for r in records:
        err = r.get("error") or ""
        if err.startswith("params"):
            code = max(code, EXIT_INPUT)
        elif err == "truncated":
            code = max(code, EXIT_TRUNCATED)
        if r.get("audit_ok") is False:
            code = max(code, EXIT_AUDIT)
    log.info("%d cells, exit %d", len(records), code)
    return code


def cmd_verify(args: argparse.Namespace) -> int:
    from .acceptance import SUITES, run_suite

    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {sorted(SUITES)}")
    results = run_suite(args.suite)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="clockauction", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def auction_flags(q: argparse.ArgumentParser) -> None:
        q.add_argument("--epsilon", type=_fraction)
        q.add_argument("--policy", choices=["proportional", "fixed"])
        q.add_argument("--stop", choices=["porter", "disjoint"])
        q.add_argument("--max-rounds", type=int)

    g = sub.add_parser("generate", help="write an instance file for a family")
    g.add_argument("--family", required=True)
    for flag in ("k", "l", "C", "n", "m", "c"):
        g.add_argument(f"--{flag}", type=int)
    g.add_argument("--V", type=_fraction)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    auction_flags(g)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="run the auction on an instance file")
    r.add_argument("instance")
    r.add_argument("--out", help="result JSON (stdout if omitted)")
    r.add_argument("--trace", help="trace CSV")
    auction_flags(r)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a parameter grid and write the record CSV")
    s.add_argument("--family", required=True)
    s.add_argument("--grid", help="JSON text or file: list of param objects or object of value lists")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="run an acceptance suite")
    v.add_argument("suite")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr
    )
    try:
        return args.func(args)
    except (UsageError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())


__all__ = ["CSV_COLUMNS", "main", "build_parser"]
