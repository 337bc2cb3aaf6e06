"""Sweep the unit-demand lower-bound family and report how the gap grows with l.

    python scripts/sweep_unit_lb.py --k 2 3 --l 2 3 4 5 [--out unit_lb.csv]
"""
from __future__ import annotations

import argparse
import json
import sys

from clockauction.generators import gen_unit_demand_lb
from clockauction.harness import records_to_csv, sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, nargs="+", default=[2, 3])
    ap.add_argument("--l", type=int, nargs="+", default=[2, 3, 4])
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", help="CSV path (default: stdout)")
    args = ap.parse_args()
    records = sweep("thm41", {"k": args.k, "l": args.l}, workers=args.workers)
    for r in records:
        if r["error"]:
            print(f"{r['params']}: {r['error']}", file=sys.stderr)
            continue
        p = json.loads(r["params"])
        sc = gen_unit_demand_lb(p["k"], p["l"])
        k, l, lower = p["k"], p["l"], sc.opt_lower.welfare(sc.instance)
        print(f"k={k} l={l} m={r['m']} welfare={r['welfare']} opt={r['opt']} constructive={lower}", file=sys.stderr)
    text = records_to_csv(records)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
