"""Replay every fixed family at its default size and print welfare against OPT.

    python scripts/replay_families.py [--out replays.csv]
"""
from __future__ import annotations

import argparse
import sys

from clockauction.harness import records_to_csv, sweep_cells

CELLS = [
    ("thm41", {"k": k, "l": l}) for k in (2, 3) for l in (2, 3, 4)
] + [
    ("thm42", {"k": 2, "l": 2, "C": 3}),
    ("fixed_unit", {"n": 16, "V": 100}),
    ("fixed_pairs", {"n": 8, "V": 100}),
    ("smra_stop", {"c": 10, "V": 100}),
]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", help="CSV path (default: stdout)")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    records = sweep_cells(CELLS, seed=0, workers=args.workers)
    for r in records:
        print(f"{r['family']:<12} {r['params']:<32} welfare={r['welfare']} opt={r['opt']} ratio={r['ratio']}", file=sys.stderr)
    text = records_to_csv(records)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
