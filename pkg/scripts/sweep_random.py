"""Run the seeded mixed random sweep and summarise audits, dominance and bounds.

    python scripts/sweep_random.py --count 500 --seed 2024 --workers 4 [--out mixed.csv]
"""
from __future__ import annotations

import argparse
import sys
from collections import Counter

from clockauction.harness import mixed_cells, records_to_csv, sweep_cells


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=500)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", help="CSV path (default: stdout)")
    args = ap.parse_args()
    records = sweep_cells(mixed_cells(args.count), seed=args.seed, workers=args.workers)
    reasons = Counter(r["reason"] for r in records)
    audits = sum(1 for r in records if r["audit_ok"] is False)
    dominance = sum(1 for r in records if r["dominance_ok"] is False)
    bounds = sum(1 for r in records if r["bound_holds"] is False)
    print(f"runs={len(records)} reasons={dict(sorted(reasons.items()))}", file=sys.stderr)
    print(f"audit failures={audits} dominance failures={dominance} bound failures={bounds}", file=sys.stderr)
    text = records_to_csv(records)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
