#!/usr/bin/env python3
"""Run every canned experiment and print a one-line summary per id.

Usage: python scripts/run_repro.py [--json] [--seed N]
Exits nonzero if any experiment fails.
"""

import argparse
import json
import sys

from mqlogic.experiments import EXPERIMENT_IDS, run_experiment


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--json", action="store_true", help="emit JSON lines")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    failed = 0
    for exp_id in EXPERIMENT_IDS:
        result = run_experiment(exp_id, seed=args.seed)
        if args.json:
            print(json.dumps(result.to_json()))
        else:
            print(f"{exp_id:16s} {result.status:4s} {result.runtime_ms:6d} ms")
        if not result.passed:
            failed += 1
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
