#!/usr/bin/env python3
"""Randomized robustness trials plus the fixture sensitivity table.

    python scripts/robustness_experiment.py --trials 1000 --seed 0
"""

import argparse
import sys
from pathlib import Path

from hirsch_audit.cli import load_plan
from hirsch_audit.ingest import VenueAliases, dedup_within_source, match_across_sources, parse_records
from hirsch_audit.robustness import (
    bogus_injection_trials,
    sensitivity_csv,
    sensitivity_report,
    split_trials,
    upper_tail_trials,
)
from hirsch_audit.verify import combine_max

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


def fixture_profile():
    per = {}
    for tag in ("gs", "wos"):
        recs, _ = dedup_within_source(parse_records(FIXTURES / f"table3_{tag}.jsonl", tag))
        per[tag] = recs
    return combine_max(match_across_sources(per))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-size", type=int, default=200)
    ap.add_argument("--max-count", type=int, default=500)
    args = ap.parse_args(argv)

    failed = False
    for runner in (upper_tail_trials, bogus_injection_trials, split_trials):
        summary = runner(args.trials, args.seed, args.max_size, args.max_count)
        print(summary.line())
        failed |= not summary.ok

    plan = load_plan(FIXTURES / "table3_plan.jsonl", VenueAliases())
    print()
    sys.stdout.write(sensitivity_csv(sensitivity_report(fixture_profile(), plan, args.seed)))
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
