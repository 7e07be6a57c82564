#!/usr/bin/env python3
"""Write a synthetic power-curve profile as a one-source JSONL export.

The output can be fed back to the CLI, e.g.

    python scripts/synthetic_profile.py --a 100 --b -1 --n 50 -o syn.jsonl
    hirsch-audit plot --source syn=syn.jsonl
"""

import argparse

from hirsch_audit.ingest import SourceRecord, write_records_jsonl
from hirsch_audit.metrics import fit_power_curve, h_index
from hirsch_audit.robustness import generate_synthetic_profile


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--a", type=float, default=100.0)
    ap.add_argument("--b", type=float, default=-1.0)
    ap.add_argument("--n", type=int, default=50)
    ap.add_argument("--sigma", type=float, default=0.0, help="lognormal noise scale")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--source", default="syn")
    ap.add_argument("-o", "--output", required=True)
    args = ap.parse_args(argv)

    prof = generate_synthetic_profile(args.a, args.b, args.n, args.sigma, args.seed)
    write_records_jsonl([SourceRecord(args.source, k, c) for k, c in prof.entries], args.output)
    fit = fit_power_curve(prof)
    print(f"wrote {len(prof)} records to {args.output}; h={h_index(prof)} refit a={fit.a:.4g} b={fit.b:.4g}")


if __name__ == "__main__":
    main()
