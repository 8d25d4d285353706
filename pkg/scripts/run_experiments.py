#!/usr/bin/env python3
"""Run every experiment driver with its defaults and collect the outputs.

One JSON report per driver lands in the output directory, plus the CSV
sweep tables.  This is the batch equivalent of running the scaling,
expsum, and tiles subcommands one after another with a shared seed.
"""

import argparse
import os
import sys

from maxmult import harness


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results")
    ap.add_argument("--skip-audit", action="store_true",
                    help="leave out the decomposition audit (the slow part)")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    lower = harness.run_lower_bound(seed=args.seed)
    harness.save_json(lower.to_dict(), os.path.join(args.out, "lower_scaling.json"))
    harness.save_report_csv(lower, os.path.join(args.out, "lower_scaling.csv"))
    print(f"lower bound: slope {lower.slope:.4f} (target {1 / lower.p - 0.5:.4f})")

    upper = harness.run_upper_scaling(seed=args.seed)
    harness.save_json(upper.to_dict(), os.path.join(args.out, "upper_scaling.json"))
    harness.save_report_csv(upper, os.path.join(args.out, "upper_scaling.csv"))
    print(f"upper bound: slope {upper.slope:.4f} (bound {upper.extras['slope_bound']:.4f})")

    entropy = harness.run_entropy_scaling(seed=args.seed)
    harness.save_json(entropy.to_dict(), os.path.join(args.out, "entropy_scaling.json"))
    harness.save_report_csv(entropy, os.path.join(args.out, "entropy_scaling.csv"))
    print(f"entropy: slope {entropy.slope:.4f} (bound {entropy.extras['slope_bound']:.4f})")

    if not args.skip_audit:
        audit = harness.run_decomposition_audit(seed=args.seed)
        harness.save_json(audit, os.path.join(args.out, "tiles_audit.json"))
        status = "ok" if audit["ok"] else f"{len(audit['problems'])} problems"
        print(f"decomposition audit: {status}")
        if not audit["ok"]:
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
