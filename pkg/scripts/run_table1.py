"""Run the power-graph suite and print the Table 1 summary.

    python scripts/run_table1.py --out runs/table1 --jobs 4
"""

import argparse
import json

from mcflab.config import load_config
from mcflab.experiments import DEFAULT_ALPHAS, table1_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config")
    ap.add_argument("--out", default="runs/table1")
    ap.add_argument("--alphas", default=",".join(str(a) for a in DEFAULT_ALPHAS))
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--check", action="store_true")
    args = ap.parse_args()

    config = load_config(args.config)
    alphas = tuple(float(a) for a in args.alphas.split(","))
    manifest = table1_suite(config, alphas, check=args.check, out=args.out, jobs=args.jobs)
    print(f"{'alpha':>6} {'row':>11} {'hint':>22} {'slope':>8} {'|A|(0,1)':>10} {'|A|(0,end)':>10}  failed")
    for row in manifest.summary["rows"]:
        if row["status"] != "ok":
            print(f"{row['alpha']:>6g} {row['row']:>11} {row['status']}")
            continue
        print(
            f"{row['alpha']:>6g} {row['row']:>11} {row['classification_hint']:>22} {row['loglog_slope']:>8.3f}"
            f" {row['A_axis_t1']:>10.4f} {row['A_axis_tend']:>10.4f}  {','.join(row['failed_checks']) or '-'}"
        )
    print(json.dumps({"status": manifest.status, "output_dir": manifest.output_dir}))
    return manifest.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
