"""Run packaged scenarios and write samples/summary files under results/.

    python scripts/run_scenarios.py fig2a fig2b --drops 10 --threads 4
"""

import argparse
import sys

from cellfree.cli import main
from cellfree.config import packaged_scenarios


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("names", nargs="*", help="scenario names (default: all simulation scenarios)")
    ap.add_argument("--drops", type=int, help="override num_drops")
    ap.add_argument("--blocks", type=int, help="override blocks_per_drop")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out-root", default="results")
    return ap.parse_args()


if __name__ == "__main__":
    args = parse_args()
    names = args.names or [n for n in packaged_scenarios() if n != "fig7"]
    status = 0
    for name in names:
        argv = ["simulate", "--config", name, "--threads", str(args.threads), "--out", f"{args.out_root}/{name}"]
        if args.drops:
            argv += ["--override", f"num_drops={args.drops}"]
        if args.blocks:
            argv += ["--override", f"blocks_per_drop={args.blocks}"]
        print(f"== {name}")
        status = max(status, main(argv))
    sys.exit(status)
