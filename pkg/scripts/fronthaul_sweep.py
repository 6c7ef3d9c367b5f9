"""Fronthaul scalars per AP and channel use versus coherence block length."""

import argparse
import csv
import sys

from cellfree.fronthaul import sweep

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tau-p", type=int, default=10)
    ap.add_argument("--antennas", type=int, default=4)
    ap.add_argument("--aps", type=int, default=100)
    ap.add_argument("--ues", type=int, default=40)
    ap.add_argument("--first", type=int, default=11)
    ap.add_argument("--last", type=int, default=1000)
    args = ap.parse_args()
    rows = sweep(range(args.first, args.last + 1), args.tau_p, args.antennas, args.aps, args.ues)
    w = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
