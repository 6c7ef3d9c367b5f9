"""Per-drop sum SE of the four levels and MMSE-SIC, with the relative SIC gain over Level 4."""

import argparse

import numpy as np

from cellfree.config import load_config
from cellfree.harness import run_simulation


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="fig6")
    ap.add_argument("--drops", type=int, default=10)
    ap.add_argument("--blocks", type=int, default=100)
    ap.add_argument("--threads", type=int, default=1)
    return ap.parse_args()


if __name__ == "__main__":
    args = parse_args()
    cfg = load_config(args.config, [f"num_drops={args.drops}", f"blocks_per_drop={args.blocks}"])
    results = run_simulation(cfg.scenario(), threads=args.threads)
    levels = [lvl for lvl in ("1", "2", "3", "4") if lvl in cfg.simulation.levels]
    print("drop " + " ".join(f"{'L' + lvl:>9}" for lvl in levels) + f"{'SIC':>9}{'gain':>8}")
    gains = []
    for i, res in enumerate(results):
        sums = res.sum_se()
        gain = (sums["sic"] - sums["4"]) / sums["4"]
        gains.append(gain)
        print(f"{i:4d} " + " ".join(f"{sums[lvl]:9.2f}" for lvl in levels) + f"{sums['sic']:9.2f}{gain:8.2%}")
    print(f"mean SIC gain over Level 4: {np.mean(gains):.2%}")
