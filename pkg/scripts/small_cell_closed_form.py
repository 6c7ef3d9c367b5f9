"""Closed-form small-cell SE against Monte-Carlo over channel realizations.

Single-antenna APs, MMSE estimates, each AP decoding one UE with its own
estimate. Prints per-(UE, AP) relative errors for one random drop.
"""

import argparse

import numpy as np

from cellfree import estimation as E
from cellfree import se as S
from cellfree.geometry import LayoutConfig, place_network
from cellfree.propagation import large_scale_fading


def monte_carlo(beta, pilots, p, tau_p, blocks, rng):
    K, L = beta.shape
    R = beta[:, :, None, None].astype(complex)
    h = E.sample_channels(R, rng, blocks)
    est = E.mmse_estimate(E.despread_pilots(h, pilots, p, tau_p, 1.0, rng), R)
    hh = est.h_hat[..., 0]
    C = np.real(est.C[..., 0, 0])
    out = np.zeros((K, L))
    for k in range(K):
        same = pilots == pilots[k]
        copilot = (np.abs(hh) ** 2 * (p * same)[None, :, None]).sum(axis=1) - p[k] * np.abs(hh[:, k]) ** 2
        rest = (p * ~same) @ beta + (p * same) @ C + 1.0
        out[k] = np.mean(np.log2(1 + p[k] * np.abs(hh[:, k]) ** 2 / (copilot + rest)), axis=0)
    return out


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--blocks", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    layout = LayoutConfig(num_aps=16, num_ues=8, num_pilots=4, cellular_cells=0, ap_placement="uniform_random")
    net = place_network(layout, rng)
    lsf, _ = large_scale_fading(net, "three_slope", rng, layout.height_delta_m)
    beta = lsf.beta * 10 ** 9.2  # relative to -92 dBm noise
    p = np.full(layout.num_ues, 100.0)
    cf = S.se_level1_closed_form(S.closed_form_params(beta, net.pilot_of_ue, p, layout.num_pilots, 1.0))
    mc = monte_carlo(beta, net.pilot_of_ue, p, layout.num_pilots, args.blocks, rng)
    rel = np.abs(cf - mc) / mc
    print(f"max relative error {rel.max():.3%}, median {np.median(rel):.3%}")
    best = np.argmax(cf, axis=1)
    print("UE  AP  closed-form  Monte-Carlo")
    for k, l in enumerate(best):
        print(f"{k:2d} {l:3d} {cf[k, l]:12.4f} {mc[k, l]:12.4f}")
