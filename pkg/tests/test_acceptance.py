"""Acceptance gate: one test per criterion, each printing a single PASS/FAIL line."""

import math
import shutil
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate

from cellfree import combining as Cb
from cellfree import estimation as E
from cellfree import se as S
from cellfree.cellular import cellular_sinr_mmmse, cellular_sinr_mr
from cellfree.cli import main
from cellfree.fronthaul import fronthaul_table, sweep
from cellfree.geometry import LayoutConfig
from cellfree.harness import PropagationConfig, Scenario, SimulationPlan, aggregate, run_drop, run_simulation

from conftest import random_instance, random_psd

DESK = LayoutConfig(num_aps=64, antennas_per_ap=1, num_ues=16, num_pilots=8, cellular_cells=0)
DESK_SEED = 2024


def report(capsys, number, ok, detail, elapsed):
    with capsys.disabled():
        print(f"\nACCEPTANCE criterion {number}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f} s) {detail}")


def _repeat(est, times):
    return E.ChannelEstimateSet(np.repeat(est.h_hat, times, axis=0), est.C, est.Psi, est.estimator)


def _noise(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_criterion_1_optimality_suite(capsys):
    t0 = time.time()
    rng = np.random.default_rng(101)
    worst_gap, worst_rel, count = 0.0, 0.0, 0
    for _ in range(100):
        inst = random_instance(rng, blocks=1)
        est, p, s2 = inst["est"], inst["p"], inst["sigma2"]
        K, L, N = est.h_hat.shape[1:]
        rel = lambda a, b: float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))

        # centralized: generic SINR at the MMSE combiner vs the closed maximum and vs 100 random combiners
        v = Cb.centralized_mmse_combiner(est, p, s2).collective_v
        best = S.collective_sinr(v, est, p, s2)[0]
        worst_rel = max(worst_rel, rel(best, S.mmse_sinr(est, p, s2)[0]))
        others = S.collective_sinr(_noise(rng, (100, K, L, N)), _repeat(est, 100), p, s2)
        worst_gap = max(worst_gap, float(np.max(others / best)) - 1)

        # local combining + LSFD: statistics from fresh realizations of the same drop
        h = E.sample_channels(inst["R"], rng, 200)
        est2 = E.mmse_estimate(E.despread_pilots(h, inst["pilots"], p, inst["tau_p"], s2, rng), inst["R"])
        stats = Cb.estimate_lsfd_statistics(Cb.local_combiners(est2, p, s2, "lmmse"), h, p)
        a = Cb.lsfd_weights(stats, s2).a
        best3 = S.lsfd_sinr(a, stats, s2)
        worst_rel = max(worst_rel, rel(best3, S.lsfd_optimal_sinr(stats, s2)))
        for _ in range(100):
            worst_gap = max(worst_gap, float(np.max(S.lsfd_sinr(_noise(rng, a.shape), stats, s2) / best3)) - 1)

        # small cells: per-AP SINR at L-MMSE vs the closed maximum and random local combiners
        vl = Cb.local_mmse_combiner(est, p, s2).local_v
        best1 = S.local_sinr(vl, est, p, s2)[0]
        worst_rel = max(worst_rel, rel(best1, S.local_mmse_sinr(est, p, s2)[0]))
        others1 = S.local_sinr(_noise(rng, (100, K, L, N)), _repeat(est, 100), p, s2)
        worst_gap = max(worst_gap, float(np.max(others1 / np.maximum(best1, 1e-300))) - 1)
        count += 1
    elapsed = time.time() - t0
    ok = worst_rel <= 1e-9 and worst_gap <= 1e-9 and elapsed < 60 and count >= 100
    report(capsys, 1, ok, f"{count} instances, max rel. deviation from closed maximum {worst_rel:.1e}, "
           f"max random-combiner excess {max(worst_gap, 0):.1e}", elapsed)
    assert ok


def test_criterion_2_estimator_statistics(capsys):
    t0 = time.time()
    rng = np.random.default_rng(202)
    R = np.stack([random_psd(rng, 2, 1.5)[None], random_psd(rng, 2, 0.8)[None]])  # two co-pilot UEs, one AP
    pilots, p, tau_p, s2 = np.array([0, 0]), np.array([1.0, 0.7]), 1, 0.5
    h = E.sample_channels(R, rng, 100_000)
    est = E.mmse_estimate(E.despread_pilots(h, pilots, p, tau_p, s2, rng), R)
    psi = tau_p * (p[0] * R[0, 0] + p[1] * R[1, 0]) + s2 * np.eye(2)
    worst = {"estimate": 0.0, "error": 0.0, "cross": 0.0}
    for k in range(2):
        hh, err = est.h_hat[:, k, 0], (h - est.h_hat)[:, k, 0]
        n = len(hh)
        cov_hat = hh.T @ hh.conj() / n
        cov_err = err.T @ err.conj() / n
        cross = hh.T @ err.conj() / n
        ref_hat = p[k] * tau_p * R[k, 0] @ np.linalg.inv(psi) @ R[k, 0]
        ref_err = R[k, 0] - ref_hat
        nr = np.linalg.norm(R[k, 0])
        worst["estimate"] = max(worst["estimate"], np.linalg.norm(cov_hat - ref_hat) / np.linalg.norm(ref_hat))
        worst["error"] = max(worst["error"], np.linalg.norm(cov_err - ref_err) / np.linalg.norm(ref_err))
        worst["cross"] = max(worst["cross"], np.linalg.norm(cross) / nr)
        np.testing.assert_allclose(est.C[k, 0], ref_err, atol=1e-12)
    elapsed = time.time() - t0
    ok = worst["estimate"] < 0.05 and worst["error"] < 0.05 and worst["cross"] < 0.02 and elapsed < 60
    report(capsys, 2, ok, ", ".join(f"{k} {v:.2%}" for k, v in worst.items()), elapsed)
    assert ok


def test_criterion_3_closed_form_small_cells(capsys):
    t0 = time.time()
    rng = np.random.default_rng(303)
    worst_mc, worst_quad = 0.0, 0.0
    X = rng.exponential(size=1_000_000)  # |g|^2 for g ~ CN(0, 1)
    for i in range(50):
        omega = 10 ** rng.uniform(-2, 2)
        A = 0.0 if i % 5 == 0 else 10 ** rng.uniform(-2, 1)
        cf = S.se_level1_closed_form(S.ClosedFormL1Params(np.array([[A]]), np.array([[omega]])))[0, 0]
        mc = np.mean(np.log2(1 + omega * X / (1 + omega * A * X)))
        f = lambda t: math.log2(1 + omega * t / (1 + omega * A * t)) * math.exp(-t)
        quad = integrate.quad(f, 0, math.inf, epsrel=1e-11, limit=200)[0]
        worst_mc = max(worst_mc, abs(cf - mc) / mc)
        worst_quad = max(worst_quad, abs(cf - quad) / quad)
    t = S.SMALL_ARGUMENT
    stabilized = float(S.log_gain_term(np.nextafter(t, 0)))
    naive = float(S.scaled_exp1(1 / t))
    branch = abs(stabilized - naive) / naive
    elapsed = time.time() - t0
    ok = worst_mc < 0.01 and worst_quad < 0.01 and branch < 1e-3 and elapsed < 300
    report(capsys, 3, ok, f"max rel. error vs Monte-Carlo {worst_mc:.2e}, vs quadrature {worst_quad:.1e}, "
           f"branch mismatch at threshold {branch:.1e}", elapsed)
    assert ok


@pytest.fixture(scope="module")
def desk_drops():
    plan = SimulationPlan(num_drops=20, blocks_per_drop=200, stats_blocks=500, levels=("2", "3", "4", "sic"),
                          combiner="mmse", master_seed=DESK_SEED)
    scenario = Scenario(DESK, plan, PropagationConfig(), cellular=False)
    scenario.validate()
    t0 = time.time()
    drops = [run_drop(scenario, i, keep_blocks=True) for i in range(plan.num_drops)]
    return drops, time.time() - t0


def test_criterion_4_level_ordering(capsys, desk_drops):
    drops, elapsed = desk_drops
    gap3 = min(float(np.min(d.per_ue_se["3"] - d.per_ue_se["2"])) for d in drops)
    gap_sic = min(
        float(np.min(d.blocks["sic_logdet"] - np.log2(1 + d.blocks["sinr4"]).sum(axis=1))) for d in drops
    )
    ok = gap3 >= -1e-9 and gap_sic >= -1e-9 and elapsed < 600
    report(capsys, 4, ok, f"min SE(L3)-SE(L2) {gap3:.3e}, min per-block SIC minus sum L4 {gap_sic:.3e} bit/s/Hz "
           f"over {len(drops)} drops", elapsed)
    assert ok


def test_criterion_5_sic_gain(capsys, desk_drops):
    drops, elapsed = desk_drops
    gains = [(d.sum_se_sic - d.sum_se()["4"]) / d.sum_se()["4"] for d in drops]
    mean_gain = float(np.mean(gains))
    ok = 0.0 <= mean_gain <= 0.05
    report(capsys, 5, ok, f"mean relative sum-SE gain of MMSE-SIC over L4 {mean_gain:.2%}", elapsed)
    assert ok


def test_criterion_6_mr_versus_local_mmse(capsys):
    t0 = time.time()

    def run(combiner, levels):
        plan = SimulationPlan(num_drops=20, blocks_per_drop=200, stats_blocks=500, levels=levels,
                              combiner=combiner, master_seed=DESK_SEED)
        return aggregate(run_simulation(Scenario(DESK, plan, PropagationConfig(), cellular=False)))

    mr = run("mr", ("2",))
    lm = run("lmmse", ("1", "2"))
    l2_mr, l1, l2_lm = (float(s.quantile(lvl, 0.5)) for s, lvl in ((mr, "2"), (lm, "1"), (lm, "2")))
    elapsed = time.time() - t0
    ok = l2_mr < l1 and l2_lm > 1.5 * l2_mr and elapsed < 900
    report(capsys, 6, ok, f"medians: L2 MR {l2_mr:.3f}, L1 small cells {l1:.3f}, L2 L-MMSE {l2_lm:.3f} "
           f"({l2_lm / l2_mr:.2f}x MR)", elapsed)
    assert ok


def _table_by_hand(tau_c, tau_p, N, L, K):
    return (
        {"1": 0, "2": (tau_c - tau_p) * K, "3": (tau_c - tau_p) * K, "4": tau_c * N},
        {"1": 0, "2": 0, "3": Fraction(2 * K * L + L * L * K * K + K * L, 2), "4": Fraction(K * L * N * N, 2)},
        Fraction(tau_c * N, (tau_c - tau_p) * K),
    )


def test_criterion_7_fronthaul_exactness(capsys):
    t0 = time.time()
    rng = np.random.default_rng(707)
    mismatches = 0
    for _ in range(1000):
        tau_c = int(rng.integers(2, 100_000))
        tau_p = int(rng.integers(1, tau_c))
        N, L, K = (int(x) for x in rng.integers(1, [65, 1001, 501]))
        r = fronthaul_table(tau_c, tau_p, N, L, K)
        per_block, stats, ratio = _table_by_hand(tau_c, tau_p, N, L, K)
        same = (
            r.per_block_per_ap == per_block
            and r.statistical_params == stats
            and r.ratio_l4_vs_l23 == ratio
            and r.per_channel_use_per_ap == {k: Fraction(v, tau_c) for k, v in per_block.items()}
        )
        mismatches += not same
    rows = {row["tau_c"]: row["level4_less_signaling"] for row in sweep(range(11, 1001), 10, 4, 100, 40)}
    first_less = min(t for t, less in rows.items() if less)
    crossing_ok = not rows[11] and rows[12] and all(rows[t] for t in range(12, 1001))
    big = fronthaul_table(10**6, 10, 4, 100, 40)
    limit_dev = abs(float(1 / big.ratio_l4_vs_l23) - 40 / 4)
    elapsed = time.time() - t0
    exact_ok = mismatches == 0 and crossing_ok and first_less == 12 and elapsed < 10
    report(capsys, "7 (exactness, crossover)", exact_ok,
           f"{mismatches} mismatches in 1000 tuples; Level 4 lighter from tau_c = {first_less}", elapsed)
    report(capsys, "7 (limit at tau_c = 1e6)", limit_dev <= 1e-6,
           f"|L2/L4 - K/N| = {limit_dev:.6e}; exact value is (K/N) tau_p/(tau_c - tau_p) away from the limit", elapsed)
    assert exact_ok


@pytest.mark.xfail(strict=True, reason="at tau_c = 1e6 the exact load ratio is 1e-4 away from K/N = 10 (tau_p = 10)")
def test_criterion_7_limit_tolerance():
    big = fronthaul_table(10**6, 10, 4, 100, 40)
    assert abs(float(1 / big.ratio_l4_vs_l23) - 10) <= 1e-6


def test_criterion_8_determinism(capsys, tmp_path):
    t0 = time.time()
    outputs = []
    out = tmp_path / "run"  # same directory so the echoed config matches too
    for threads in (1, 2, 3):
        shutil.rmtree(out, ignore_errors=True)
        code = main(["simulate", "--config", "desk", "--override", "num_drops=6", "--override", "blocks_per_drop=50",
                     "--threads", str(threads), "--out", str(out)])
        assert code == 0
        outputs.append(((out / "samples.csv").read_bytes(), (out / "summary.json").read_bytes()))
    capsys.readouterr()
    identical = all(o == outputs[0] for o in outputs)
    elapsed = time.time() - t0
    ok = identical and elapsed < 300
    report(capsys, 8, ok, f"CSV and JSON byte-identical with 1, 2 and 3 worker processes: {identical}", elapsed)
    assert ok


def test_criterion_9_cellular_sanity(capsys):
    t0 = time.time()
    rng = np.random.default_rng(909)
    M = 16
    h_hat = _noise(rng, (50, 1, 1, M))
    est = E.ChannelEstimateSet(h_hat, np.zeros((1, 1, M, M), complex), np.eye(M)[None, None])
    p, s2 = np.array([0.3]), 0.9
    sinr = cellular_sinr_mmmse(est, np.array([0]), p, s2)[:, 0]
    ref = p[0] * np.sum(np.abs(h_hat[:, 0, 0]) ** 2, axis=-1) / s2
    single_dev = float(np.max(np.abs(sinr - ref) / ref))
    worst = math.inf
    for _ in range(100):
        Lc = int(rng.integers(2, 5))
        inst = random_instance(rng, K=int(rng.integers(2, 9)), L=Lc, N=int(rng.integers(2, 9)), blocks=2)
        K = inst["est"].h_hat.shape[1]
        cells = rng.integers(0, Lc, size=K)
        a = cellular_sinr_mmmse(inst["est"], cells, inst["p"], inst["sigma2"])
        b = cellular_sinr_mr(inst["est"], cells, inst["p"], inst["sigma2"])
        worst = min(worst, float(np.min(a / b)))
    elapsed = time.time() - t0
    ok = single_dev < 1e-12 and worst >= 1 - 1e-9 and elapsed < 60
    report(capsys, 9, ok, f"single-UE SINR rel. error {single_dev:.1e}; min M-MMSE/MR SINR ratio {worst:.4f}", elapsed)
    assert ok
