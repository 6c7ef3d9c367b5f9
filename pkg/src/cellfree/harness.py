"""Monte-Carlo orchestration: drops x coherence blocks, LSFD statistics, CDFs.

Each drop owns a ``SeedSequence([master_seed, drop_index])`` whose children
feed geometry, shadowing, the statistics pass, the evaluation pass and the
cellular baseline, so results do not depend on scheduling or worker count.
Gains are expressed relative to the noise floor (sigma2 = 1, powers in mW).
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from . import estimation as est_mod
from .cellular import build_cellular, cellular_se_mmmse, cellular_sinr_mmmse
from .combining import LSFDAccumulator, collective_combiners, local_combiners, lsfd_weights
from .geometry import ConfigurationError, LayoutConfig, place_network
from .propagation import MODELS, large_scale_fading, local_scattering_correlation
from .se import (
    SEResult,
    closed_form_params,
    collective_sinr,
    level2_sinr,
    local_mmse_sinr,
    local_sinr,
    lsfd_optimal_sinr,
    mmse_sinr,
    prelog_factor,
    se_level1,
    se_level1_closed_form,
    se_level2,
    se_level3,
    se_level4,
    sic_logdet,
    sum_se_mmse_sic,
)

log = logging.getLogger(__name__)

LEVELS = ("1", "2", "3", "4", "sic", "cellular", "1cf")
# order of per-UE rows in the samples file
ROW_LEVELS = ("1", "1cf", "2", "3", "4", "cellular")
QUANTILES = (0.05, 0.10, 0.50)
_CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class SimulationPlan:
    num_drops: int = 50
    blocks_per_drop: int = 200
    stats_blocks: int = 500
    levels: tuple = ("1", "2", "3", "4", "sic", "cellular")
    combiner: str = "mmse"
    estimator: str = "mmse"
    master_seed: int = 0
    power_mw: float = 100.0
    noise_dbm: float = -96.0
    tau_c: int = 200
    closed_form_prelog: bool = True

    def __post_init__(self):
        object.__setattr__(self, "levels", normalize_levels(self.levels))

    def validate(self, layout: LayoutConfig) -> None:
        for name in ("num_drops", "blocks_per_drop", "stats_blocks", "tau_c"):
            if int(getattr(self, name)) < 1:
                raise ConfigurationError(f"simulation.{name} must be a positive integer")
        if self.combiner not in ("mr", "lmmse", "mmse"):
            raise ConfigurationError("simulation.combiner must be one of mr, lmmse, mmse")
        if self.estimator not in ("mmse", "ls"):
            raise ConfigurationError("simulation.estimator must be mmse or ls")
        if layout.num_pilots >= self.tau_c:
            raise ConfigurationError("layout.num_pilots must be smaller than simulation.tau_c")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigurationError("simulation.master_seed must be a 64-bit unsigned integer")
        if self.power_mw <= 0:
            raise ConfigurationError("simulation.power_mw must be positive")
        if self.estimator == "ls" and set(self.levels) - {"2", "3"}:
            raise ConfigurationError("LS estimation is only supported for levels 2 and 3")
        if "1cf" in self.levels and layout.antennas_per_ap != 1:
            raise ConfigurationError("level 1cf (closed-form small cells) requires layout.antennas_per_ap = 1")
        if self.stats_blocks < 100 and ({"2", "3"} & set(self.levels)):
            log.warning("simulation.stats_blocks=%d is below the recommended floor of 100", self.stats_blocks)


def normalize_levels(levels) -> tuple:
    if isinstance(levels, (str, int)):
        levels = [levels]
    out = []
    for lvl in levels:
        s = str(lvl).strip().lower()
        if s not in LEVELS:
            raise ConfigurationError(f"simulation.levels: unknown level {lvl!r} (choose from {', '.join(LEVELS)})")
        if s not in out:
            out.append(s)
    if not out:
        raise ConfigurationError("simulation.levels must not be empty")
    return tuple(sorted(out, key=LEVELS.index))


@dataclass(frozen=True)
class PropagationConfig:
    model: str = "umi_3gpp"
    angular_std_deg: float = 15.0

    def validate(self) -> None:
        if self.model not in MODELS:
            raise ConfigurationError(f"propagation.model must be one of {', '.join(MODELS)}")
        if self.angular_std_deg < 0:
            raise ConfigurationError("propagation.angular_std_deg must be non-negative")


@dataclass(frozen=True)
class Scenario:
    """Everything ``run_drop`` needs; the CLI's ScenarioConfig wraps this."""

    layout: LayoutConfig = field(default_factory=LayoutConfig)
    plan: SimulationPlan = field(default_factory=SimulationPlan)
    propagation: PropagationConfig = field(default_factory=PropagationConfig)
    cellular: bool = True

    def validate(self) -> None:
        self.layout.validate()
        self.plan.validate(self.layout)
        self.propagation.validate()
        if "cellular" in self.plan.levels and not self.cellular:
            raise ConfigurationError("level 'cellular' requires cellular.enabled = true")
        if self.cellular and self.layout.cellular_cells < 1:
            raise ConfigurationError("cellular.enabled requires layout.cellular_cells >= 1")


def _chunk(total: int, per_block: int) -> int:
    return max(1, min(total, _CHUNK_ELEMENTS // max(per_block, 1)))


def _batches(total: int, size: int):
    done = 0
    while done < total:
        n = min(size, total - done)
        yield n
        done += n


def drop_seeds(master_seed: int, drop_index: int) -> list:
    return np.random.SeedSequence([int(master_seed), int(drop_index)]).spawn(6)


def run_drop(scenario: Scenario, drop_index: int, keep_blocks: bool = False) -> SEResult:
    """Simulate one drop and return per-UE SE for every enabled level."""
    with threadpool_limits(1):
        return _run_drop(scenario, drop_index, keep_blocks)


def _run_drop(scenario: Scenario, drop_index: int, keep_blocks: bool) -> SEResult:
    layout, plan, prop = scenario.layout, scenario.plan, scenario.propagation
    levels = set(plan.levels)
    rngs = [np.random.default_rng(s) for s in drop_seeds(plan.master_seed, drop_index)]
    geo_rng, shadow_rng, stats_rng, eval_rng, cell_shadow_rng, cell_rng = rngs

    if not scenario.cellular:
        layout = dataclasses.replace(layout, cellular_cells=0)
    net = place_network(layout, geo_rng)
    K, L, N = layout.num_ues, layout.num_aps, layout.antennas_per_ap
    tau_p = layout.num_pilots
    sigma2 = 1.0
    gain_offset = 10.0 ** (-plan.noise_dbm / 10.0)
    p = np.full(K, float(plan.power_mw))
    prelog = prelog_factor(plan.tau_c, tau_p)

    lsf, angles = large_scale_fading(net, prop.model, shadow_rng, layout.height_delta_m)
    beta = lsf.beta * gain_offset
    R = local_scattering_correlation(beta, angles, prop.angular_std_deg, N)

    if plan.estimator == "mmse":
        filters = est_mod.mmse_statistics(R, net.pilot_of_ue, p, tau_p, sigma2)

        def estimate(obs):
            return est_mod.mmse_estimate(obs, R, filters)
    else:

        def estimate(obs):
            return est_mod.ls_estimate(obs, R)

    def realize(rng, n):
        h = est_mod.sample_channels(R, rng, n)
        obs = est_mod.despread_pilots(h, net.pilot_of_ue, p, tau_p, sigma2, rng)
        return h, estimate(obs)

    per_ue: dict = {}
    diagnostics: dict = {"nonpositive_denominator": 0}
    result = SEResult(per_ue, prelog, diagnostics=diagnostics)

    # pass 1: moments of the receive-combined channels for Levels 2-3
    if levels & {"2", "3"}:
        acc = LSFDAccumulator(K, L, p)
        for n in _batches(plan.stats_blocks, _chunk(plan.stats_blocks, K * K * L + K * L * N * N)):
            h, est = realize(stats_rng, n)
            acc.add(local_combiners(est, p, sigma2, plan.combiner), h)
        stats = acc.finalize()
        if "2" in levels:
            per_ue["2"] = se_level2(level2_sinr(stats, sigma2, diagnostics), prelog)
        if "3" in levels:
            per_ue["3"] = se_level3(lsfd_optimal_sinr(stats, sigma2, diagnostics), prelog)
            result.blocks["lsfd_weights"] = lsfd_weights(stats, sigma2).a

    # pass 2: instantaneous-SINR levels on a shared pool of realizations
    if levels & {"1", "4", "sic"}:
        LN = L * N
        sinr1, sinr4, sic = [], [], []
        for n in _batches(plan.blocks_per_drop, _chunk(plan.blocks_per_drop, LN * LN + K * K * L + K * LN)):
            _, est = realize(eval_rng, n)
            local_v = None
            if "1" in levels:
                if plan.combiner == "mr":
                    sinr1.append(local_sinr(est.h_hat, est, p, sigma2))
                else:
                    sinr1.append(local_mmse_sinr(est, p, sigma2))
            if "4" in levels:
                if plan.combiner == "mmse":
                    sinr4.append(mmse_sinr(est, p, sigma2))
                else:
                    v = collective_combiners(est, p, sigma2, plan.combiner, local_v)
                    sinr4.append(collective_sinr(v, est, p, sigma2))
            if "sic" in levels:
                sic.append(sic_logdet(est, p, sigma2))
        if sinr1:
            per_ue["1"], result.serving_ap = se_level1(np.concatenate(sinr1), prelog)
        if sinr4:
            s4 = np.concatenate(sinr4)
            per_ue["4"] = se_level4(s4, prelog)
            if keep_blocks:
                result.blocks["sinr4"] = s4
        if sic:
            logdet = np.concatenate(sic)
            result.sum_se_sic = sum_se_mmse_sic(logdet, prelog)
            if keep_blocks:
                result.blocks["sic_logdet"] = logdet

    if "1cf" in levels:
        params = closed_form_params(beta, net.pilot_of_ue, p, tau_p, sigma2)
        se_kl = se_level1_closed_form(params, prelog if plan.closed_form_prelog else 1.0)
        serving = np.argmax(se_kl, axis=1)
        per_ue["1cf"] = se_kl[np.arange(K), serving]
        result.serving_ap_closed_form = serving

    if "cellular" in levels:
        cell = build_cellular(
            net,
            prop.model,
            cell_shadow_rng,
            layout.height_delta_m,
            layout.cellular_antennas,
            prop.angular_std_deg,
            gain_offset_db=-plan.noise_dbm,
        )
        cfilters = est_mod.mmse_statistics(cell.R, net.pilot_of_ue, p, tau_p, sigma2)
        M, Lc = layout.cellular_antennas, layout.cellular_cells
        sinr_c = []
        for n in _batches(plan.blocks_per_drop, _chunk(plan.blocks_per_drop, Lc * M * M + K * Lc * M)):
            h = est_mod.sample_channels(cell.R, cell_rng, n)
            obs = est_mod.despread_pilots(h, net.pilot_of_ue, p, tau_p, sigma2, cell_rng)
            est = est_mod.mmse_estimate(obs, cell.R, cfilters)
            sinr_c.append(cellular_sinr_mmmse(est, cell.cell_of_ue, p, sigma2))
        per_ue["cellular"] = cellular_se_mmmse(np.concatenate(sinr_c), prelog)
        result.blocks["cell_of_ue"] = cell.cell_of_ue

    return result


def _drop_job(args):
    scenario, index = args
    return run_drop(scenario, index)


def run_simulation(scenario: Scenario, threads: int = 1, progress=None) -> list[SEResult]:
    """Run every drop; output order is the drop order whatever ``threads`` is."""
    scenario.validate()
    indices = range(scenario.plan.num_drops)
    results = []
    if threads <= 1:
        for i in indices:
            results.append(run_drop(scenario, i))
            if progress:
                progress(i + 1, scenario.plan.num_drops)
        return results
    with ProcessPoolExecutor(max_workers=threads) as pool:
        for i, res in enumerate(pool.map(_drop_job, [(scenario, i) for i in indices])):
            results.append(res)
            if progress:
                progress(i + 1, scenario.plan.num_drops)
    return results


# --- aggregation -------------------------------------------------------------


@dataclass(frozen=True)
class CDFSummary:
    samples: dict  # level -> sorted per-UE SE samples
    sum_se: dict  # level -> sorted per-drop sum SE samples (includes "sic")

    def quantile(self, level: str, q) -> np.ndarray | float:
        """Quantile by linear interpolation between order statistics."""
        return np.quantile(self.samples[level], q)

    def mean(self, level: str) -> float:
        s = self.samples[level]
        return math.fsum(s) / len(s)

    def to_json(self) -> dict:
        out = {"per_ue": {}, "sum_se": {}}
        for level, s in self.samples.items():
            out["per_ue"][level] = {
                "count": int(len(s)),
                "mean": self.mean(level),
                **{f"q{q:.2f}": float(self.quantile(level, q)) for q in QUANTILES},
            }
        for level, s in self.sum_se.items():
            out["sum_se"][level] = {
                "count": int(len(s)),
                "mean": math.fsum(s) / len(s),
                **{f"q{q:.2f}": float(np.quantile(s, q)) for q in QUANTILES},
            }
        return out


def aggregate(results) -> CDFSummary:
    if not results:
        raise ValueError("aggregate needs at least one drop")
    samples: dict = {}
    sums: dict = {}
    for res in results:
        for level, se in res.per_ue_se.items():
            samples.setdefault(level, []).append(np.asarray(se, dtype=float))
        for level, value in res.sum_se().items():
            sums.setdefault(level, []).append(value)
    order = list(ROW_LEVELS) + ["sic"]
    return CDFSummary(
        {lvl: np.sort(np.concatenate(samples[lvl])) for lvl in order if lvl in samples},
        {lvl: np.sort(np.asarray(sums[lvl])) for lvl in order if lvl in sums},
    )


def write_samples_csv(results, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["drop", "level", "ue", "se_bits_per_hz"])
        for drop, res in enumerate(results):
            for level in ROW_LEVELS:
                if level in res.per_ue_se:
                    for ue, value in enumerate(res.per_ue_se[level]):
                        w.writerow([drop, level, ue, repr(float(value))])


def write_summary_json(summary: CDFSummary, results, config_echo: dict, path) -> None:
    doc = {
        "config": config_echo,
        **summary.to_json(),
        "sum_se_per_drop": {
            lvl: [res.sum_se().get(lvl) for res in results] for lvl in summary.sum_se
        },
        "diagnostics": {
            "nonpositive_denominator": int(sum(r.diagnostics.get("nonpositive_denominator", 0) for r in results))
        },
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=False)
        fh.write("\n")
