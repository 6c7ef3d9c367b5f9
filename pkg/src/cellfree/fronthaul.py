"""Fronthaul signaling load: complex scalars sent from the APs to the CPU."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction

from .geometry import ConfigurationError


@dataclass(frozen=True)
class FronthaulReport:
    tau_c: int
    tau_p: int
    antennas_per_ap: int
    num_aps: int
    num_ues: int
    per_block_per_ap: dict  # level -> int
    statistical_params: dict  # level -> Fraction (real scalars count as 1/2)
    per_channel_use_per_ap: dict  # level -> Fraction
    ratio_l4_vs_l23: Fraction
    serial_per_block_total: int

    def to_json(self) -> dict:
        d = asdict(self)
        for key in ("statistical_params", "per_channel_use_per_ap"):
            d[key] = {lvl: _num(v) for lvl, v in d[key].items()}
        d["ratio_l4_vs_l23"] = _num(self.ratio_l4_vs_l23)
        d["level4_less_signaling"] = self.ratio_l4_vs_l23 < 1
        return d


def _num(x: Fraction):
    x = Fraction(x)
    return x.numerator if x.denominator == 1 else float(x)


def _check(tau_c: int, tau_p: int) -> None:
    if tau_p >= tau_c:
        raise ConfigurationError(f"tau_p ({tau_p}) must be smaller than tau_c ({tau_c})")
    if tau_p < 1:
        raise ConfigurationError("tau_p must be positive")


def fronthaul_table(tau_c: int, tau_p: int, N: int, L: int, K: int) -> FronthaulReport:
    _check(tau_c, tau_p)
    data = (tau_c - tau_p) * K
    per_block = {"1": 0, "2": data, "3": data, "4": tau_c * N}
    stats = {
        "1": Fraction(0),
        "2": Fraction(0),
        "3": K * L + Fraction(L * L * K * K + K * L, 2),
        "4": Fraction(K * L * N * N, 2),
    }
    per_use = {lvl: Fraction(v, tau_c) for lvl, v in per_block.items()}
    return FronthaulReport(
        tau_c=tau_c,
        tau_p=tau_p,
        antennas_per_ap=N,
        num_aps=L,
        num_ues=K,
        per_block_per_ap=per_block,
        statistical_params=stats,
        per_channel_use_per_ap=per_use,
        ratio_l4_vs_l23=Fraction(tau_c, tau_c - tau_p) * Fraction(N, K),
        serial_per_block_total=serial_fronthaul_load(tau_c, tau_p, K, L),
    )


def serial_fronthaul_load(tau_c: int, tau_p: int, K: int, aps_on_wire: int) -> int:
    """Scalars per block on a shared wire for Levels 2-3; partial sums keep it at one per UE."""
    _check(tau_c, tau_p)
    if aps_on_wire < 1:
        raise ConfigurationError("aps_on_wire must be at least 1")
    return (tau_c - tau_p) * K


def star_total_per_block(tau_c: int, tau_p: int, K: int, L: int) -> int:
    """Levels 2-3 total over all APs with individual (star) links."""
    return (tau_c - tau_p) * K * L


def sweep(tau_c_values, tau_p: int, N: int, L: int, K: int) -> list[dict]:
    """Per-channel-use load per AP for each level over a range of block lengths."""
    rows = []
    for tau_c in tau_c_values:
        r = fronthaul_table(tau_c, tau_p, N, L, K)
        rows.append(
            {
                "tau_c": tau_c,
                "level4": float(r.per_channel_use_per_ap["4"]),
                "level3": float(r.per_channel_use_per_ap["3"]),
                "level2": float(r.per_channel_use_per_ap["2"]),
                "level1": 0.0,
                "level4_less_signaling": r.ratio_l4_vs_l23 < 1,
            }
        )
    return rows
