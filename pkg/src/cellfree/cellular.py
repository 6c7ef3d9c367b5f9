"""Cellular massive MIMO baseline: co-located M_c-antenna BSs, M-MMSE combining.

Structurally a cellular network is a cell-free network with L_c "APs" of
M_c antennas where UE k is decoded only by its own BS, so estimation and the
M-MMSE SINR reuse the cell-free machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimation import ChannelEstimateSet, PilotObservation, mmse_estimate
from .geometry import NetworkRealization, assign_cells
from .propagation import large_scale_fading, local_scattering_correlation
from .se import block_average_log, local_mmse_sinr, local_sinr


@dataclass(frozen=True)
class CellularRealization:
    network: NetworkRealization  # cell_of_ue filled in
    R: np.ndarray  # (K, L_c, M_c, M_c)
    beta: np.ndarray  # (K, L_c)

    @property
    def cell_of_ue(self) -> np.ndarray:
        return self.network.cell_of_ue


def build_cellular(
    network: NetworkRealization,
    model: str,
    rng: np.random.Generator,
    height_delta: float,
    num_antennas: int,
    angular_std_deg: float = 15.0,
    gain_offset_db: float = 0.0,
) -> CellularRealization:
    """Large-scale fading and correlation from every BS; shadowing drawn afresh.

    ``gain_offset_db`` is added to every gain (used to express gains relative
    to the noise floor).
    """
    lsf, angles = large_scale_fading(network, model, rng, height_delta, transmitters=network.bs_positions)
    beta = lsf.beta * 10.0 ** (gain_offset_db / 10.0)
    net = assign_cells(network, beta)
    R = local_scattering_correlation(beta, angles, angular_std_deg, num_antennas)
    return CellularRealization(net, R, beta)


def cellular_mmse_estimate(observation: PilotObservation, R: np.ndarray, filters=None) -> ChannelEstimateSet:
    """MMSE estimates at every BS for every UE (pilot reuse one across cells)."""
    return mmse_estimate(observation, R, filters)


def _serving(values: np.ndarray, cell_of_ue: np.ndarray) -> np.ndarray:
    return values[:, np.arange(values.shape[1]), np.asarray(cell_of_ue)]


def cellular_sinr_mmmse(estimates: ChannelEstimateSet, cell_of_ue, powers, sigma2: float) -> np.ndarray:
    """Per-block M-MMSE SINR of every UE at its serving BS: ``(B, K)``."""
    return _serving(local_mmse_sinr(estimates, powers, sigma2), cell_of_ue)


def cellular_sinr_mr(estimates: ChannelEstimateSet, cell_of_ue, powers, sigma2: float) -> np.ndarray:
    return _serving(local_sinr(estimates.h_hat, estimates, powers, sigma2), cell_of_ue)


def cellular_se_mmmse(sinr_blocks: np.ndarray, prelog: float) -> np.ndarray:
    return prelog * block_average_log(sinr_blocks)
