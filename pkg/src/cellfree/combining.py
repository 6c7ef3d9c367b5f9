"""Receive combining (MR, local MMSE, centralized MMSE) and LSFD weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimation import ChannelEstimateSet
from .linalg import hermitian_solve, hermitize

SCHEMES = ("mr", "lmmse", "mmse")


@dataclass(frozen=True)
class CombinerSet:
    local_v: np.ndarray | None  # (B, K, L, N)
    collective_v: np.ndarray | None  # (B, K, L, N); v_k is the flattened (L*N,) slice
    scheme: str


@dataclass(frozen=True)
class LSFDStatistics:
    """Monte-Carlo moments of the receive-combined channels ``g_ki``.

    ``interference[k]`` is ``sum_i p_i E{g_ki g_ki^H}`` with the powers
    already applied, which keeps memory at O(K L^2).
    """

    mean_gain: np.ndarray  # (K, L)  E{g_kk}
    interference: np.ndarray  # (K, L, L)
    combiner_power: np.ndarray  # (K, L)  E{||v_kl||^2}, the diagonal of D_k
    powers: np.ndarray  # (K,)
    num_blocks: int

    def D(self, k: int) -> np.ndarray:
        return np.diag(self.combiner_power[k])


@dataclass(frozen=True)
class LSFDWeights:
    a: np.ndarray  # (K, L)
    stats: LSFDStatistics


def mr_combiner(estimates: ChannelEstimateSet) -> CombinerSet:
    return CombinerSet(estimates.h_hat, estimates.h_hat, "mr")


def _weighted_error(estimates: ChannelEstimateSet, powers) -> np.ndarray:
    # sum_i p_i C_il : (L, N, N)
    return np.einsum("k,klmn->lmn", np.asarray(powers, dtype=float), estimates.C)


def centralized_matrix(estimates: ChannelEstimateSet, powers, sigma2: float) -> np.ndarray:
    """``sum_i p_i (h_hat_i h_hat_i^H + C_i) + sigma2 I`` per block: ``(B, LN, LN)``."""
    H = estimates.collective()
    B, LN, K = H.shape
    p = np.asarray(powers, dtype=float)
    A = (H * p) @ np.conj(np.swapaxes(H, 1, 2))
    A = A + block_diagonal(_weighted_error(estimates, p) + sigma2 * np.eye(estimates.C.shape[-1]))
    return hermitize(A)


def block_diagonal(blocks: np.ndarray) -> np.ndarray:
    """Dense block-diagonal matrix from ``(L, N, N)`` blocks."""
    L, N, _ = blocks.shape
    out = np.zeros((L * N, L * N), dtype=blocks.dtype)
    for l in range(L):
        out[l * N : (l + 1) * N, l * N : (l + 1) * N] = blocks[l]
    return out


def centralized_mmse_combiner(estimates: ChannelEstimateSet, powers, sigma2: float) -> CombinerSet:
    """``v_k = p_k (sum_i p_i (h_hat_i h_hat_i^H + C_i) + sigma2 I)^-1 h_hat_k``.

    One factorization per block serves all K right-hand sides.
    """
    p = np.asarray(powers, dtype=float)
    H = estimates.collective()
    V = hermitian_solve(centralized_matrix(estimates, p, sigma2), H * p)
    B, K, L, N = estimates.h_hat.shape
    return CombinerSet(None, np.swapaxes(V, 1, 2).reshape(B, K, L, N), "mmse")


def local_matrix(estimates: ChannelEstimateSet, powers, sigma2: float) -> np.ndarray:
    """``sum_i p_i (h_hat_il h_hat_il^H + C_il) + sigma2 I_N`` per block and AP: ``(B, L, N, N)``."""
    p = np.asarray(powers, dtype=float)
    hh = estimates.h_hat
    A = np.einsum("k,bklm,bkln->blmn", p, hh, np.conj(hh))
    return hermitize(A + _weighted_error(estimates, p) + sigma2 * np.eye(hh.shape[-1]))


def local_mmse_combiner(estimates: ChannelEstimateSet, powers, sigma2: float) -> CombinerSet:
    """L-MMSE: each AP solves its own N x N system for all UEs at once."""
    p = np.asarray(powers, dtype=float)
    A = local_matrix(estimates, p, sigma2)
    rhs = np.swapaxes(estimates.h_hat, 1, 2).swapaxes(2, 3) * p  # (B, L, N, K)
    V = hermitian_solve(A, rhs)
    return CombinerSet(np.moveaxis(V, 3, 1), None, "lmmse")


def local_combiners(estimates: ChannelEstimateSet, powers, sigma2: float, scheme: str) -> np.ndarray:
    """Local vectors ``v_kl`` for Levels 1-3: MR for ``mr``, L-MMSE otherwise."""
    if scheme == "mr":
        return estimates.h_hat
    return local_mmse_combiner(estimates, powers, sigma2).local_v


def collective_combiners(estimates: ChannelEstimateSet, powers, sigma2: float, scheme: str, local_v=None):
    """Level-4 vectors: MR, stacked L-MMSE (``lmmse``) or centralized MMSE."""
    if scheme == "mr":
        return estimates.h_hat
    if scheme == "lmmse":
        return local_mmse_combiner(estimates, powers, sigma2).local_v if local_v is None else local_v
    return centralized_mmse_combiner(estimates, powers, sigma2).collective_v


class LSFDAccumulator:
    """Streams blocks of (local combiners, true channels) into LSFD moments."""

    def __init__(self, num_ues: int, num_aps: int, powers):
        self.powers = np.asarray(powers, dtype=float)
        self.mean = np.zeros((num_ues, num_aps), dtype=complex)
        self.second = np.zeros((num_ues, num_aps, num_aps), dtype=complex)
        self.norms = np.zeros((num_ues, num_aps))
        self.count = 0

    def add(self, local_v: np.ndarray, h: np.ndarray) -> None:
        # g[b, k, i, l] = v_kl^H h_il
        g = np.einsum("bkln,biln->bkil", np.conj(local_v), h)
        B, K, _, L = g.shape
        self.mean += np.einsum("bkkl->kl", g)
        x = (g * np.sqrt(self.powers)[None, None, :, None]).transpose(1, 0, 2, 3).reshape(K, B * K, L)
        x = np.ascontiguousarray(x)  # matmul leaves BLAS for odd strides
        self.second += np.swapaxes(x, 1, 2) @ np.conj(x)
        self.norms += np.sum(np.real(local_v * np.conj(local_v)), axis=(0, 3))
        self.count += B

    def finalize(self) -> LSFDStatistics:
        n = self.count
        return LSFDStatistics(self.mean / n, hermitize(self.second / n), self.norms / n, self.powers, n)


def estimate_lsfd_statistics(local_v: np.ndarray, h: np.ndarray, powers) -> LSFDStatistics:
    acc = LSFDAccumulator(h.shape[1], h.shape[2], powers)
    acc.add(local_v, h)
    return acc.finalize()


def lsfd_weights(stats: LSFDStatistics, sigma2: float) -> LSFDWeights:
    """Optimal LSFD vectors ``a_k = (sum_i p_i E{g_ki g_ki^H} + sigma2 D_k)^-1 E{g_kk}``."""
    A = stats.interference + sigma2 * np.einsum("kl,lm->klm", stats.combiner_power, np.eye(stats.mean_gain.shape[1]))
    a = hermitian_solve(A, stats.mean_gain)
    return LSFDWeights(a, stats)
