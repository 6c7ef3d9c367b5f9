"""Achievable SE for the four cooperation levels, closed-form small cells and MMSE-SIC.

Per-block SINR helpers return arrays with the block axis first; the
``se_*`` reducers turn them into per-UE spectral efficiencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy import special

from .combining import LSFDStatistics, block_diagonal, centralized_matrix, local_matrix
from .estimation import ChannelEstimateSet
from .linalg import cholesky, hermitian_logdet, hermitian_solve, quad_form

SMALL_ARGUMENT = 1e-3


@dataclass
class SEResult:
    per_ue_se: dict  # level label -> (K,) bit/s/Hz
    prelog: float
    sum_se_sic: float | None = None
    serving_ap: np.ndarray | None = None
    serving_ap_closed_form: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)
    blocks: dict = field(default_factory=dict)  # optional per-block arrays

    def sum_se(self) -> dict:
        out = {level: float(np.sum(se)) for level, se in self.per_ue_se.items()}
        if self.sum_se_sic is not None:
            out["sic"] = self.sum_se_sic
        return out


@dataclass(frozen=True)
class ClosedFormL1Params:
    A: np.ndarray  # (K, L) pilot-contamination ratio
    omega: np.ndarray  # (K, L) effective SNR parameter


def prelog_factor(tau_c: int, tau_p: int) -> float:
    return 1.0 - tau_p / tau_c


# --- per-block SINRs -------------------------------------------------------


def _error_plus_noise(estimates: ChannelEstimateSet, powers, sigma2) -> np.ndarray:
    N = estimates.C.shape[-1]
    return np.einsum("k,klmn->lmn", np.asarray(powers, dtype=float), estimates.C) + sigma2 * np.eye(N)


def collective_sinr(v: np.ndarray, estimates: ChannelEstimateSet, powers, sigma2: float) -> np.ndarray:
    """Level-4 effective SINR for arbitrary collective combiners ``v`` (B, K, L, N)."""
    p = np.asarray(powers, dtype=float)
    # cross[b, k, i] = v_k^H h_hat_i
    cross = np.einsum("bkln,biln->bki", np.conj(v), estimates.h_hat)
    power = np.abs(cross) ** 2 * p[None, None, :]
    signal = np.einsum("bkk->bk", power)
    interference = power.sum(axis=2) - signal
    noise = np.einsum("bklm,lmn,bkln->bk", np.conj(v), _error_plus_noise(estimates, p, sigma2), v).real
    return _ratio(signal, interference + noise)


def _ratio(num, den):
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(num > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return np.where(den > 0, out, 0.0)


def mmse_sinr(estimates: ChannelEstimateSet, powers, sigma2: float) -> np.ndarray:
    """Maximized Level-4 SINR ``p_k h_hat_k^H (A - p_k h_hat_k h_hat_k^H)^-1 h_hat_k``.

    Uses one factorization of the full matrix ``A`` and the rank-one update
    identity ``q / (1 - p q)`` with ``q = h_hat_k^H A^-1 h_hat_k``.
    """
    p = np.asarray(powers, dtype=float)
    H = estimates.collective()
    X = hermitian_solve(centralized_matrix(estimates, p, sigma2), H)
    q = np.real(np.einsum("bmk,bmk->bk", np.conj(H), X))
    return _sm_sinr(p * q)


def _sm_sinr(pq):
    return _ratio(pq, 1.0 - pq)


def local_sinr(v: np.ndarray, estimates: ChannelEstimateSet, powers, sigma2: float) -> np.ndarray:
    """Level-1 per-AP effective SINR for local combiners ``v`` (B, K, L, N): ``(B, K, L)``."""
    p = np.asarray(powers, dtype=float)
    cross = np.einsum("bkln,biln->bkil", np.conj(v), estimates.h_hat)
    power = np.abs(cross) ** 2 * p[None, None, :, None]
    signal = np.einsum("bkkl->bkl", power)
    interference = power.sum(axis=2) - signal
    noise = np.einsum("bklm,lmn,bkln->bkl", np.conj(v), _error_plus_noise(estimates, p, sigma2), v).real
    return _ratio(signal, interference + noise)


def local_mmse_sinr(estimates: ChannelEstimateSet, powers, sigma2: float) -> np.ndarray:
    """Level-1 SINR at every AP with L-MMSE combining: ``(B, K, L)``."""
    p = np.asarray(powers, dtype=float)
    A = local_matrix(estimates, p, sigma2)  # (B, L, N, N)
    hh = np.moveaxis(estimates.h_hat, 1, 3)  # (B, L, N, K)
    X = hermitian_solve(A, hh)
    q = np.real(np.einsum("blnk,blnk->bkl", np.conj(hh), X))
    return _sm_sinr(p[None, :, None] * q)


def lsfd_sinr(a: np.ndarray, stats: LSFDStatistics, sigma2: float, diagnostics: dict | None = None) -> np.ndarray:
    """Level-3 effective SINR for weight vectors ``a`` (K, L)."""
    p = stats.powers
    mu = stats.mean_gain
    signal = p * np.abs(np.einsum("kl,kl->k", np.conj(a), mu)) ** 2
    total = quad_form(stats.interference, a)
    noise = sigma2 * np.einsum("kl,kl->k", stats.combiner_power, np.abs(a) ** 2)
    den = total - signal + noise
    return _clamped(signal, den, diagnostics)


def _clamped(signal, den, diagnostics):
    bad = den <= 0
    if diagnostics is not None:
        diagnostics["nonpositive_denominator"] = diagnostics.get("nonpositive_denominator", 0) + int(bad.sum())
    return _ratio(signal, den)


def level2_sinr(stats: LSFDStatistics, sigma2: float, diagnostics: dict | None = None) -> np.ndarray:
    """Level-2 SINR (plain averaging of the local data estimates)."""
    p = stats.powers
    signal = p * np.abs(stats.mean_gain.sum(axis=1)) ** 2
    total = np.real(stats.interference.sum(axis=(1, 2)))
    noise = sigma2 * stats.combiner_power.sum(axis=1)
    return _clamped(signal, total - signal + noise, diagnostics)


def lsfd_optimal_sinr(stats: LSFDStatistics, sigma2: float, diagnostics: dict | None = None) -> np.ndarray:
    """Maximized Level-3 SINR ``p mu^H (sum_i p_i E{g g^H} + sigma2 D - p mu mu^H)^-1 mu``."""
    p = stats.powers
    mu = stats.mean_gain
    K, L = mu.shape
    G = (
        stats.interference
        + sigma2 * np.einsum("kl,lm->klm", stats.combiner_power, np.eye(L))
        - p[:, None, None] * np.einsum("kl,km->klm", mu, np.conj(mu))
    )
    out = np.zeros(K)
    bad = 0
    for k in range(K):
        try:
            out[k] = p[k] * np.real(np.vdot(mu[k], hermitian_solve(G[k], mu[k])))
        except np.linalg.LinAlgError:
            bad += 1
    if diagnostics is not None:
        diagnostics["nonpositive_denominator"] = diagnostics.get("nonpositive_denominator", 0) + bad
    return np.clip(out, 0.0, None)


def sic_logdet(estimates: ChannelEstimateSet, powers, sigma2: float) -> np.ndarray:
    """``log2 det(I_K + P H^H E^-1 H)`` per block, ``E = sum_i p_i C_i + sigma2 I``."""
    p = np.asarray(powers, dtype=float)
    H = estimates.collective()  # (B, LN, K)
    E = block_diagonal(_error_plus_noise(estimates, p, sigma2))
    lower = cholesky(E)
    W = _tri_solve(lower, H)
    sq = np.sqrt(p)
    G = np.einsum("bmi,bmj->bij", np.conj(W), W) * sq[None, :, None] * sq[None, None, :]
    G = G + np.eye(len(p))
    return hermitian_logdet(G) / math.log(2.0)


def _tri_solve(lower, H):
    B, LN, K = H.shape
    W = sla.solve_triangular(lower, np.swapaxes(H, 0, 1).reshape(LN, B * K), lower=True, check_finite=False)
    return np.swapaxes(W.reshape(LN, B, K), 0, 1)


# --- reducers ----------------------------------------------------------------


def block_average_log(sinr: np.ndarray) -> np.ndarray:
    """Mean of ``log2(1 + sinr)`` over the block axis."""
    return np.mean(np.log2(1.0 + sinr), axis=0)


def se_level4(sinr_blocks: np.ndarray, prelog: float) -> np.ndarray:
    return prelog * block_average_log(sinr_blocks)


def se_level3(sinr: np.ndarray, prelog: float) -> np.ndarray:
    return prelog * np.log2(1.0 + sinr)


se_level2 = se_level3


def se_level1(sinr_blocks: np.ndarray, prelog: float):
    """Per-UE SE with the best AP; returns ``(se, serving_ap)``, ties to the lowest index."""
    per_ap = block_average_log(sinr_blocks)  # (K, L)
    serving = np.argmax(per_ap, axis=1)
    return prelog * per_ap[np.arange(per_ap.shape[0]), serving], serving


def sum_se_mmse_sic(logdet_blocks: np.ndarray, prelog: float) -> float:
    return float(prelog * np.mean(logdet_blocks))


# --- exponential integral and closed-form small cells ----------------------


def exp1(x) -> np.ndarray:
    """Exponential integral ``E1(x) = int_1^inf exp(-x u)/u du`` for ``x > 0``."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("E1 is only defined here for positive arguments")
    return special.exp1(x)


def scaled_exp1(x) -> np.ndarray:
    """``exp(x) E1(x)`` without overflow for large ``x`` (Tricomi ``U(1, 1, x)``)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("E1 is only defined here for positive arguments")
    return special.hyperu(1.0, 1.0, x)


def log_gain_term(x) -> np.ndarray:
    """``exp(1/x) E1(1/x)`` (= E{ln(1 + x |g|^2)}, g ~ CN(0,1)); zero at ``x = 0``.

    Below ``SMALL_ARGUMENT`` the asymptotic series ``x - x^2 + 2x^3 - 6x^4`` is used.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    small = (x > 0) & (x < SMALL_ARGUMENT)
    big = x >= SMALL_ARGUMENT
    xs = x[small]
    out[small] = xs * (1.0 - xs * (1.0 - xs * (2.0 - 6.0 * xs)))
    out[big] = scaled_exp1(1.0 / x[big])
    return out


def closed_form_params(beta, pilot_of_ue, powers, tau_p: int, sigma2: float) -> ClosedFormL1Params:
    """``A_kl`` and ``omega_kl`` for single-antenna APs with MMSE estimation."""
    beta = np.asarray(beta, dtype=float)
    p = np.asarray(powers, dtype=float)
    pilots = np.asarray(pilot_of_ue)
    K, L = beta.shape
    same = pilots[:, None] == pilots[None, :]  # same[k, i]: i in P_k
    psi = sigma2 + tau_p * (same.astype(float) @ (p[:, None] * beta))  # (K, L): Psi_{t_k l}
    C = beta - p[:, None] * tau_p * beta**2 / psi  # C_il (row i)
    pb = p[:, None] * beta
    others = same & ~np.eye(K, dtype=bool)
    A = (others.astype(float) @ pb**2) / pb**2
    interference = (~same).astype(float) @ pb + same.astype(float) @ (p[:, None] * C) + sigma2
    omega = p[:, None] ** 2 * tau_p * beta**2 / (psi * interference)
    return ClosedFormL1Params(A, omega)


def se_level1_closed_form(params: ClosedFormL1Params, prelog: float = 1.0) -> np.ndarray:
    """Small-cell SE of UE k at AP l (bit/s/Hz) for local MR-type decoding, N = 1."""
    omega = np.asarray(params.omega, dtype=float)
    A = np.asarray(params.A, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("omega must be positive")
    return prelog * (log_gain_term(omega * (1.0 + A)) - log_gain_term(omega * A)) / math.log(2.0)
