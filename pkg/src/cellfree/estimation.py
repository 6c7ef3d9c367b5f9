"""Correlated Rayleigh channels, despread pilots, MMSE and LS channel estimates.

Arrays carry a leading block axis ``B`` (coherence-block realizations):
channels and estimates are ``(B, K, L, N)``, despread pilots ``(B, tau_p, L, N)``.
Second-order statistics (``R``, ``C``, ``Psi``) are per drop and have no block axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ConfigurationError
from .linalg import hermitian_solve, hermitize, psd_sqrt


@dataclass(frozen=True)
class PilotObservation:
    z: np.ndarray  # (B, tau_p, L, N)
    sigma2: float
    powers: np.ndarray  # (K,)
    tau_p: int
    pilot_of_ue: np.ndarray  # (K,)


@dataclass(frozen=True)
class ChannelEstimateSet:
    h_hat: np.ndarray  # (B, K, L, N)
    C: np.ndarray  # (K, L, N, N)
    Psi: np.ndarray  # (tau_p, L, N, N)
    estimator: str = "mmse"

    @property
    def num_blocks(self) -> int:
        return self.h_hat.shape[0]

    def collective(self) -> np.ndarray:
        """Stacked estimates ``(B, LN, K)`` (columns are UEs)."""
        B, K, L, N = self.h_hat.shape
        return np.swapaxes(self.h_hat.reshape(B, K, L * N), 1, 2)


def standard_complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def sample_channels(R: np.ndarray, rng: np.random.Generator, num_blocks: int = 1) -> np.ndarray:
    """Draw ``h_kl ~ CN(0, R_kl)`` independently per block: ``(B, K, L, N)``."""
    R = np.asarray(R)
    K, L, N, _ = R.shape
    w = standard_complex_normal(rng, (num_blocks, K, L, N))
    if N == 1:
        return np.sqrt(np.clip(np.real(R[..., 0, 0]), 0.0, None))[None, :, :, None] * w
    return np.einsum("klmn,bkln->bklm", psd_sqrt(R), w)


def despread_pilots(
    h: np.ndarray,
    pilot_of_ue: np.ndarray,
    powers: np.ndarray,
    tau_p: int,
    sigma2: float,
    rng: np.random.Generator,
) -> PilotObservation:
    """``z_tl = sum_{i: t_i = t} sqrt(p_i tau_p) h_il + n_tl`` with ``n ~ CN(0, sigma2 I)``."""
    B, K, L, N = h.shape
    powers = np.asarray(powers, dtype=float)
    mix = np.zeros((tau_p, K))
    mix[pilot_of_ue, np.arange(K)] = np.sqrt(powers * tau_p)
    z = np.einsum("tk,bkln->btln", mix, h)
    z = z + np.sqrt(sigma2) * standard_complex_normal(rng, z.shape)
    return PilotObservation(z, float(sigma2), powers, int(tau_p), np.asarray(pilot_of_ue))


def pilot_covariance(R: np.ndarray, pilot_of_ue, powers, tau_p: int, sigma2: float) -> np.ndarray:
    """``Psi_tl = sum_{i: t_i = t} tau_p p_i R_il + sigma2 I`` for every pilot: ``(tau_p, L, N, N)``."""
    K, L, N, _ = R.shape
    mix = np.zeros((tau_p, K))
    mix[np.asarray(pilot_of_ue), np.arange(K)] = tau_p * np.asarray(powers, dtype=float)
    return hermitize(np.einsum("tk,klmn->tlmn", mix, R) + sigma2 * np.eye(N))


def mmse_statistics(R, pilot_of_ue, powers, tau_p: int, sigma2: float):
    """Per-UE MMSE filters ``W_kl = sqrt(p_k tau_p) R_kl Psi^-1`` plus ``C`` and ``Psi``."""
    R = np.asarray(R)
    powers = np.asarray(powers, dtype=float)
    Psi = pilot_covariance(R, pilot_of_ue, powers, tau_p, sigma2)
    Psi_k = Psi[np.asarray(pilot_of_ue)]  # (K, L, N, N)
    Q = hermitian_solve(Psi_k, R)  # Psi^-1 R
    RPsiR = hermitize(R @ Q)
    C = hermitize(R - (powers * tau_p)[:, None, None, None] * RPsiR)
    W = np.sqrt(powers * tau_p)[:, None, None, None] * np.conj(np.swapaxes(Q, -1, -2))
    return W, C, Psi


def mmse_estimate(observation: PilotObservation, R: np.ndarray, filters=None) -> ChannelEstimateSet:
    """MMSE estimates ``h_hat_kl = sqrt(p_k tau_p) R_kl Psi_{t_k l}^-1 z_{t_k l}``.

    ``filters`` may carry a precomputed ``mmse_statistics`` tuple so repeated
    batches of one drop skip the per-drop factorizations.
    """
    obs = observation
    if filters is None:
        filters = mmse_statistics(R, obs.pilot_of_ue, obs.powers, obs.tau_p, obs.sigma2)
    W, C, Psi = filters
    z_k = obs.z[:, obs.pilot_of_ue]  # (B, K, L, N)
    h_hat = np.einsum("klmn,bkln->bklm", W, z_k)
    return ChannelEstimateSet(h_hat, C, Psi, "mmse")


def ls_estimate(observation: PilotObservation, R: np.ndarray) -> ChannelEstimateSet:
    """Least-squares estimates ``z_{t_k l} / sqrt(p_k tau_p)``.

    The error covariance ``Psi_{t_k l} / (p_k tau_p) - R_kl`` is exact; unlike
    MMSE the error is correlated with the estimate.
    """
    obs = observation
    if np.any(obs.powers <= 0):
        raise ConfigurationError("LS estimation needs strictly positive pilot powers")
    scale = np.sqrt(obs.powers * obs.tau_p)
    h_hat = obs.z[:, obs.pilot_of_ue] / scale[None, :, None, None]
    Psi = pilot_covariance(np.asarray(R), obs.pilot_of_ue, obs.powers, obs.tau_p, obs.sigma2)
    C = hermitize(Psi[obs.pilot_of_ue] / (scale**2)[:, None, None, None] - R)
    return ChannelEstimateSet(h_hat, C, Psi, "ls")


def estimate_covariance(R, C) -> np.ndarray:
    """Covariance of the MMSE estimate, ``R - C``."""
    return hermitize(np.asarray(R) - np.asarray(C))
