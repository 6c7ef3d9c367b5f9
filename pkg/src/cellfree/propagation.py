"""Large-scale fading (pathloss + correlated shadowing) and spatial correlation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ConfigurationError, NetworkRealization, link_geometry
from .linalg import hermitize

UMI = "umi_3gpp"
THREE_SLOPE = "three_slope"
MODELS = (UMI, THREE_SLOPE)

JITTER = 1e-10


@dataclass(frozen=True)
class LargeScaleMap:
    beta: np.ndarray  # (K, L) linear gain
    shadow_db: np.ndarray  # (K, L)
    model: str

    @property
    def beta_db(self) -> np.ndarray:
        return 10.0 * np.log10(self.beta)


@dataclass(frozen=True)
class SpatialCorrelationSet:
    R: np.ndarray  # (K, L, N, N)
    nominal_angles: np.ndarray  # (K, L)
    angular_std_deg: float = 15.0

    @property
    def beta(self) -> np.ndarray:
        n = self.R.shape[-1]
        return np.real(np.trace(self.R, axis1=-2, axis2=-1)) / n


def umi_pathloss(distance_m) -> np.ndarray:
    """3GPP Urban Microcell gain in dB (2 GHz), without shadowing."""
    return -30.5 - 36.7 * np.log10(np.asarray(distance_m, dtype=float))


def three_slope_pathloss(distance_m) -> np.ndarray:
    """Three-slope gain in dB on horizontal distance, without shadowing."""
    d = np.asarray(distance_m, dtype=float)
    with np.errstate(divide="ignore"):
        mid = -61.2 - 20.0 * np.log10(d)
        far = -35.7 - 35.0 * np.log10(d)
    return np.where(d < 10.0, -81.2, np.where(d < 50.0, mid, far))


def _decorrelation(positions: np.ndarray, distance_m: float) -> np.ndarray:
    # plain Euclidean separation keeps the exponential kernel positive definite
    sep = np.linalg.norm(positions[:, None, :] - positions[None, :, :], axis=-1)
    return 2.0 ** (-sep / distance_m)


def _correlated_normal(cov: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``size`` columns from N(0, cov) by Cholesky; shape ``(n, size)``."""
    try:
        lower = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        try:
            lower = np.linalg.cholesky(cov + JITTER * np.eye(cov.shape[0]))
        except np.linalg.LinAlgError as exc:
            w = np.linalg.eigvalsh(cov)
            raise np.linalg.LinAlgError(
                f"shadowing covariance not PSD after {JITTER:g} jitter (min eigenvalue {w.min():.3e})"
            ) from exc
    return lower @ rng.standard_normal((cov.shape[0], size))


def shadowing_covariance(ue_positions, ap_positions, model: str) -> np.ndarray:
    """Full ``(K*L, K*L)`` covariance of the row-major flattened shadowing matrix.

    Only used for verification; sampling exploits the Kronecker structure.
    """
    K, L = len(ue_positions), len(ap_positions)
    if model == UMI:
        return np.kron(16.0 * _decorrelation(np.asarray(ue_positions), 9.0), np.eye(L)).reshape(K * L, K * L)
    if model == THREE_SLOPE:
        ue = _decorrelation(np.asarray(ue_positions), 100.0)
        ap = _decorrelation(np.asarray(ap_positions), 100.0)
        return 32.0 * (np.kron(ue, np.ones((L, L))) + np.kron(np.ones((K, K)), ap))
    raise ConfigurationError(f"unknown propagation model {model!r}")


def sample_shadowing(ue_positions, ap_positions, model: str, rng: np.random.Generator, size: int | None = None):
    """Correlated shadowing ``F`` in dB, shape ``(K, L)`` (or ``(size, K, L)``).

    umi_3gpp: std 4 dB, decorrelation 2^(-delta/9 m) between UEs at one AP,
    independent across APs. three_slope: std 8 dB with the sum-of-kernels
    covariance, realised as F_kl = X_k + Y_l with independent UE and AP parts.
    Masking to d >= 50 m for three_slope is done by the caller.
    """
    ue_positions = np.asarray(ue_positions, dtype=float)
    ap_positions = np.asarray(ap_positions, dtype=float)
    K, L = len(ue_positions), len(ap_positions)
    draws = 1 if size is None else size
    if model == UMI:
        cols = _correlated_normal(16.0 * _decorrelation(ue_positions, 9.0), draws * L, rng)
        out = cols.reshape(K, draws, L).transpose(1, 0, 2)
    elif model == THREE_SLOPE:
        x = _correlated_normal(32.0 * _decorrelation(ue_positions, 100.0), draws, rng)
        y = _correlated_normal(32.0 * _decorrelation(ap_positions, 100.0), draws, rng)
        out = x.T[:, :, None] + y.T[:, None, :]
    else:
        raise ConfigurationError(f"unknown propagation model {model!r}")
    return out[0] if size is None else out


def large_scale_fading(
    realization: NetworkRealization,
    model: str,
    rng: np.random.Generator,
    height_delta: float,
    transmitters: np.ndarray | None = None,
) -> tuple[LargeScaleMap, np.ndarray]:
    """Pathloss plus shadowing for every UE/transmitter pair.

    Returns the map and the nominal AP->UE azimuths (radians).
    """
    tx = realization.ap_positions if transmitters is None else transmitters
    distance, horizontal, angle = link_geometry(realization, height_delta, tx)
    shadow = sample_shadowing(realization.ue_positions, tx, model, rng)
    if model == UMI:
        gain_db = umi_pathloss(distance) + shadow
    else:
        shadow = np.where(horizontal >= 50.0, shadow, 0.0)
        gain_db = three_slope_pathloss(horizontal) + shadow
    return LargeScaleMap(10.0 ** (gain_db / 10.0), shadow, model), angle


def local_scattering_correlation(beta, nominal_angle, angular_std_deg: float, num_antennas: int) -> np.ndarray:
    """Gaussian local-scattering correlation for a half-wavelength ULA.

    Entry (m, n) is ``beta * exp(j pi (m-n) sin phi) * exp(-(sigma^2/2)(pi (m-n) cos phi)^2)``.
    Broadcasts over the shapes of ``beta`` and ``nominal_angle``; returns
    ``shape + (N, N)``.
    """
    if num_antennas < 1:
        raise ConfigurationError("number of antennas must be positive")
    beta = np.asarray(beta, dtype=float)
    phi = np.asarray(nominal_angle, dtype=float)
    beta, phi = np.broadcast_arrays(beta, phi)
    sigma = np.deg2rad(angular_std_deg)
    lag = np.subtract.outer(np.arange(num_antennas), np.arange(num_antennas)).astype(float)
    s = np.sin(phi)[..., None, None]
    c = np.cos(phi)[..., None, None]
    R = beta[..., None, None] * np.exp(1j * np.pi * lag * s) * np.exp(-0.5 * sigma**2 * (np.pi * lag * c) ** 2)
    R = hermitize(R)
    if num_antennas > 1:
        w, u = np.linalg.eigh(R)
        bad = np.any(w < -1e-12 * beta[..., None], axis=-1)
        if np.any(bad):
            clipped = (u[bad] * np.clip(w[bad], 0.0, None)[..., None, :]) @ np.conj(np.swapaxes(u[bad], -1, -2))
            R[bad] = hermitize(clipped)
    return R


def spatial_correlation(lsf: LargeScaleMap, angles: np.ndarray, num_antennas: int, angular_std_deg: float = 15.0):
    return SpatialCorrelationSet(
        local_scattering_correlation(lsf.beta, angles, angular_std_deg, num_antennas), angles, angular_std_deg
    )
