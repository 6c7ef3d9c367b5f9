import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cellfree import estimation as E

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_psd(rng, n, scale=1.0, rank=None):
    rank = n if rank is None else rank
    G = (rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))) / np.sqrt(2 * rank)
    R = G @ G.conj().T
    return scale * (R + R.conj().T) / 2


def random_instance(rng, K=None, L=None, N=None, tau_p=None, blocks=4):
    """Random correlated-fading setup plus one batch of MMSE estimates."""
    K = K or int(rng.integers(1, 9))
    L = L or int(rng.integers(1, 9))
    N = N or int(rng.integers(1, 5))
    tau_p = tau_p or int(rng.integers(1, K + 1))
    scale = 10 ** rng.uniform(-1, 1.5, size=(K, L))
    R = np.stack([np.stack([random_psd(rng, N, scale[k, l]) for l in range(L)]) for k in range(K)])
    pilots = rng.integers(0, tau_p, size=K)
    p = rng.uniform(0.5, 2.0, size=K)
    sigma2 = float(rng.uniform(0.5, 2.0))
    h = E.sample_channels(R, rng, blocks)
    obs = E.despread_pilots(h, pilots, p, tau_p, sigma2, rng)
    est = E.mmse_estimate(obs, R)
    return dict(R=R, pilots=pilots, p=p, sigma2=sigma2, h=h, obs=obs, est=est, tau_p=tau_p)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
