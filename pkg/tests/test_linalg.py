import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cellfree.linalg import cholesky, hermitian_logdet, hermitian_solve, hermitize, psd_sqrt, quad_form

from conftest import random_psd


@given(st.integers(1, 24), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_solve_matches_dense_solver(n, batch, seed):
    rng = np.random.default_rng(seed)
    A = np.stack([random_psd(rng, n) + 0.1 * np.eye(n) for _ in range(batch)])
    b = rng.standard_normal((batch, n, 3)) + 1j * rng.standard_normal((batch, n, 3))
    x = hermitian_solve(A, b)
    np.testing.assert_allclose(A @ x, b, rtol=1e-9, atol=1e-9)


def test_solve_vector_rhs_and_unbatched(rng):
    A = random_psd(rng, 5) + np.eye(5)
    b = rng.standard_normal(5) + 0j
    np.testing.assert_allclose(hermitian_solve(A, b), np.linalg.solve(A, b), rtol=1e-12)


def test_solve_rejects_indefinite():
    with pytest.raises(np.linalg.LinAlgError):
        hermitian_solve(np.diag([1.0, -1.0]).astype(complex), np.ones(2, dtype=complex))


def test_logdet_and_cholesky(rng):
    A = random_psd(rng, 6) + np.eye(6)
    sign, ref = np.linalg.slogdet(A)
    assert sign.real > 0
    assert hermitian_logdet(A) == pytest.approx(ref, rel=1e-12)
    Lo = cholesky(A)
    np.testing.assert_allclose(Lo @ Lo.conj().T, A, atol=1e-12)


def test_psd_sqrt_clips_negative_eigenvalues():
    A = np.diag([4.0, -1e-14, 9.0]).astype(complex)
    S = psd_sqrt(A)
    np.testing.assert_allclose(S, np.diag([2.0, 0.0, 3.0]), atol=1e-7)


def test_quad_form_and_hermitize(rng):
    A = random_psd(rng, 4)
    x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    assert quad_form(A, x) == pytest.approx(np.real(np.vdot(x, A @ x)), rel=1e-12)
    M = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    H = hermitize(M)
    np.testing.assert_allclose(H, H.conj().T)
