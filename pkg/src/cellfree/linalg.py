"""Batched Hermitian positive-definite factor-and-solve kernels.

Every matrix "inverse" in the simulator goes through these helpers. Small
matrices (per-AP N x N systems) are handled with a vectorized Cholesky
substitution over arbitrary leading batch dimensions; large ones (the
centralized LN x LN system) go to LAPACK one matrix at a time.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

# above this size the python-level substitution loop loses to per-matrix LAPACK
_SMALL = 16


def hermitize(a: np.ndarray) -> np.ndarray:
    """Return the exactly Hermitian part of a batch of square matrices."""
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def _forward(lower: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = lower.shape[-1]
    y = np.empty(np.broadcast_shapes(lower.shape[:-2], b.shape[:-2]) + b.shape[-2:], dtype=np.result_type(lower, b))
    for i in range(n):
        acc = b[..., i, :]
        if i:
            acc = acc - np.einsum("...j,...jr->...r", lower[..., i, :i], y[..., :i, :])
        y[..., i, :] = acc / lower[..., i, i, None]
    return y


def _backward(lower: np.ndarray, y: np.ndarray) -> np.ndarray:
    # solves L^H x = y
    n = lower.shape[-1]
    x = np.empty_like(y)
    for i in range(n - 1, -1, -1):
        acc = y[..., i, :]
        if i < n - 1:
            acc = acc - np.einsum("...j,...jr->...r", np.conj(lower[..., i + 1 :, i]), x[..., i + 1 :, :])
        x[..., i, :] = acc / np.conj(lower[..., i, i, None])
    return x


def cholesky(a: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of a (batch of) Hermitian positive-definite matrices."""
    return np.linalg.cholesky(hermitize(a))


def hermitian_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``a x = b`` for Hermitian positive-definite ``a``.

    ``a`` has shape ``(..., n, n)`` and ``b`` either ``(..., n)`` or
    ``(..., n, r)``; leading dimensions broadcast. Raises
    ``numpy.linalg.LinAlgError`` when ``a`` is not positive definite.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    vector = b.ndim == a.ndim - 1
    if vector:
        b = b[..., None]
    n = a.shape[-1]
    if n <= _SMALL:
        lower = cholesky(a)
        x = _backward(lower, _forward(lower, b))
    else:
        batch = np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
        a_b = np.broadcast_to(a, batch + a.shape[-2:]).reshape((-1, n, n))
        b_b = np.broadcast_to(b, batch + b.shape[-2:]).reshape((-1,) + b.shape[-2:])
        x = np.empty(b_b.shape, dtype=np.result_type(a, b))
        for j in range(a_b.shape[0]):
            try:
                factor = sla.cho_factor(hermitize(a_b[j]), lower=True, check_finite=False)
            except sla.LinAlgError as exc:
                raise np.linalg.LinAlgError(str(exc)) from exc
            x[j] = sla.cho_solve(factor, b_b[j], check_finite=False)
        x = x.reshape(batch + b.shape[-2:])
    return x[..., 0] if vector else x


def hermitian_logdet(a: np.ndarray) -> np.ndarray:
    """Natural log-determinant of Hermitian positive-definite matrices via Cholesky."""
    lower = cholesky(a)
    return 2.0 * np.sum(np.log(np.real(np.diagonal(lower, axis1=-2, axis2=-1))), axis=-1)


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    """Hermitian square root with negative eigenvalues clipped to zero."""
    w, u = np.linalg.eigh(hermitize(a))
    w = np.sqrt(np.clip(w, 0.0, None))
    return (u * w[..., None, :]) @ np.conj(np.swapaxes(u, -1, -2))


def quad_form(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Real part of ``x^H a x`` over matching batch dimensions."""
    return np.real(np.einsum("...m,...mn,...n->...", np.conj(x), a, x))
