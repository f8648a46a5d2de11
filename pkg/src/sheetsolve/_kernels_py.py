"""Pure numpy versions of the compiled kernels (same signatures, same results)."""

import numpy as np


def _shifted(Y: np.ndarray, mu: np.ndarray) -> np.ndarray:
    n = Y.shape[0]
    return Y[None, :, :] - mu[:, None, None] * np.eye(n)[None, :, :]


def resolvent_sum(Y, mu, K):
    """``sum_q K[q] @ inv(Y - mu[q] I)``."""
    if mu.size == 0:
        return np.zeros_like(Y)
    A = _shifted(Y, mu)
    # X (Y - mu) = K  <=>  (Y - mu)^T X^T = K^T
    X = np.linalg.solve(np.swapaxes(A, 1, 2), np.swapaxes(K, 1, 2))
    return np.swapaxes(X, 1, 2).sum(axis=0)


def sandwich_sum(L, R, mu, K):
    """``sum_q inv(L - mu[q] I) @ K[q] @ inv(R - mu[q] I)``."""
    if mu.size == 0:
        return np.zeros_like(L)
    AR = _shifted(R, mu)
    T = np.swapaxes(np.linalg.solve(np.swapaxes(AR, 1, 2), np.swapaxes(K, 1, 2)), 1, 2)
    return np.linalg.solve(_shifted(L, mu), T).sum(axis=0)
