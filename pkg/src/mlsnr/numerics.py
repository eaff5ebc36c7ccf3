"""Complex linear algebra and special functions shared by the estimators.

Matrices are plain ``numpy`` complex arrays; the functions here only add the
contracts (rank checks, finiteness) the estimators rely on.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erfc

RANK_TOL = 1e-12


class RankDeficient(ValueError):
    """Raised when a channel matrix has no left pseudo-inverse."""


class NonConvergent(ArithmeticError):
    """Raised when the SVD fails to converge."""


def as_matrix(h) -> np.ndarray:
    """Return ``h`` as a finite 2-D complex array (a column for 1-D input)."""
    h = np.asarray(h, dtype=complex)
    if h.ndim == 1:
        h = h[:, None]
    if h.ndim != 2 or h.shape[0] < 1 or h.shape[1] < 1:
        raise ValueError(f"expected a non-empty matrix, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ValueError("matrix has non-finite entries")
    return h


def _svd(h: np.ndarray, compute_uv: bool):
    try:
        return np.linalg.svd(h, full_matrices=False, compute_uv=compute_uv)
    except np.linalg.LinAlgError as exc:
        raise NonConvergent(str(exc)) from exc


def pseudo_inverse(h) -> np.ndarray:
    """Left pseudo-inverse ``G`` of a tall, full-column-rank matrix.

    ``G @ h`` is the ``cols x cols`` identity. Raises :class:`RankDeficient`
    when the smallest singular value is at most ``RANK_TOL`` times the
    largest, or when ``h`` has more columns than rows.
    """
    h = as_matrix(h)
    rows, cols = h.shape
    if rows < cols:
        raise RankDeficient(f"{rows}x{cols} matrix cannot have full column rank")
    u, s, vh = _svd(h, compute_uv=True)
    if s[-1] <= RANK_TOL * s[0]:
        raise RankDeficient(f"singular values {s} below relative tolerance {RANK_TOL}")
    return (vh.conj().T / s) @ u.conj().T


def singular_values(h) -> tuple[float, float]:
    """Smallest and largest singular values of ``h``."""
    s = _svd(as_matrix(h), compute_uv=False)
    return float(s[-1]), float(s[0])


def log_det_capacity(h, rho: float) -> float:
    """Per-stream capacity ``(1/M) ln det(I + h h^H / rho^2)`` in nats.

    ``M`` is the number of columns (streams) of ``h``.
    """
    h = as_matrix(h)
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    gram = h @ h.conj().T / rho**2
    gram += np.eye(h.shape[0])
    # Hermitian positive definite: the sign is always 1
    _, logdet = np.linalg.slogdet(gram)
    return max(float(logdet), 0.0) / h.shape[1]


def q_function(x):
    """Gaussian tail probability ``Q(x) = P(N(0,1) > x)``; works on arrays."""
    q = 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))
    return float(q) if q.ndim == 0 else q
