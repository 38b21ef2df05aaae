"""Periodic first-order difference operators and their Fourier spectra.

All three operators are circulant: ``(D v)_i = v_{(i+1) mod n} - v_i``.
Their Gram ``D'D`` is diagonalized by the DFT with eigenvalue
``2 - 2 cos(2 pi k / n)`` at frequency ``k``.
"""

import numpy as np

from .errors import ArgumentError

__all__ = ["apply_diff", "apply_diff_adjoint", "diff_gram_spectrum", "diff_matrix"]


def _axis(x, mode):
    if mode not in range(1, np.ndim(x) + 1):
        raise ArgumentError(f"mode must be in 1..{np.ndim(x)}, got {mode!r}")
    return mode - 1


def apply_diff(x, mode):
    """Forward periodic difference along ``mode`` (1-based axis).

    For a temporal factor ``A`` of shape (n3, r), ``apply_diff(A, 1)`` is
    ``D3 @ A``.
    """
    x = np.asarray(x, dtype=np.float64)
    axis = _axis(x, mode)
    return np.roll(x, -1, axis=axis) - x


def apply_diff_adjoint(x, mode):
    """Adjoint of :func:`apply_diff`: ``(D' y)_i = y_{i-1} - y_i``."""
    x = np.asarray(x, dtype=np.float64)
    axis = _axis(x, mode)
    return np.roll(x, 1, axis=axis) - x


def diff_gram_spectrum(n):
    """Eigenvalues of the periodic ``D'D`` in DFT frequency order.

    >>> diff_gram_spectrum(4).round(12)
    array([0., 2., 4., 2.])
    """
    n = int(n)
    if n < 1:
        raise ArgumentError(f"n must be positive, got {n}")
    k = np.arange(n)
    # 4 sin^2(pi k / n) equals 2 - 2 cos(2 pi k / n) without cancellation near k = 0
    values = 4.0 * np.sin(np.pi * k / n) ** 2
    # mirror so that values[k] == values[n - k] holds bit-for-bit
    values[n // 2 + 1:] = values[1:(n + 1) // 2][::-1]
    return values


def diff_matrix(n):
    """Dense ``n x n`` periodic difference matrix (for testing only)."""
    return np.roll(np.eye(n), 1, axis=1) - np.eye(n)
