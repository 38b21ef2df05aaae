"""Dense 3-way tensor algebra.

Cubes and matrices are plain ``numpy.ndarray`` objects of dtype float64.
Modes are numbered 1, 2, 3 as in the usual tensor notation.

The mode-n unfolding arranges the mode-n fibers as columns, with the
remaining indices ordered so that the lowest remaining mode varies fastest
(Kolda-Bader ordering).  For a cube of shape (n1, n2, n3) the mode-3
unfolding therefore has column index ``i + n1 * j`` for entry ``(i, j, k)``,
which is the ordering under which the spatial difference Gram of the
spatial-factor solve reads ``I_n2 kron D1'D1 + D2'D2 kron I_n1``.
"""

import numpy as np

from .errors import ArgumentError, NumericIntegrityError

__all__ = ["as_cube", "unfold", "fold", "mode_product", "norm", "inner"]


def as_cube(x, name="x"):
    """Promote ``x`` to a finite float64 3-way array (copying integer input)."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 3 or min(arr.shape) < 1:
        raise ArgumentError(f"{name} must be a non-empty 3-way array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericIntegrityError(f"{name} contains non-finite entries")
    return arr


def _check_mode(mode, ndim=3):
    if mode not in range(1, ndim + 1):
        raise ArgumentError(f"mode must be one of 1..{ndim}, got {mode!r}")
    return mode - 1


def unfold(x, mode):
    """Mode-``mode`` matricization of a 3-way array.

    Returns an ``(n_mode, prod(other dims))`` matrix whose columns are the
    mode fibers of ``x``.
    """
    x = np.asarray(x)
    axis = _check_mode(mode, x.ndim)
    return np.reshape(np.moveaxis(x, axis, 0), (x.shape[axis], -1), order="F")


def fold(m, mode, dims):
    """Inverse of :func:`unfold`."""
    m = np.asarray(m)
    dims = tuple(int(d) for d in dims)
    axis = _check_mode(mode, len(dims))
    rest = dims[:axis] + dims[axis + 1:]
    if m.ndim != 2 or m.shape != (dims[axis], int(np.prod(rest))):
        raise ArgumentError(
            f"matrix of shape {m.shape} cannot be folded along mode {mode} into {dims}")
    return np.moveaxis(np.reshape(m, (dims[axis],) + rest, order="F"), 0, axis)


def mode_product(x, u, mode):
    """Mode-n product ``x ×_n u``.

    Parameters
    ----------
    x : ndarray, shape (n1, n2, n3)
    u : ndarray, shape (J, n_mode)
    mode : {1, 2, 3}

    Returns
    -------
    ndarray
        ``x`` with dimension ``mode`` replaced by ``J``, satisfying
        ``unfold(result, mode) == u @ unfold(x, mode)``.
    """
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    axis = _check_mode(mode, x.ndim)
    if u.ndim != 2 or u.shape[1] != x.shape[axis]:
        raise ArgumentError(
            f"matrix of shape {u.shape} does not act on mode {mode} of size {x.shape[axis]}")
    return np.moveaxis(np.tensordot(u, x, axes=(1, axis)), 0, axis)


def norm(x, kind="fro"):
    """Frobenius (``"fro"``) or entrywise l1 (``"l1"``) norm of an array."""
    x = np.asarray(x, dtype=np.float64)
    if kind == "fro":
        return float(np.sqrt(np.sum(x * x)))
    if kind == "l1":
        return float(np.sum(np.abs(x)))
    raise ArgumentError(f"unknown norm kind {kind!r}")


def inner(x, y):
    """Sum of the elementwise product of two equally shaped arrays."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ArgumentError(f"shape mismatch: {x.shape} vs {y.shape}")
    return float(np.sum(x * y))
