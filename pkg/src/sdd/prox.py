"""Shrinkage operators and reweighting rules.

These are the only places where sparsity enters the solver: the
elementwise soft threshold (prox of a weighted l1 norm), the fiber-wise
group shrinkage (prox of a weighted l2,1 norm over mode-3 fibers) and the
reciprocal-magnitude reweighting that turns both into iteratively
reweighted surrogates of l0.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError

__all__ = ["WeightSet", "soft_threshold", "group_shrink_fibers", "reweight"]


@dataclass
class WeightSet:
    """Weights in force during one solver iteration.

    Attributes
    ----------
    w1 : ndarray, shape (n1, n2)
        Group weights of the mode-1 difference fibers.
    w2 : ndarray, shape (n1, n2, r)
        Elementwise weights of the mode-2 differences.
    w_s : ndarray, shape (n1, n2, n3)
        Elementwise weights of the target component.
    epsilon : float
        Smoothing constant shared by all three weight kinds.
    """

    w1: np.ndarray
    w2: np.ndarray
    w_s: np.ndarray
    epsilon: float = 0.01


def soft_threshold(x, theta):
    """Elementwise ``sign(x) * max(|x| - theta, 0)``.

    ``theta`` may be a scalar or an array broadcastable against ``x``; all
    entries must be non-negative.
    """
    x = np.asarray(x, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    if np.any(theta < 0):
        raise ArgumentError("soft_threshold requires non-negative thresholds")
    return np.sign(x) * np.maximum(np.abs(x) - theta, 0.0)


def group_shrink_fibers(z, xi):
    """Shrink every mode-3 fiber ``z[i, j, :]`` by threshold ``xi[i, j]``.

    A fiber ``f`` becomes ``f * (|f| - xi) / |f|`` when ``xi < |f|`` and zero
    otherwise, ``|.|`` being the Euclidean norm.
    """
    z = np.asarray(z, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    if z.ndim != 3 or xi.shape != z.shape[:2]:
        raise ArgumentError(f"threshold shape {xi.shape} does not match fibers of {z.shape}")
    if np.any(xi < 0):
        raise ArgumentError("group_shrink_fibers requires non-negative thresholds")
    nrm = np.sqrt(np.sum(z * z, axis=2))
    keep = nrm > xi
    scale = np.zeros_like(nrm)
    scale[keep] = (nrm[keep] - xi[keep]) / nrm[keep]
    return z * scale[:, :, None]


def reweight(z_hat, kind, epsilon=0.01):
    """Reciprocal-magnitude weights ``1 / (magnitude + epsilon)``.

    Parameters
    ----------
    z_hat : ndarray
        Quantity the weights are derived from.
    kind : {"group", "elementwise", "target"}
        ``"group"`` uses the Euclidean norm of each mode-3 fiber and returns
        an (n1, n2) matrix; the other two use absolute values entrywise.
    epsilon : float
        Positive smoothing constant; bounds every weight by ``1/epsilon``.
    """
    if not epsilon > 0:
        raise ArgumentError(f"epsilon must be positive, got {epsilon}")
    z_hat = np.asarray(z_hat, dtype=np.float64)
    if kind == "group":
        if z_hat.ndim != 3:
            raise ArgumentError("group weights need a 3-way input")
        mag = np.sqrt(np.sum(z_hat * z_hat, axis=2))
    elif kind in ("elementwise", "target"):
        mag = np.abs(z_hat)
    else:
        raise ArgumentError(f"unknown weight kind {kind!r}")
    return 1.0 / (mag + epsilon)
