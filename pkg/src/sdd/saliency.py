"""Structure-tensor saliency: the ASCE map and the enhancement factor.

For each frame the gradient outer product is smoothed with a Gaussian, its
two eigenvalues ``e+ >= e-`` are taken in closed form, and three measures
are combined::

    C1 = sqrt(|e+ e-|)                       corner measure
    C2 = |(e+ + e-) / sqrt(e+ - e- + delta)| coherence measure
    C3 = e+ e- / (e+ + e- + delta)           edge indicator
    ASCE = 1 - exp(-(a1 C1 + a2 C2 + a3 C3))

The enhancement factor adds one to every ASCE value at or above the
per-frame threshold ``mean + 5 * var``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ArgumentError, NumericIntegrityError

__all__ = [
    "AsceParams",
    "StructureField",
    "gradient",
    "gaussian_kernel",
    "structure_tensor",
    "eigen_pairs",
    "asce",
    "asce_stack",
    "enhancement_factor",
]

# largest double below one; keeps ASCE in [0, 1) when exp(-s) underflows
_BELOW_ONE = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class AsceParams:
    sigma: float = 1.5
    alpha: tuple = (10.0, 10.0, 10.0)
    delta: float = 1e-3

    def __post_init__(self):
        if not self.sigma > 0:
            raise ArgumentError(f"sigma must be positive, got {self.sigma}")
        if len(self.alpha) != 3 or any(a < 0 for a in self.alpha):
            raise ArgumentError(f"alpha must be three non-negative numbers, got {self.alpha}")
        if not self.delta > 0:
            raise ArgumentError(f"delta must be positive, got {self.delta}")
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))


@dataclass
class StructureField:
    """Per-pixel entries of the smoothed 2x2 structure tensor."""

    jxx: np.ndarray
    jxy: np.ndarray
    jyy: np.ndarray
    sigma: float


def _frame(frame):
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 2 or frame.shape[0] < 2 or frame.shape[1] < 2:
        raise ArgumentError(f"frame must be at least 2x2, got shape {frame.shape}")
    return frame


def gradient(frame):
    """Image gradient ``(ix, iy)``.

    ``ix`` differentiates along columns (x) and ``iy`` along rows (y):
    central differences inside, one-sided differences on the border.
    """
    frame = _frame(frame)
    iy, ix = np.gradient(frame)
    return ix, iy


def gaussian_kernel(sigma):
    """Sampled Gaussian truncated at radius ``ceil(3 sigma)``, unit sum."""
    radius = int(math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _smooth(channel, kernel):
    out = ndimage.correlate1d(channel, kernel, axis=0, mode="nearest")
    return ndimage.correlate1d(out, kernel, axis=1, mode="nearest")


def structure_tensor(frame, sigma):
    if not sigma > 0:
        raise ArgumentError(f"sigma must be positive, got {sigma}")
    ix, iy = gradient(frame)
    kernel = gaussian_kernel(sigma)
    return StructureField(
        jxx=_smooth(ix * ix, kernel),
        jxy=_smooth(ix * iy, kernel),
        jyy=_smooth(iy * iy, kernel),
        sigma=float(sigma),
    )


def eigen_pairs(field, tol=1e-9):
    """Closed-form eigenvalues ``(e_plus, e_minus)`` of each 2x2 tensor.

    Small negative values produced by round-off are clamped to zero; a
    violation beyond ``tol`` times the largest trace is an error.
    """
    jxx, jxy, jyy = field.jxx, field.jxy, field.jyy
    half_tr = 0.5 * (jxx + jyy)
    disc = np.sqrt((0.5 * (jxx - jyy)) ** 2 + jxy * jxy)
    e_plus = half_tr + disc
    e_minus = half_tr - disc
    scale = max(float(np.max(np.abs(jxx) + np.abs(jyy), initial=0.0)), 1e-300)
    if np.any(jxx < -tol * scale) or np.any(jyy < -tol * scale) \
            or np.any(e_minus < -tol * scale):
        raise NumericIntegrityError("structure tensor is not positive semidefinite")
    return np.maximum(e_plus, 0.0), np.maximum(e_minus, 0.0)


def asce_terms(e_plus, e_minus, delta=1e-3):
    """The corner, coherence and edge measures ``(C1, C2, C3)``."""
    prod = e_plus * e_minus
    tr = e_plus + e_minus
    c1 = np.sqrt(np.abs(prod))
    c2 = np.abs(tr / np.sqrt(e_plus - e_minus + delta))
    c3 = prod / (tr + delta)
    return c1, c2, c3


def asce(frame, params=None):
    """ASCE map of a single frame, values in [0, 1)."""
    params = params or AsceParams()
    e_plus, e_minus = eigen_pairs(structure_tensor(frame, params.sigma))
    c1, c2, c3 = asce_terms(e_plus, e_minus, params.delta)
    a1, a2, a3 = params.alpha
    s = a1 * c1 + a2 * c2 + a3 * c3
    return np.minimum(-np.expm1(-s), _BELOW_ONE)


def asce_stack(cube, params=None):
    """ASCE of every frontal slice ``cube[:, :, k]``, stacked along axis 2."""
    cube = np.asarray(cube, dtype=np.float64)
    return np.stack([asce(cube[:, :, k], params) for k in range(cube.shape[2])], axis=2)


_BELOW_TWO = np.nextafter(2.0, 0.0)


def enhancement_factor(asce_cube):
    """Stacked enhancement factor ``W_ASCE`` from per-frame ASCE maps.

    Each frame gets its own threshold ``T_s = mean + 5 * var``; entries at or
    above it map to ``1 + value``, the others are kept.  ``1 + value``
    is capped at the largest double below 2, since values within half an
    ulp of 1 would otherwise round up to exactly 2.
    """
    asce_cube = np.asarray(asce_cube, dtype=np.float64)
    if asce_cube.ndim == 2:
        asce_cube = asce_cube[:, :, None]
    if np.any(asce_cube < 0) or np.any(asce_cube >= 1):
        raise ArgumentError("ASCE values must lie in [0, 1)")
    out = np.empty_like(asce_cube)
    for k in range(asce_cube.shape[2]):
        a = asce_cube[:, :, k]
        out[:, :, k] = np.where(a >= frame_threshold(a), np.minimum(1.0 + a, _BELOW_TWO), a)
    return out


def frame_threshold(a):
    """``mean(a) + 5 var(a)`` with population variance."""
    if np.ptp(a) == 0:
        # constant map: the mean may round away from the common value
        return float(a.flat[0])
    return float(np.mean(a) + 5.0 * np.var(a))
