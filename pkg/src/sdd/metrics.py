"""Detection quality indicators.

SCR, BSF, G_SCR and CG are computed over a target box and its surrounding
neighborhood ring: the ``(a + 2d) x (b + 2d)`` region centred on the
``a x b`` target box, clipped to the image, minus the box itself.  All
statistics are population statistics.  The ROC sweep counts a ground-truth
target as detected when an above-threshold pixel falls inside the
``window x window`` square around it, and counts every above-threshold
8-connected component that touches no such window as one false alarm.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ArgumentError, UndefinedMetricError

__all__ = [
    "TargetAnnotation",
    "RocCurve",
    "ring_stats",
    "scr",
    "bsf",
    "gscr",
    "cg",
    "roc",
    "directional_variance",
    "classify_variance",
    "VARIANCE_BANDS",
]

OMEGA = 0.01
NEIGHBORHOOD = 30
EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class TargetAnnotation:
    """A target box on one frame.

    ``bbox`` is ``(r0, c0, r1, c1)`` with exclusive ends, so the box holds
    rows ``r0..r1-1`` and columns ``c0..c1-1``.
    """

    frame: int
    bbox: tuple
    d: int = NEIGHBORHOOD
    centroid: tuple = None

    def __post_init__(self):
        r0, c0, r1, c1 = (int(v) for v in self.bbox)
        if r1 <= r0 or c1 <= c0 or r0 < 0 or c0 < 0:
            raise ArgumentError(f"empty or negative bbox {self.bbox}")
        object.__setattr__(self, "bbox", (r0, c0, r1, c1))

    @classmethod
    def from_centroid(cls, frame, row, col, half=2, d=NEIGHBORHOOD, shape=None):
        """Square box of side ``2 * half + 1`` around a centroid."""
        r, c = int(round(row)), int(round(col))
        r0, c0, r1, c1 = r - half, c - half, r + half + 1, c + half + 1
        if shape is not None:
            r0, c0 = max(r0, 0), max(c0, 0)
            r1, c1 = min(r1, shape[0]), min(c1, shape[1])
        return cls(frame=frame, bbox=(r0, c0, r1, c1), d=d, centroid=(float(row), float(col)))

    @property
    def center(self):
        """The centroid when known, else the box centre."""
        if self.centroid is not None:
            return self.centroid
        r0, c0, r1, c1 = self.bbox
        return 0.5 * (r0 + r1 - 1), 0.5 * (c0 + c1 - 1)

    def check(self, shape):
        r0, c0, r1, c1 = self.bbox
        if r1 > shape[0] or c1 > shape[1]:
            raise ArgumentError(f"bbox {self.bbox} outside image of shape {shape}")


@dataclass
class RocCurve:
    points: np.ndarray  # (k, 2) columns fa, pd
    auc_raw: float
    auc_normalized: float

    @property
    def fa(self):
        return self.points[:, 0]

    @property
    def pd(self):
        return self.points[:, 1]


def _regions(shape, ann):
    ann.check(shape)
    r0, c0, r1, c1 = ann.bbox
    d = ann.d
    box = (slice(r0, r1), slice(c0, c1))
    outer = (slice(max(r0 - d, 0), min(r1 + d, shape[0])),
             slice(max(c0 - d, 0), min(c1 + d, shape[1])))
    ring = np.zeros(shape, dtype=bool)
    ring[outer] = True
    ring[box] = False
    return box, ring


def ring_stats(image, ann):
    """``(M_t, mu_b, sigma_b)``: box maximum and ring mean / std."""
    image = np.asarray(image, dtype=np.float64)
    box, ring = _regions(image.shape, ann)
    if not ring.any():
        raise ArgumentError("neighborhood ring is empty")
    vals = image[ring]
    return float(image[box].max()), float(vals.mean()), float(vals.std())


def scr(image, ann, omega=OMEGA):
    """Signal-to-clutter ratio ``|M_t - mu_b| / (sigma_b + omega)``."""
    if not omega > 0:
        raise ArgumentError("omega must be positive")
    m_t, mu_b, sigma_b = ring_stats(image, ann)
    return abs(m_t - mu_b) / (sigma_b + omega)


def bsf(original, suppressed, ann, omega=OMEGA):
    """Background suppression factor ``sigma_in / (sigma_out + omega)``."""
    original = np.asarray(original, dtype=np.float64)
    suppressed = np.asarray(suppressed, dtype=np.float64)
    if original.shape != suppressed.shape:
        raise ArgumentError(f"shape mismatch {original.shape} vs {suppressed.shape}")
    _, ring = _regions(original.shape, ann)
    return float(original[ring].std() / (suppressed[ring].std() + omega))


def gscr(original, target_img, ann, omega=OMEGA):
    """SCR gain of the target image over the original."""
    s_in = scr(original, ann, omega)
    if s_in == 0:
        raise UndefinedMetricError("input SCR is zero")
    return scr(target_img, ann, omega) / s_in


def _contrast(image, ann):
    m_t, mu_b, _ = ring_stats(image, ann)
    return abs(m_t - mu_b)


def cg(original, target_img, ann):
    """Contrast gain ``CON_out / CON_in`` with ``CON = |M_t - mu_b|``."""
    con_in = _contrast(original, ann)
    if con_in == 0:
        raise UndefinedMetricError("input contrast is zero")
    return _contrast(target_img, ann) / con_in


def _score_stack(score_maps):
    if isinstance(score_maps, np.ndarray) and score_maps.ndim == 3:
        return [score_maps[:, :, k] for k in range(score_maps.shape[2])]
    return [np.asarray(s, dtype=np.float64) for s in score_maps]


def _windows(shape, anns, window):
    """Boolean window mask per annotation on a frame."""
    half = window // 2
    out = []
    for ann in anns:
        r, c = ann.center
        r, c = int(round(r)), int(round(c))
        m = np.zeros(shape, dtype=bool)
        m[max(r - half, 0):r + half + 1, max(c - half, 0):c + half + 1] = True
        out.append(m)
    return out


def roc_point(score_maps, ground_truth, threshold, window=5):
    """``(fa, pd)`` of the detections ``score >= threshold``.

    ``ground_truth`` holds annotations for frames indexed into
    ``score_maps``; ``fa`` counts false components per image.
    """
    maps = _score_stack(score_maps)
    by_frame = {}
    for ann in ground_truth:
        by_frame.setdefault(ann.frame, []).append(ann)
    detected = false = 0
    for k, smap in enumerate(maps):
        mask = smap >= threshold
        wins = _windows(smap.shape, by_frame.get(k, []), window)
        detected += sum(bool((mask & w).any()) for w in wins)
        if not mask.any():
            continue
        labels, n = ndimage.label(mask, structure=EIGHT_CONNECTED)
        if n == 0:
            continue
        hit = np.zeros(n + 1, dtype=bool)
        for w in wins:
            hit[np.unique(labels[w])] = True
        false += int(n - hit[1:].sum())
    return false / len(maps), detected / len(ground_truth)


def roc(score_maps, ground_truth, window=5, thresholds=None, max_thresholds=512):
    """ROC curve of per-frame score maps against ground-truth annotations.

    The threshold sweeps the distinct positive score values from the top
    down, starting above the maximum (no detections).  Points are sorted
    by false-alarm rate and the detection rate is made monotone by a
    running maximum, so the returned curve is the upper envelope.

    ``auc_raw`` is the trapezoid area over the false-alarm axis, which
    is not bounded by one because false alarms are counted per image;
    ``auc_normalized`` divides it by the largest false-alarm rate reached
    (or is the detection rate at zero false alarms if none is reached).

    With more than ``max_thresholds`` distinct positive scores the sweep
    uses that many quantiles of them instead (always including the top).
    """
    if not ground_truth:
        raise ArgumentError("roc needs at least one ground-truth target")
    maps = _score_stack(score_maps)
    if thresholds is None:
        vals = np.unique(np.concatenate([m.ravel() for m in maps]))
        vals = vals[vals > 0]
        if len(vals) > max_thresholds:
            vals = np.unique(np.quantile(vals, np.linspace(0.0, 1.0, max_thresholds)))
        thresholds = vals[::-1]
    pts = [(0.0, 0.0)]
    pts += [roc_point(maps, ground_truth, thr, window) for thr in thresholds]
    pts = np.array(sorted(pts), dtype=np.float64)
    pts[:, 1] = np.maximum.accumulate(pts[:, 1])
    fa, pd = pts[:, 0], pts[:, 1]
    auc_raw = float(np.sum(0.5 * (pd[1:] + pd[:-1]) * np.diff(fa)))
    fa_max = fa.max()
    auc_norm = auc_raw / fa_max if fa_max > 0 else float(pd[fa == 0].max())
    # pd <= 1 bounds the ratio; only round-off can push it past one
    auc_norm = min(auc_norm, 1.0)
    return RocCurve(points=pts, auc_raw=auc_raw, auc_normalized=float(auc_norm))


def directional_variance(image, region=None):
    """Variance of adjacent-pixel differences in four directions.

    Parameters
    ----------
    image : ndarray (2-D)
    region : (r0, c0, r1, c1), optional
        Exclusive-end box; the whole image when omitted.

    Returns
    -------
    (vh, vv, vd1, vd2)
        Horizontal ``I[i, j+1] - I[i, j]``, vertical ``I[i+1, j] - I[i, j]``,
        diagonal ``I[i+1, j+1] - I[i, j]`` and anti-diagonal
        ``I[i+1, j-1] - I[i, j]`` difference variances.
    """
    image = np.asarray(image, dtype=np.float64)
    if region is not None:
        r0, c0, r1, c1 = region
        image = image[r0:r1, c0:c1]
    if image.ndim != 2 or image.shape[0] < 2 or image.shape[1] < 2:
        raise ArgumentError(f"region must be at least 2x2, got {image.shape}")
    vh = np.var(image[:, 1:] - image[:, :-1])
    vv = np.var(image[1:, :] - image[:-1, :])
    vd1 = np.var(image[1:, 1:] - image[:-1, :-1])
    vd2 = np.var(image[1:, :-1] - image[:-1, 1:])
    return float(vh), float(vv), float(vd1), float(vd2)


# variance ranges of homogeneous regions, target areas and clutter edges (8-bit scale)
VARIANCE_BANDS = {"homogeneous": (0.0, 10.0), "target": (5.0, 20.0), "clutter": (20.0, np.inf)}


def classify_variance(variances):
    """Labels of the variance bands containing the largest directional variance.

    The homogeneous and target bands overlap on [5, 10], so a value there
    carries both labels.
    """
    v = max(variances)
    return [name for name, (lo, hi) in VARIANCE_BANDS.items() if lo <= v <= hi]
