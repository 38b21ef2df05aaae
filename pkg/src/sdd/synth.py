"""Seeded synthetic infrared sequences with ground truth.

A scene is the sum of

* a smooth background: a tilted plane translating at a constant velocity
  plus a few Gaussian bumps whose brightness oscillates slowly, so the
  noiseless background of ``n`` frames has rank at most ``bumps + 2``;
* static clutter edges, i.e. oriented half-plane steps;
* moving Gaussian targets whose per-frame amplitude is found by bisection
  so that the measured SCR of the final frame matches the request;
* i.i.d. Gaussian noise.

Frames are clamped to [0, 255] and rounded to 8 bits unless
``quantize=False``.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import SceneSpecError
from .metrics import NEIGHBORHOOD, OMEGA, TargetAnnotation, scr

__all__ = [
    "BackgroundSpec",
    "ClutterSpec",
    "TargetSpec",
    "SceneSpec",
    "GroundTruth",
    "generate",
    "standard_scene",
    "homogeneous_region",
    "edge_region",
    "target_box",
]

MASK_FRACTION = 0.01


@dataclass
class BackgroundSpec:
    level: float = 20.0
    plane_amplitude: float = 10.0
    plane_angle: float = 0.6
    drift: tuple = (0.2, 0.1)  # px/frame, (rows, cols)
    bump_count: int = 3
    bump_scale: float = 8.0
    bump_amplitude: float = 10.0
    bump_modulation: float = 0.15


@dataclass
class ClutterSpec:
    """Static edges; ``edges`` lists ``(row, col, angle)`` of each step line.

    The step is ``step_amplitude`` on the side the unit normal
    ``(sin(angle), cos(angle))`` points to.  When ``edges`` is None,
    ``edge_count`` lines are drawn from the scene seed.
    """

    edge_count: int = 2
    step_amplitude: float = 15.0
    edges: list = None


@dataclass
class TargetSpec:
    start: tuple  # (row, col) at frame 0
    velocity: tuple = (0.5, 0.5)  # px/frame
    sigma: float = 1.0
    scr: float = 8.0


@dataclass
class SceneSpec:
    dims: tuple = (64, 64, 30)
    background: BackgroundSpec = field(default_factory=BackgroundSpec)
    clutter: ClutterSpec = field(default_factory=ClutterSpec)
    targets: list = field(default_factory=list)
    noise_std: float = 1.0
    seed: int = 0
    quantize: bool = True

    def __post_init__(self):
        if isinstance(self.background, dict):
            self.background = BackgroundSpec(**self.background)
        if isinstance(self.clutter, dict):
            self.clutter = ClutterSpec(**self.clutter)
        self.targets = [TargetSpec(**t) if isinstance(t, dict) else t for t in self.targets]
        self.dims = tuple(int(d) for d in self.dims)
        if len(self.dims) != 3 or min(self.dims) < 1:
            raise SceneSpecError(f"dims must be three positive ints, got {self.dims}")
        if self.noise_std < 0:
            raise SceneSpecError("noise_std must be non-negative")
        n1, n2, nf = self.dims
        for i, tgt in enumerate(self.targets):
            if not tgt.scr > 0:
                raise SceneSpecError(f"target {i}: requested SCR must be positive")
            if not tgt.sigma > 0:
                raise SceneSpecError(f"target {i}: sigma must be positive")
            for k in (0, nf - 1):
                r, c = _position(tgt, k)
                if not (0 <= r <= n1 - 1 and 0 <= c <= n2 - 1):
                    raise SceneSpecError(f"target {i} leaves the frame at frame {k}")

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def to_dict(self):
        return asdict(self)


@dataclass
class GroundTruth:
    """Per-frame target positions and masks.

    ``centroids[k]`` lists the ``(row, col)`` of every target on frame ``k``,
    ``masks[k]`` marks pixels where some target reaches 1% of its peak,
    ``amplitudes[i][k]`` is the peak added for target ``i`` on frame ``k``
    and ``annotations`` holds one box per target per frame.
    """

    centroids: list
    masks: list
    amplitudes: list
    annotations: list
    edges: list
    background: np.ndarray  # noiseless background + clutter, (n1, n2, n_frames)
    target_layer: np.ndarray  # noiseless targets, (n1, n2, n_frames)


def _position(tgt, k):
    return (tgt.start[0] + k * tgt.velocity[0], tgt.start[1] + k * tgt.velocity[1])


def _grid(n1, n2):
    return np.mgrid[0:n1, 0:n2].astype(np.float64)


def _blob(rows, cols, center, sigma):
    d2 = (rows - center[0]) ** 2 + (cols - center[1]) ** 2
    return np.exp(-0.5 * d2 / sigma ** 2)


def _random_edges(rng, n1, n2, count):
    edges = []
    for _ in range(count):
        r = rng.uniform(0.2, 0.8) * (n1 - 1)
        c = rng.uniform(0.2, 0.8) * (n2 - 1)
        edges.append((float(r), float(c), float(rng.uniform(0.0, math.pi))))
    return edges


def edge_distance(edge, row, col):
    """Signed distance from ``(row, col)`` to an edge line."""
    r0, c0, ang = edge
    return (row - r0) * math.sin(ang) + (col - c0) * math.cos(ang)


def _background(spec, rng):
    n1, n2, nf = spec.dims
    bg = spec.background
    rows, cols = _grid(n1, n2)
    ur, uc = math.sin(bg.plane_angle), math.cos(bg.plane_angle)
    scale = max(n1, n2)
    centers = [(rng.uniform(0, n1 - 1), rng.uniform(0, n2 - 1)) for _ in range(bg.bump_count)]
    phases = rng.uniform(0, 2 * math.pi, size=bg.bump_count)
    bumps = [_blob(rows, cols, c, bg.bump_scale) for c in centers]
    out = np.empty((n1, n2, nf))
    for k in range(nf):
        dr, dc = k * bg.drift[0], k * bg.drift[1]
        plane = ((rows - dr - 0.5 * (n1 - 1)) * ur + (cols - dc - 0.5 * (n2 - 1)) * uc) / scale
        frame = bg.level + bg.plane_amplitude * plane
        for bump, ph in zip(bumps, phases):
            mod = 1.0 + bg.bump_modulation * math.sin(2 * math.pi * k / max(nf, 1) + ph)
            frame = frame + bg.bump_amplitude * mod * bump
        out[:, :, k] = frame
    return out


def _clutter(spec, edges):
    n1, n2, _ = spec.dims
    rows, cols = _grid(n1, n2)
    layer = np.zeros((n1, n2))
    for edge in edges:
        layer += spec.clutter.step_amplitude * (edge_distance(edge, rows, cols) > 0)
    return layer


def _finish(x, quantize):
    x = np.clip(x, 0.0, 255.0)
    return np.rint(x) if quantize else x


def target_box(center, sigma, shape):
    """Box ``(r0, c0, r1, c1)`` covering a Gaussian target down to 1% of its peak."""
    # pixels with exp(-d^2 / 2 sigma^2) >= MASK_FRACTION lie within this radius
    rad = sigma * math.sqrt(2.0 * math.log(1.0 / MASK_FRACTION))
    r0 = max(int(math.ceil(center[0] - rad)), 0)
    c0 = max(int(math.ceil(center[1] - rad)), 0)
    r1 = min(int(math.floor(center[0] + rad)) + 1, shape[0])
    c1 = min(int(math.floor(center[1] + rad)) + 1, shape[1])
    return r0, c0, r1, c1


def _solve_amplitude(base, blob, ann, requested, quantize, rtol=0.01, max_iter=80):
    """Bisection on the peak amplitude so that SCR(final frame) ~= requested."""

    def measured(amp):
        return scr(_finish(base + amp * blob, quantize), ann, OMEGA)

    headroom = 255.0 - float(np.max(base[blob >= MASK_FRACTION]))
    hi = headroom
    if hi <= 0 or measured(hi) < requested * (1 - rtol):
        raise SceneSpecError(
            f"SCR {requested} is not reachable without saturating the 8-bit container")
    lo = 0.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        val = measured(mid)
        if abs(val - requested) <= rtol * requested:
            return mid
        if val < requested:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def generate(spec):
    """Render a scene.

    Returns
    -------
    frames : list of ndarray
        ``uint8`` frames when ``spec.quantize`` is set, float64 otherwise.
    gt : GroundTruth
    """
    n1, n2, nf = spec.dims
    rng = np.random.default_rng(spec.seed)
    edges = spec.clutter.edges
    if edges is None:
        edges = _random_edges(rng, n1, n2, spec.clutter.edge_count)
    edges = [tuple(float(v) for v in e) for e in edges]
    background = _background(spec, rng) + _clutter(spec, edges)[:, :, None]
    noise_rng = np.random.default_rng([spec.seed, 1])
    noise = noise_rng.normal(0.0, spec.noise_std, size=(n1, n2, nf)) if spec.noise_std > 0 \
        else np.zeros((n1, n2, nf))

    rows, cols = _grid(n1, n2)
    targets = np.zeros((n1, n2, nf))
    frames, centroids, masks, annotations = [], [], [], []
    amplitudes = [[] for _ in spec.targets]
    for k in range(nf):
        base = background[:, :, k] + noise[:, :, k]
        mask = np.zeros((n1, n2), dtype=bool)
        cents = []
        for i, tgt in enumerate(spec.targets):
            center = _position(tgt, k)
            blob = _blob(rows, cols, center, tgt.sigma)
            ann = TargetAnnotation(frame=k, bbox=target_box(center, tgt.sigma, (n1, n2)),
                                   d=NEIGHBORHOOD, centroid=center)
            amp = _solve_amplitude(base, blob, ann, tgt.scr, spec.quantize)
            base = base + amp * blob
            targets[:, :, k] += amp * blob
            mask |= blob >= MASK_FRACTION
            cents.append(center)
            amplitudes[i].append(amp)
            annotations.append(ann)
        out = _finish(base, spec.quantize)
        frames.append(out.astype(np.uint8) if spec.quantize else out)
        centroids.append(cents)
        masks.append(mask)
    gt = GroundTruth(centroids=centroids, masks=masks, amplitudes=amplitudes,
                     annotations=annotations, edges=edges, background=background,
                     target_layer=targets)
    return frames, gt


def standard_scene(seed, scr_in=8.0, noise_std=5.0, dims=(64, 64, 30), n_targets=1,
                   n_edges=2, sigma=1.0, speed=(0.5, 1.0), edge_clearance=6.0, margin=8.0):
    """Seeded scene recipe used by the benchmarks.

    Edges are drawn at random; each target gets a random start and a
    velocity of random direction with magnitude in ``speed``, redrawn until
    its whole path keeps ``margin`` px from the border and
    ``edge_clearance`` px from every edge line.
    """
    n1, n2, nf = dims
    rng = np.random.default_rng([seed, 7])
    edges = _random_edges(rng, n1, n2, n_edges)
    targets = []
    for _ in range(n_targets):
        for _attempt in range(10000):
            start = (rng.uniform(margin, n1 - 1 - margin), rng.uniform(margin, n2 - 1 - margin))
            ang = rng.uniform(0, 2 * math.pi)
            mag = rng.uniform(*speed)
            tgt = TargetSpec(start=start, velocity=(mag * math.sin(ang), mag * math.cos(ang)),
                             sigma=sigma, scr=scr_in)
            path = [_position(tgt, k) for k in range(nf)]
            inside = all(margin <= r <= n1 - 1 - margin and margin <= c <= n2 - 1 - margin
                         for r, c in path)
            clear = all(abs(edge_distance(e, r, c)) >= edge_clearance
                        for e in edges for r, c in path)
            if inside and clear:
                targets.append(tgt)
                break
        else:
            raise SceneSpecError("could not place a target away from the edges")
    return SceneSpec(dims=dims, clutter=ClutterSpec(edge_count=n_edges, edges=edges),
                     targets=targets, noise_std=noise_std, seed=seed)


def homogeneous_region(spec, gt, size=8, clearance=6.0):
    """A ``size x size`` box far from edges and targets, or None."""
    n1, n2, _ = spec.dims
    target_mask = np.any(np.stack(gt.masks), axis=0)
    best = None
    for r0 in range(0, n1 - size + 1, 2):
        for c0 in range(0, n2 - size + 1, 2):
            rc, cc = r0 + 0.5 * (size - 1), c0 + 0.5 * (size - 1)
            reach = clearance + size / math.sqrt(2)
            if any(abs(edge_distance(e, rc, cc)) < reach for e in gt.edges):
                continue
            if target_mask[max(r0 - 4, 0):r0 + size + 4, max(c0 - 4, 0):c0 + size + 4].any():
                continue
            best = (r0, c0, r0 + size, c0 + size)
            return best
    return best


def edge_region(spec, gt, edge_index=0, size=8):
    """A ``size x size`` box centred on a point of an edge line inside the frame."""
    n1, n2, _ = spec.dims
    r, c, ang = gt.edges[edge_index]
    # walk along the line to the point nearest the image centre
    tr, tc = math.cos(ang), -math.sin(ang)
    s = (0.5 * (n1 - 1) - r) * tr + (0.5 * (n2 - 1) - c) * tc
    rc, cc = r + s * tr, c + s * tc
    r0 = int(round(rc - size / 2))
    c0 = int(round(cc - size / 2))
    r0 = min(max(r0, 0), n1 - size)
    c0 = min(max(c0, 0), n2 - size)
    return r0, c0, r0 + size, c0 + size
