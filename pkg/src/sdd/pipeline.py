"""End-to-end detection on an image sequence.

The sequence is cut into cubes of ``cube_len`` frames; for every cube the
per-frame ASCE maps are stacked into the enhancement factor, the cube is
decomposed, and each target slice is segmented with the threshold
``max(c_min, mean + d_thresh * std)``.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np
from scipy import ndimage

from .errors import ArgumentError, SolverFailure
from .metrics import EIGHT_CONNECTED
from .saliency import AsceParams, asce_stack, enhancement_factor
from .solver import SolverConfig, decompose

__all__ = [
    "Detection",
    "PipelineConfig",
    "CubeWindow",
    "PipelineResult",
    "as_unit_frames",
    "clip_cubes",
    "segment_targets",
    "detect_cube",
    "detect_sequence",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Detection:
    """One connected component of a segmented target slice.

    ``bbox`` is ``(r0, c0, r1, c1)`` with exclusive ends; ``score`` is the
    largest absolute target intensity in the component.
    """

    frame: int
    centroid: tuple
    bbox: tuple
    score: float
    area: int


@dataclass(frozen=True)
class PipelineConfig:
    cube_len: int = 30
    stride: int = None
    c_min: float = 0.1
    d_thresh: float = 20.0
    solver: SolverConfig = field(default_factory=SolverConfig)
    asce: AsceParams = field(default_factory=AsceParams)

    def __post_init__(self):
        if self.stride is None:
            object.__setattr__(self, "stride", self.cube_len)
        if self.cube_len < 2:
            raise ArgumentError("cube_len must be >= 2")
        if not 1 <= self.stride <= self.cube_len:
            raise ArgumentError("stride must lie in [1, cube_len]")
        if self.c_min < 0 or self.d_thresh < 0:
            raise ArgumentError("c_min and d_thresh must be non-negative")

    def replace(self, **changes):
        return replace(self, **changes)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls) if f.name not in ("solver", "asce")]


@dataclass
class CubeWindow:
    """A cube cut from the sequence.

    ``valid[k]`` is False for padding slices and for frames already
    covered by an earlier window; only valid slices are segmented.
    """

    data: np.ndarray
    start: int
    valid: np.ndarray

    @property
    def frames(self):
        return [self.start + k for k in range(self.data.shape[2]) if self.valid[k]]


@dataclass
class PipelineResult:
    detections: list
    target_frames: list
    background_frames: list
    masks: list
    traces: list
    errors: list = field(default_factory=list)


def as_unit_frames(frames):
    """Promote frames to float64 in [0, 1].

    8- and 16-bit integer frames are divided by their container maximum;
    float frames are taken as already normalized.
    """
    out = []
    for f in frames:
        f = np.asarray(f)
        if f.dtype == np.uint8:
            out.append(f.astype(np.float64) / 255.0)
        elif f.dtype == np.uint16:
            out.append(f.astype(np.float64) / 65535.0)
        else:
            out.append(f.astype(np.float64))
    return out


def clip_cubes(frames, cube_len, stride=None):
    """Cut the sequence into windows of ``cube_len`` frames.

    The last window is padded by repeating the final frame when the
    sequence runs out.
    """
    stride = cube_len if stride is None else stride
    if len(frames) < 2:
        raise ArgumentError("need at least two frames")
    if cube_len < 2 or not 1 <= stride <= cube_len:
        raise ArgumentError("invalid cube_len / stride")
    frames = [np.asarray(f, dtype=np.float64) for f in frames]
    shape = frames[0].shape
    for i, f in enumerate(frames):
        if f.shape != shape:
            raise ArgumentError(f"frame {i} has shape {f.shape}, expected {shape}")
    n = len(frames)
    starts = [0]
    while starts[-1] + cube_len < n:
        starts.append(starts[-1] + stride)
    windows = []
    covered = 0
    for s in starts:
        idx = [min(s + k, n - 1) for k in range(cube_len)]
        valid = np.array([s + k < n and s + k >= covered for k in range(cube_len)])
        windows.append(CubeWindow(data=np.stack([frames[i] for i in idx], axis=2),
                                  start=s, valid=valid))
        covered = min(s + cube_len, n)
    return windows


def segment_targets(t_slice, c_min=0.1, d_thresh=20.0, frame=0):
    """Threshold a target slice and list its 8-connected components.

    Returns
    -------
    mask : ndarray of bool
    detections : list of Detection
        Ordered by (row, col) of the centroid.
    """
    t_slice = np.asarray(t_slice, dtype=np.float64)
    mag = np.abs(t_slice)
    thr = max(c_min, float(t_slice.mean() + d_thresh * t_slice.std()))
    mask = mag >= thr
    labels, n = ndimage.label(mask, structure=EIGHT_CONNECTED)
    dets = []
    if n:
        idx = np.arange(1, n + 1)
        cents = ndimage.center_of_mass(mag, labels, idx)
        scores = ndimage.maximum(mag, labels, idx)
        areas = ndimage.sum_labels(np.ones_like(mag), labels, idx)
        boxes = ndimage.find_objects(labels)
        for cen, sc, ar, box in zip(cents, scores, areas, boxes):
            dets.append(Detection(
                frame=int(frame),
                centroid=(float(cen[0]), float(cen[1])),
                bbox=(box[0].start, box[1].start, box[0].stop, box[1].stop),
                score=float(sc),
                area=int(ar),
            ))
    dets.sort(key=lambda d: (d.centroid[0], d.centroid[1]))
    return mask, dets


def detect_cube(cube, cfg):
    """Enhancement factor, decomposition and target/background cubes for one cube."""
    w = enhancement_factor(asce_stack(cube, cfg.asce))
    return decompose(cube, w, cfg.solver)


def _worker_count(workers):
    if workers is None or workers <= 0:
        import os
        return os.cpu_count() or 1
    return workers


def detect_sequence(frames, cfg=None, workers=1):
    """Detect small targets on every frame of a sequence.

    Parameters
    ----------
    frames : list of 2-D arrays
        Integer frames are normalized by their container maximum, float
        frames are assumed to lie in [0, 1] already.
    cfg : PipelineConfig, optional
    workers : int
        Cubes decomposed concurrently; 0 means one per CPU.  Results do not
        depend on this value.

    Returns
    -------
    PipelineResult
        Detections in frame order, the per-frame target and background
        images and masks, and one solver trace per cube.

    Raises
    ------
    SolverFailure
        When a cube fails; ``exc.partial`` holds the result of the cubes
        that completed and the message names the failing cube.
    """
    cfg = cfg or PipelineConfig()
    frames = as_unit_frames(frames)
    windows = clip_cubes(frames, cfg.cube_len, cfg.stride)
    n = len(frames)

    def run(win):
        return detect_cube(win.data, cfg)

    workers = _worker_count(workers)
    if workers == 1 or len(windows) == 1:
        outcomes = []
        for win in windows:
            try:
                outcomes.append(run(win))
            except SolverFailure as exc:
                outcomes.append(exc)
                break
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run, win) for win in windows]
            outcomes = []
            for fut in futures:
                try:
                    outcomes.append(fut.result())
                except SolverFailure as exc:
                    outcomes.append(exc)

    targets = [None] * n
    backgrounds = [None] * n
    masks = [None] * n
    detections, traces, errors = [], [], []
    for ci, (win, out) in enumerate(zip(windows, outcomes)):
        if isinstance(out, SolverFailure):
            errors.append((ci, str(out)))
            traces.append(out.trace)
            continue
        f, t, trace = out
        traces.append(trace)
        for k in range(win.data.shape[2]):
            if not win.valid[k]:
                continue
            g = win.start + k
            targets[g] = t[:, :, k]
            backgrounds[g] = f[:, :, k]
            masks[g], dets = segment_targets(t[:, :, k], cfg.c_min, cfg.d_thresh, frame=g)
            detections.extend(dets)
    detections.sort(key=lambda d: (d.frame, d.centroid[0], d.centroid[1]))
    result = PipelineResult(detections=detections, target_frames=targets,
                            background_frames=backgrounds, masks=masks,
                            traces=traces, errors=errors)
    if errors:
        ci, msg = errors[0]
        exc = SolverFailure(f"cube {ci} (frames from {windows[ci].start}) failed: {msg}",
                            traces[ci] if ci < len(traces) else None)
        exc.partial = result
        raise exc
    return result
