"""Sequence, image and CSV files.

A sequence is either a raw cube file or a directory of same-size PGM/PNG
frames read in lexicographic order.  The raw cube layout is the 4-byte
magic ``SDD1``, three little-endian ``u32`` dims ``n1 n2 n3`` and then
``n1 * n2 * n3`` little-endian ``float32`` values, frame 0 first, each
frame row-major.

Every writer goes through a temporary file in the destination directory
followed by ``os.replace``, so readers never see a partial file.
"""

import csv
import io
import os
import struct
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import SequenceIOError

__all__ = [
    "MAGIC",
    "IMAGE_SUFFIXES",
    "atomic_writer",
    "write_bytes",
    "write_cube",
    "read_cube",
    "read_image",
    "write_image",
    "write_unit_image",
    "write_mask",
    "list_frames",
    "load_sequence",
    "write_csv",
    "read_csv",
]

MAGIC = b"SDD1"
_HEADER = struct.Struct("<4sIII")
IMAGE_SUFFIXES = (".pgm", ".png")


@contextmanager
def atomic_writer(path, mode="wb"):
    """Open a temporary sibling of ``path`` and move it into place on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        kw = {"newline": ""} if "b" not in mode else {}
        with os.fdopen(fd, mode, **kw) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def write_bytes(path, data):
    with atomic_writer(path) as fh:
        fh.write(data)


def write_cube(path, frames):
    """Write frames (a list of 2-D arrays or an n1 x n2 x n3 array) as a raw cube."""
    cube = _as_cube(frames)
    n1, n2, n3 = cube.shape
    payload = np.ascontiguousarray(np.moveaxis(cube, 2, 0), dtype="<f4").tobytes()
    write_bytes(path, _HEADER.pack(MAGIC, n1, n2, n3) + payload)


def read_cube(path):
    """Read a raw cube file into a float32 array of shape (n1, n2, n3)."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise SequenceIOError(f"{path}: {exc.strerror or exc}") from exc
    if len(data) < _HEADER.size:
        raise SequenceIOError(f"{path}: file too short for a cube header")
    magic, n1, n2, n3 = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SequenceIOError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 4 * n1 * n2 * n3
    if len(data) != expected:
        raise SequenceIOError(f"{path}: expected {expected} bytes, found {len(data)}")
    flat = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    return np.moveaxis(flat.reshape(n3, n1, n2), 0, 2).astype(np.float32)


def _as_cube(frames):
    if isinstance(frames, np.ndarray) and frames.ndim == 3:
        return frames
    return np.stack([np.asarray(f) for f in frames], axis=2)


def read_image(path):
    """Read an 8- or 16-bit grayscale PGM/PNG as ``uint8`` or ``uint16``."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            mode = im.mode
            arr = np.array(im)
    except (OSError, ValueError) as exc:
        raise SequenceIOError(f"{path}: cannot read image ({exc})") from exc
    if mode == "L":
        return arr.astype(np.uint8)
    if mode.startswith("I"):
        if arr.min() < 0 or arr.max() > 65535:
            raise SequenceIOError(f"{path}: values outside the 16-bit range")
        return arr.astype(np.uint16)
    raise SequenceIOError(f"{path}: unsupported image mode {mode!r} (grayscale only)")


def write_image(path, arr):
    """Write a ``uint8`` or ``uint16`` 2-D array; the suffix picks PGM or PNG."""
    path = Path(path)
    arr = np.asarray(arr)
    if arr.ndim != 2 or arr.dtype not in (np.uint8, np.uint16):
        raise SequenceIOError(f"{path}: need a 2-D uint8/uint16 array, got {arr.dtype} {arr.shape}")
    fmt = {".pgm": "PPM", ".png": "PNG"}.get(path.suffix.lower())
    if fmt is None:
        raise SequenceIOError(f"{path}: unknown image suffix")
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format=fmt)
    write_bytes(path, buf.getvalue())


def write_unit_image(path, img):
    """Write an image in [0, 1] as 16 bits (scaled by 65535, clipped)."""
    img = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    write_image(path, np.rint(img * 65535.0).astype(np.uint16))


def write_mask(path, mask):
    write_image(path, np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8))


def list_frames(directory):
    directory = Path(directory)
    return sorted(p for p in directory.iterdir()
                  if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def load_sequence(path):
    """Frames of a sequence as float64 images in [0, 1].

    Image frames are divided by their container maximum (255 or 65535).
    Raw cube values are taken as already normalized.

    Raises
    ------
    SequenceIOError
        Missing path, unreadable frame, bad cube magic or a frame whose
        size differs from the first; the message names the file.
    """
    path = Path(path)
    if not path.exists():
        raise SequenceIOError(f"{path}: no such file or directory")
    if path.is_file():
        cube = read_cube(path).astype(np.float64)
        return [cube[:, :, k] for k in range(cube.shape[2])]
    files = list_frames(path)
    if not files:
        raise SequenceIOError(f"{path}: no PGM/PNG frames found")
    frames = []
    for f in files:
        img = read_image(f)
        if frames and img.shape != frames[0].shape:
            raise SequenceIOError(f"{f}: size {img.shape} differs from {frames[0].shape}")
        scale = 255.0 if img.dtype == np.uint8 else 65535.0
        frames.append(img.astype(np.float64) / scale)
    return frames


def write_csv(path, header, rows):
    with atomic_writer(path, "w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def read_csv(path):
    """Rows of a CSV file as dicts keyed by the header."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            return list(csv.DictReader(fh))
    except OSError as exc:
        raise SequenceIOError(f"{path}: {exc.strerror or exc}") from exc
