"""Reading frames and frame sequences from disk, writing maps back out."""

import os
from pathlib import Path

import cv2
import numpy as np

from .imgproc import as_real_field, to_grayscale

IMAGE_EXTS = {".png", ".ppm", ".pgm", ".pnm"}

# plain-text sequence descriptor that overrides directory order
SEQUENCE_FILE = "frames.txt"


def read_frame(path):
    """Load an 8/16-bit, 1/3-channel PNG or binary PPM/PGM as a gray frame.

    Integer samples are divided by the maximum of their type. Colour frames
    are converted with Rec. 601 luma; an alpha channel is dropped.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image: {path}")
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise OSError(f"cannot decode image: {path}")
    if img.dtype == np.uint8:
        scale = 255.0
    elif img.dtype == np.uint16:
        scale = 65535.0
    else:
        raise OSError(f"unsupported sample type {img.dtype} in {path}")
    data = img.astype(np.float64) / scale
    if data.ndim == 2:
        return data
    if data.shape[2] == 1:
        return data[..., 0]
    if data.shape[2] in (3, 4):
        # cv2 decodes to BGR(A)
        return to_grayscale(data[..., 2], data[..., 1], data[..., 0])
    raise OSError(f"unsupported channel count {data.shape[2]} in {path}")


def to_uint8(values):
    """Quantize a [0, 1] map to 8 bits with ``round(255 * v)``."""
    v = np.clip(as_real_field(values), 0.0, 1.0)
    return np.rint(255.0 * v).astype(np.uint8)


def write_png8(path, values):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), to_uint8(values)):
        raise OSError(f"cannot write {path}")


def write_png16(path, values, lo=0.0, hi=1.0):
    """Write ``values`` linearly rescaled from ``[lo, hi]`` to a 16-bit PNG."""
    if not hi > lo:
        raise ValueError("hi must exceed lo")
    v = (np.asarray(values, dtype=np.float64) - lo) / (hi - lo)
    out = np.rint(65535.0 * np.clip(v, 0.0, 1.0)).astype(np.uint16)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), out):
        raise OSError(f"cannot write {path}")


def write_frame(path, frame, bits=8):
    """Save a gray frame as PNG/PGM with 8 or 16 bits per sample."""
    if bits == 8:
        write_png8(path, frame)
    elif bits == 16:
        write_png16(path, frame)
    else:
        raise ValueError(f"bits must be 8 or 16, got {bits}")


def list_sequence(directory):
    """Return the ordered frame paths of a sequence directory.

    If the directory holds a ``frames.txt`` descriptor (one filename per
    line, blank lines and ``#`` comments ignored), that order is used.
    Otherwise all image files are taken in lexicographic order.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"not a directory: {directory}")
    descriptor = directory / SEQUENCE_FILE
    if descriptor.is_file():
        names = []
        for line in descriptor.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                names.append(line)
        paths = [directory / n for n in names]
    else:
        paths = sorted(
            (p for p in directory.iterdir()
             if p.is_file() and p.suffix.lower() in IMAGE_EXTS),
            key=lambda p: os.fsencode(p.name),
        )
    if not paths:
        raise FileNotFoundError(f"no frames in {directory}")
    return paths
